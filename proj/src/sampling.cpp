#include "coex/sampling.hpp"

#include "coex/hash.hpp"

#include <algorithm>
#include <numeric>

namespace coex {

std::uint64_t derive_stream_seed(const DrawStream& stream) {
  std::uint64_t s = mix64(stream.master_seed ^ fnv1a64(stream.class_name));
  s = mix64(s ^ stream.iteration);
  return mix64(s ^ stream.round);
}

std::uint64_t bounded_draw(std::mt19937_64& engine, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = engine();
    if (x >= threshold) return x % n;
  }
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, const DrawStream& stream) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) return idx;

  std::mt19937_64 engine(derive_stream_seed(stream));
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded_draw(engine, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace coex
