#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace coex {

/// Counter-based stream identity. Every draw is a pure function of these
/// four values, so worker scheduling can never perturb it.
struct DrawStream {
  std::uint64_t master_seed = 0;
  std::string_view class_name;
  std::uint64_t iteration = 0;
  std::uint64_t round = 0;
};

/// seed = mix(mix(mix(master ^ fnv1a(class)) ^ iteration) ^ round), where
/// mix is the SplitMix64 finalizer.
std::uint64_t derive_stream_seed(const DrawStream& stream);

/// Unbiased integer in [0, n) by rejection. Uses only raw engine output so
/// results do not depend on the standard library's distributions.
std::uint64_t bounded_draw(std::mt19937_64& engine, std::uint64_t n);

/// Indices of a uniform `count`-subset of [0, n). A partial Fisher-Yates
/// shuffle over an identity permutation, with swap target
/// i + bounded_draw(n - i) at step i; the chosen prefix is returned sorted.
/// count >= n returns 0..n-1 without consuming randomness.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, const DrawStream& stream);

}  // namespace coex
