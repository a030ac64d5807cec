#pragma once

#include "coex/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace coex {

/// Cosine similarity computed in double regardless of the storage scalar.
/// Throws DimensionMismatch on size mismatch and ValidationError on a
/// zero-norm argument.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size())
    throw DimensionMismatch("cosine: sizes " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("cosine: zero-norm vector");
  return std::clamp(ad.dot(bd) / (na * nb), -1.0, 1.0);
}

inline double cosine(const Embedding& a, const Embedding& b) { return cosine(a.vector, b.vector); }

/// Mean of the k largest values. Ties at the cut are resolved by position,
/// earlier entries first. Fewer than k values averages all of them.
inline double top_k_mean(std::span<const double> values, int k) {
  if (values.empty()) throw ValidationError("top_k_mean: no values");
  if (k < 1) throw ValidationError("top_k_mean: k must be >= 1");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), values.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t l, std::size_t r) {
                      return values[l] != values[r] ? values[l] > values[r] : l < r;
                    });
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += values[order[i]];
  return sum / static_cast<double>(take);
}

/// score(p, c): average of the top-k cosines between x_p and the members of X_c.
double pair_class_score(const Embedding& x_p, const ExemplarSet& exemplars, int k);

/// s = s_cls + lambda * pair_score.
double fuse_score(double s_cls, double pair_score, double lambda_weight);

}  // namespace coex
