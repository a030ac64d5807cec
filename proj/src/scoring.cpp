#include "coex/scoring.hpp"

namespace coex {

double pair_class_score(const Embedding& x_p, const ExemplarSet& exemplars, int k) {
  if (exemplars.empty())
    throw ValidationError("pair_class_score: exemplar set " + exemplars.class_name() + " is empty");
  std::vector<double> cosines;
  cosines.reserve(exemplars.size());
  for (const auto& m : exemplars.members()) cosines.push_back(cosine(x_p, m.embedding));
  return top_k_mean(cosines, k);
}

double fuse_score(double s_cls, double pair_score, double lambda_weight) {
  if (!(lambda_weight >= 0.0)) throw ValidationError("fuse_score: lambda_weight must be >= 0");
  if (!std::isfinite(s_cls) || !std::isfinite(pair_score) || !std::isfinite(lambda_weight))
    throw ValidationError("fuse_score: non-finite input");
  return s_cls + lambda_weight * pair_score;
}

}  // namespace coex
