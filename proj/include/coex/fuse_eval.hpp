#pragma once

#include "coex/core.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coex {

/// Per-class scores exported by an external classifier for one pair.
struct ClassifierScores {
  std::string pair_id;
  std::map<std::string, double> scores;
};

struct Prediction {
  std::string pair_id;
  std::string predicted_class;
  std::map<std::string, double> fused_scores;
};

/// fused[c] = s_cls[c] + lambda * score(x_p, X_c); argmax with ties to the
/// lexicographically smallest class name.
Prediction fuse_predict(const ClassifierScores& cls, const Embedding& x_p, const ExemplarState& sets,
                        const ExpansionConfig& config);

/// Highest-scoring class, ties by class name ascending.
std::string argmax_class(const std::map<std::string, double>& scores);

/// Row = gold class, column = predicted class, both indexed by `classes`.
using ConfusionMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

ConfusionMatrix confusion_matrix(std::span<const Prediction> preds,
                                 const std::map<std::string, std::string>& gold,
                                 std::span<const std::string> classes);

struct Metrics {
  double accuracy = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::size_t total = 0;
  std::size_t correct = 0;
};

/// Accuracy over all instances; micro P/R/F1 treat `negative_label` as
/// "no prediction" on both the predicted and gold side.
Metrics metrics(std::span<const Prediction> preds, const std::map<std::string, std::string>& gold,
                const std::optional<std::string>& negative_label);

/// CSV with a header row and a header column of class names.
std::string confusion_to_csv(const ConfusionMatrix& m, std::span<const std::string> classes);

}  // namespace coex
