#include "coex/fuse_eval.hpp"

#include "coex/scoring.hpp"

#include <unordered_map>

namespace coex {

std::string argmax_class(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw ValidationError("argmax_class: no scores");
  // std::map iterates by name, so strict > keeps the smallest name on ties.
  auto best = scores.begin();
  for (auto it = std::next(scores.begin()); it != scores.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

Prediction fuse_predict(const ClassifierScores& cls, const Embedding& x_p, const ExemplarState& sets,
                        const ExpansionConfig& config) {
  if (cls.scores.size() != sets.size())
    throw ValidationError("fuse_predict: " + cls.pair_id + " scores " +
                          std::to_string(cls.scores.size()) + " classes, exemplar sets cover " +
                          std::to_string(sets.size()));
  Prediction p;
  p.pair_id = cls.pair_id;
  for (const auto& [name, s_cls] : cls.scores) {
    const auto it = sets.find(name);
    if (it == sets.end())
      throw ValidationError("fuse_predict: no exemplar set for class " + name);
    const double pair_score =
        config.lambda_weight == 0.0 ? 0.0 : pair_class_score(x_p, it->second, config.k);
    p.fused_scores[name] = fuse_score(s_cls, pair_score, config.lambda_weight);
  }
  p.predicted_class = argmax_class(p.fused_scores);
  return p;
}

namespace {

std::unordered_map<std::string, Eigen::Index> index_of(std::span<const std::string> classes) {
  std::unordered_map<std::string, Eigen::Index> idx;
  for (std::size_t i = 0; i < classes.size(); ++i) idx.emplace(classes[i], static_cast<Eigen::Index>(i));
  return idx;
}

const std::string& gold_for(const Prediction& p, const std::map<std::string, std::string>& gold) {
  const auto it = gold.find(p.pair_id);
  if (it == gold.end()) throw ValidationError("no gold label for pair " + p.pair_id);
  return it->second;
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const Prediction> preds,
                                 const std::map<std::string, std::string>& gold,
                                 std::span<const std::string> classes) {
  const auto idx = index_of(classes);
  const auto n = static_cast<Eigen::Index>(classes.size());
  ConfusionMatrix m = ConfusionMatrix::Zero(n, n);
  for (const auto& p : preds) {
    const auto& g = gold_for(p, gold);
    const auto gi = idx.find(g);
    const auto pi = idx.find(p.predicted_class);
    if (gi == idx.end()) throw ValidationError("unknown gold class " + g);
    if (pi == idx.end()) throw ValidationError("unknown predicted class " + p.predicted_class);
    ++m(gi->second, pi->second);
  }
  return m;
}

Metrics metrics(std::span<const Prediction> preds, const std::map<std::string, std::string>& gold,
                const std::optional<std::string>& negative_label) {
  if (preds.empty()) throw ValidationError("metrics: no predictions");
  Metrics out;
  std::size_t predicted_pos = 0;
  std::size_t gold_pos = 0;
  std::size_t true_pos = 0;
  for (const auto& p : preds) {
    const auto& g = gold_for(p, gold);
    const bool correct = g == p.predicted_class;
    out.correct += correct ? 1 : 0;
    const bool pred_is_pos = !negative_label || p.predicted_class != *negative_label;
    const bool gold_is_pos = !negative_label || g != *negative_label;
    predicted_pos += pred_is_pos ? 1 : 0;
    gold_pos += gold_is_pos ? 1 : 0;
    true_pos += (pred_is_pos && correct) ? 1 : 0;
  }
  out.total = preds.size();
  out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.total);
  out.micro_precision = predicted_pos ? static_cast<double>(true_pos) / static_cast<double>(predicted_pos) : 0.0;
  out.micro_recall = gold_pos ? static_cast<double>(true_pos) / static_cast<double>(gold_pos) : 0.0;
  const double denom = out.micro_precision + out.micro_recall;
  out.micro_f1 = denom > 0.0 ? 2.0 * out.micro_precision * out.micro_recall / denom : 0.0;
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

std::string confusion_to_csv(const ConfusionMatrix& m, std::span<const std::string> classes) {
  std::string out = "gold\\predicted";
  for (const auto& c : classes) out += "," + csv_field(c);
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += csv_field(classes[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + std::to_string(m(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace coex
