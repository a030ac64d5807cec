#pragma once

#include "coex/core.hpp"
#include "coex/sampling.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coex {

/// Members drawn from one class in one ensemble round.
struct SampleDraw {
  int round_index = 0;  // 1-based
  std::string class_name;
  std::vector<std::string> member_ids;
};

struct RoundOutcome {
  double r_pos = 0.0;      // r(p, c)
  double max_r_neg = 0.0;  // max over negatives of r(p, c_N)
  bool dominated = false;  // r_pos > max_r_neg
  bool operator==(const RoundOutcome&) const = default;
};

struct EnsembleResult {
  std::string pair_id;
  std::string class_name;
  double S = 0.0;
  std::vector<RoundOutcome> per_round;
};

/// Uniform draw without replacement of min(sample_size, |X_c|) members.
/// The round index in the result is `stream.round`.
SampleDraw sample_exemplars(const ExemplarSet& exemplars, int sample_size, const DrawStream& stream);

/// Mean cosine between x_p and the drawn members' analogous representations.
double sampled_positive_score(const Embedding& x_p, const SampleDraw& draw,
                              const EmbeddingStore& store);

/// Mean over negative classes of the mean cosine between x_p and each drawn
/// member's contrastive representation. `draws` must hold one draw per
/// negative class (matched by name).
double sampled_contrastive_score(const Embedding& x_p, const ContrastiveSet& contrastive,
                                 std::span<const SampleDraw> draws, const EmbeddingStore& store);

/// r(p, c) from the positive and contrastive sampled scores.
double pair_rank(double r_pos, double r_neg, RankCombine combine = RankCombine::geometric);

/// Draws for every class and round of one expansion iteration.
class DrawTable {
 public:
  DrawTable(const ExemplarState& state, const ExpansionConfig& config, std::uint64_t iteration);

  const SampleDraw& at(const std::string& class_name, int round) const;
  int rounds() const { return rounds_; }

 private:
  int rounds_ = 0;
  std::map<std::string, std::vector<SampleDraw>, std::less<>> draws_;
};

/// S(p, c) over config.ensemble_rounds rounds. For each negative c_N the
/// rank r(p, c_N) is computed with c_N in the positive role: its own draw
/// against analogous vectors and its own contrastive set against
/// contrastive vectors.
EnsembleResult ensemble_score(const Embedding& x_p, std::string_view pair_id,
                              const std::string& class_name, const ExemplarState& state,
                              const ContrastiveMap& contrastive, const ExpansionConfig& config,
                              const EmbeddingStore& store, const DrawTable& draws);

EnsembleResult ensemble_score(const Embedding& x_p, std::string_view pair_id,
                              const std::string& class_name, const ExemplarState& state,
                              const ContrastiveMap& contrastive, const ExpansionConfig& config,
                              const EmbeddingStore& store, std::uint64_t iteration = 1);

struct AuditRecord {
  int iteration = 0;
  EnsembleResult result;
};

struct IterationOutcome {
  ExemplarState state;
  std::vector<AuditRecord> additions;
};

struct ExpandOptions {
  /// Worker threads for candidate scoring; results do not depend on it.
  int jobs = 1;
  /// A candidate joins at most one class per iteration: the one where its S
  /// is highest (ties by class name).
  bool exclusive_assignment = true;
};

/// One expansion step. Candidates already in any set are skipped. Per class,
/// qualifying candidates (S > 0) are ranked by (S desc, pair id asc) and the
/// top config.additions_per_iteration are appended as expanded members.
/// x_p comes from the store's mention_context entry; new members carry
/// their analogous_pattern entry.
IterationOutcome expand_iteration(const ExemplarState& state, std::span<const std::string> candidates,
                                  const ContrastiveMap& contrastive, const ExpansionConfig& config,
                                  const EmbeddingStore& store, int iteration,
                                  const ExpandOptions& options = {});

struct ExpansionTrace {
  ExemplarState state;
  std::vector<AuditRecord> audit;
  std::vector<ContrastiveMap> contrastive_per_iteration;
};

/// Runs config.iterations rounds of (contrastive refresh, expand_iteration).
ExpansionTrace expand(const ExemplarState& seeds, std::span<const std::string> candidate_pool,
                      const ExpansionConfig& config, const EmbeddingStore& store,
                      const ExpandOptions& options = {});

/// Seeds exemplar sets from the store's analogous_pattern entries.
ExemplarState make_seed_state(const std::map<std::string, std::vector<std::string>>& seed_ids,
                              const EmbeddingStore& store);

/// JSON-lines: {iteration, class, pair_id, S, per_round:[{r_pos, max_r_neg, dominated}]}.
std::string audit_to_jsonl(std::span<const AuditRecord> audit);

}  // namespace coex
