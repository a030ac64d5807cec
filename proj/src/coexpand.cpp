#include "coex/coexpand.hpp"

#include "coex/classrank.hpp"
#include "coex/scoring.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace coex {

SampleDraw sample_exemplars(const ExemplarSet& exemplars, int sample_size, const DrawStream& stream) {
  if (exemplars.empty())
    throw ValidationError("sample_exemplars: exemplar set " + exemplars.class_name() + " is empty");
  if (sample_size < 1) throw ValidationError("sample_exemplars: sample_size must be >= 1");
  SampleDraw draw;
  draw.round_index = static_cast<int>(stream.round);
  draw.class_name = exemplars.class_name();
  for (auto i : sample_indices(exemplars.size(), static_cast<std::size_t>(sample_size), stream))
    draw.member_ids.push_back(exemplars[i].pair_id);
  return draw;
}

double sampled_positive_score(const Embedding& x_p, const SampleDraw& draw,
                              const EmbeddingStore& store) {
  if (draw.member_ids.empty()) throw ValidationError("sampled_positive_score: empty draw");
  double sum = 0.0;
  for (const auto& id : draw.member_ids)
    sum += cosine(x_p, store.get(id, Provenance::analogous_pattern));
  return sum / static_cast<double>(draw.member_ids.size());
}

double sampled_contrastive_score(const Embedding& x_p, const ContrastiveSet& contrastive,
                                 std::span<const SampleDraw> draws, const EmbeddingStore& store) {
  if (contrastive.negatives.empty())
    throw ValidationError("sampled_contrastive_score: " + contrastive.positive_class +
                          " has no contrastive classes");
  double outer = 0.0;
  for (const auto& neg : contrastive.negatives) {
    const auto it = std::find_if(draws.begin(), draws.end(),
                                 [&](const SampleDraw& d) { return d.class_name == neg; });
    if (it == draws.end())
      throw ValidationError("sampled_contrastive_score: no draw for contrastive class " + neg);
    if (it->member_ids.empty()) throw ValidationError("sampled_contrastive_score: empty draw for " + neg);
    double inner = 0.0;
    for (const auto& id : it->member_ids)
      inner += cosine(x_p, store.get(id, Provenance::contrastive_pattern));
    outer += inner / static_cast<double>(it->member_ids.size());
  }
  return outer / static_cast<double>(contrastive.negatives.size());
}

double pair_rank(double r_pos, double r_neg, RankCombine combine) {
  if (combine == RankCombine::arithmetic) return 0.5 * (r_pos + r_neg);
  return std::sqrt(std::max(r_pos, 0.0) * std::max(r_neg, 0.0));
}

// ---------------------------------------------------------------------------

DrawTable::DrawTable(const ExemplarState& state, const ExpansionConfig& config,
                     std::uint64_t iteration)
    : rounds_(config.ensemble_rounds) {
  for (const auto& [name, set] : state) {
    auto& rounds = draws_[name];
    rounds.reserve(static_cast<std::size_t>(rounds_));
    for (int t = 1; t <= rounds_; ++t)
      rounds.push_back(sample_exemplars(
          set, config.sample_size,
          DrawStream{config.master_seed, name, iteration, static_cast<std::uint64_t>(t)}));
  }
}

const SampleDraw& DrawTable::at(const std::string& class_name, int round) const {
  const auto it = draws_.find(class_name);
  if (it == draws_.end()) throw NotFound("draw table: unknown class " + class_name);
  if (round < 1 || round > rounds_) throw ValidationError("draw table: round out of range");
  return it->second[static_cast<std::size_t>(round - 1)];
}

namespace {

/// r(p, cls) in round t, with cls in the positive role.
double class_rank(const Embedding& x_p, const std::string& cls, int round,
                  const ContrastiveMap& contrastive, const ExpansionConfig& config,
                  const EmbeddingStore& store, const DrawTable& draws) {
  const auto cit = contrastive.find(cls);
  if (cit == contrastive.end()) throw NotFound("no contrastive set for class " + cls);
  const double pos = sampled_positive_score(x_p, draws.at(cls, round), store);

  std::vector<SampleDraw> neg_draws;
  neg_draws.reserve(cit->second.negatives.size());
  for (const auto& neg : cit->second.negatives) neg_draws.push_back(draws.at(neg, round));
  const double neg = sampled_contrastive_score(x_p, cit->second, neg_draws, store);
  return pair_rank(pos, neg, config.rank_combine);
}

/// Memoizes class_rank over (class, round) for one candidate so that a
/// class's rank is computed once whether it plays positive or negative.
class RankCache {
 public:
  RankCache(const Embedding& x_p, const ContrastiveMap& contrastive, const ExpansionConfig& config,
            const EmbeddingStore& store, const DrawTable& draws)
      : x_p_(x_p), contrastive_(contrastive), config_(config), store_(store), draws_(draws) {}

  double operator()(const std::string& cls, int round) {
    auto& slots = cache_[cls];
    if (slots.empty()) slots.assign(static_cast<std::size_t>(draws_.rounds()), kUnset);
    double& v = slots[static_cast<std::size_t>(round - 1)];
    if (std::isnan(v)) v = class_rank(x_p_, cls, round, contrastive_, config_, store_, draws_);
    return v;
  }

 private:
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  const Embedding& x_p_;
  const ContrastiveMap& contrastive_;
  const ExpansionConfig& config_;
  const EmbeddingStore& store_;
  const DrawTable& draws_;
  std::map<std::string, std::vector<double>, std::less<>> cache_;
};

EnsembleResult score_with_cache(RankCache& ranks, std::string_view pair_id,
                                const std::string& class_name, const ExemplarState& state,
                                const ContrastiveMap& contrastive, int rounds) {
  const auto sit = state.find(class_name);
  if (sit == state.end()) throw NotFound("ensemble_score: unknown class " + class_name);
  const auto cit = contrastive.find(class_name);
  if (cit == contrastive.end()) throw NotFound("ensemble_score: no contrastive set for " + class_name);
  const double bonus = sit->second.contains(pair_id) ? 1.0 : 0.0;

  EnsembleResult out;
  out.pair_id = std::string(pair_id);
  out.class_name = class_name;
  out.per_round.reserve(static_cast<std::size_t>(rounds));
  for (int t = 1; t <= rounds; ++t) {
    RoundOutcome o;
    o.r_pos = ranks(class_name, t);
    o.max_r_neg = -std::numeric_limits<double>::infinity();
    for (const auto& neg : cit->second.negatives) o.max_r_neg = std::max(o.max_r_neg, ranks(neg, t));
    o.dominated = o.r_pos > o.max_r_neg;
    if (o.dominated) out.S += o.r_pos + bonus;
    out.per_round.push_back(o);
  }
  return out;
}

}  // namespace

EnsembleResult ensemble_score(const Embedding& x_p, std::string_view pair_id,
                              const std::string& class_name, const ExemplarState& state,
                              const ContrastiveMap& contrastive, const ExpansionConfig& config,
                              const EmbeddingStore& store, const DrawTable& draws) {
  RankCache ranks(x_p, contrastive, config, store, draws);
  return score_with_cache(ranks, pair_id, class_name, state, contrastive, config.ensemble_rounds);
}

EnsembleResult ensemble_score(const Embedding& x_p, std::string_view pair_id,
                              const std::string& class_name, const ExemplarState& state,
                              const ContrastiveMap& contrastive, const ExpansionConfig& config,
                              const EmbeddingStore& store, std::uint64_t iteration) {
  const DrawTable draws(state, config, iteration);
  return ensemble_score(x_p, pair_id, class_name, state, contrastive, config, store, draws);
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

IterationOutcome expand_iteration(const ExemplarState& state, std::span<const std::string> candidates,
                                  const ContrastiveMap& contrastive, const ExpansionConfig& config,
                                  const EmbeddingStore& store, int iteration,
                                  const ExpandOptions& options) {
  config.validate();
  IterationOutcome out{state, {}};

  std::vector<std::string> pool;
  for (const auto& c : candidates) {
    const bool member = std::any_of(state.begin(), state.end(),
                                    [&](const auto& kv) { return kv.second.contains(c); });
    if (!member) pool.push_back(c);
  }
  if (pool.empty() || state.empty()) return out;

  const DrawTable draws(state, config, static_cast<std::uint64_t>(iteration));

  // scored[i][j]: candidate i against the j-th class of `state`.
  std::vector<std::vector<EnsembleResult>> scored(pool.size());
  parallel_for(pool.size(), options.jobs, [&](std::size_t i) {
    const Embedding& x_p = store.get(pool[i], Provenance::mention_context);
    RankCache ranks(x_p, contrastive, config, store, draws);
    auto& row = scored[i];
    row.reserve(state.size());
    for (const auto& [name, set] : state)
      row.push_back(score_with_cache(ranks, pool[i], name, state, contrastive, config.ensemble_rounds));
  });

  std::map<std::string, std::vector<const EnsembleResult*>> proposals;
  for (const auto& row : scored) {
    if (options.exclusive_assignment) {
      const EnsembleResult* best = nullptr;
      for (const auto& r : row)
        if (r.S > 0.0 && (best == nullptr || r.S > best->S)) best = &r;
      if (best) proposals[best->class_name].push_back(best);
    } else {
      for (const auto& r : row)
        if (r.S > 0.0) proposals[r.class_name].push_back(&r);
    }
  }

  for (auto& [name, list] : proposals) {
    std::sort(list.begin(), list.end(), [](const EnsembleResult* a, const EnsembleResult* b) {
      return a->S != b->S ? a->S > b->S : a->pair_id < b->pair_id;
    });
    if (list.size() > static_cast<std::size_t>(config.additions_per_iteration))
      list.resize(static_cast<std::size_t>(config.additions_per_iteration));
    auto& target = out.state.at(name);
    for (const auto* r : list) {
      target.add(r->pair_id, store.get(r->pair_id, Provenance::analogous_pattern),
                 MemberOrigin::expanded);
      out.additions.push_back({iteration, *r});
    }
  }
  return out;
}

ExpansionTrace expand(const ExemplarState& seeds, std::span<const std::string> candidate_pool,
                      const ExpansionConfig& config, const EmbeddingStore& store,
                      const ExpandOptions& options) {
  config.validate();
  for (const auto& [name, set] : seeds)
    if (set.seed_count() == 0) throw ValidationError("expand: class " + name + " has no seeds");

  ExpansionTrace trace{seeds, {}, {}};
  if (candidate_pool.empty()) return trace;
  for (int it = 1; it <= config.iterations; ++it) {
    auto contrastive = rank_contrastive_classes(trace.state, config.k, config.num_contrastive);
    auto step = expand_iteration(trace.state, candidate_pool, contrastive, config, store, it, options);
    trace.state = std::move(step.state);
    trace.audit.insert(trace.audit.end(), step.additions.begin(), step.additions.end());
    trace.contrastive_per_iteration.push_back(std::move(contrastive));
  }
  return trace;
}

ExemplarState make_seed_state(const std::map<std::string, std::vector<std::string>>& seed_ids,
                              const EmbeddingStore& store) {
  ExemplarState state;
  for (const auto& [name, ids] : seed_ids) {
    if (ids.empty()) throw ValidationError("class " + name + " has no seeds");
    ExemplarSet set(name);
    for (const auto& id : ids) set.add(id, store.get(id, Provenance::analogous_pattern), MemberOrigin::seed);
    state.emplace(name, std::move(set));
  }
  return state;
}

std::string audit_to_jsonl(std::span<const AuditRecord> audit) {
  std::string out;
  for (const auto& rec : audit) {
    nlohmann::ordered_json j;
    j["iteration"] = rec.iteration;
    j["class"] = rec.result.class_name;
    j["pair_id"] = rec.result.pair_id;
    j["S"] = rec.result.S;
    j["per_round"] = nlohmann::ordered_json::array();
    for (const auto& r : rec.result.per_round)
      j["per_round"].push_back({{"r_pos", r.r_pos}, {"max_r_neg", r.max_r_neg}, {"dominated", r.dominated}});
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace coex
