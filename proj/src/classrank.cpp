#include "coex/classrank.hpp"

#include "coex/scoring.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace coex {

namespace {

void sort_entries(std::vector<RankedClassList::Entry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score > b.score : a.class_name < b.class_name;
  });
}

}  // namespace

std::vector<std::string> RankedClassList::class_names() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.class_name);
  return out;
}

RankedClassList seed_class_ranking(const Embedding& seed_repr, const ExemplarState& class_index,
                                   int k, std::string seed_pair_id) {
  if (class_index.empty()) throw ValidationError("seed_class_ranking: empty class index");
  RankedClassList out;
  out.seed_pair_id = std::move(seed_pair_id);
  out.entries.reserve(class_index.size());
  for (const auto& [name, set] : class_index)
    out.entries.push_back({name, pair_class_score(seed_repr, set, k)});
  sort_entries(out.entries);
  return out;
}

RankedClassList aggregate_rankings(std::span<const RankedClassList> lists) {
  if (lists.empty()) throw ValidationError("aggregate_rankings: no lists");
  std::set<std::string> universe;
  for (const auto& e : lists.front().entries) universe.insert(e.class_name);
  if (universe.size() != lists.front().entries.size())
    throw ValidationError("aggregate_rankings: duplicate class in list");

  const auto n = static_cast<double>(universe.size());
  std::map<std::string, double> points;
  for (const auto& list : lists) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const auto& name = list.entries[i].class_name;
      if (!universe.contains(name) || !seen.insert(name).second)
        throw ValidationError("aggregate_rankings: inconsistent class universe at " + name);
      points[name] += n - static_cast<double>(i);
    }
    if (seen.size() != universe.size())
      throw ValidationError("aggregate_rankings: inconsistent class universe (list " +
                            list.seed_pair_id + ")");
  }

  RankedClassList out;
  out.seed_pair_id = "borda";
  for (const auto& [name, score] : points) out.entries.push_back({name, score});
  sort_entries(out.entries);
  return out;
}

ContrastiveSet select_contrastive(const std::string& positive_class,
                                  const RankedClassList& aggregated, int m) {
  if (m < 1) throw ValidationError("select_contrastive: m must be >= 1");
  const bool covered = std::any_of(aggregated.entries.begin(), aggregated.entries.end(),
                                   [&](const auto& e) { return e.class_name == positive_class; });
  if (!covered)
    throw ValidationError("select_contrastive: ranking does not cover " + positive_class);
  ContrastiveSet out;
  out.positive_class = positive_class;
  for (const auto& e : aggregated.entries) {
    if (out.negatives.size() == static_cast<std::size_t>(m)) break;
    if (e.class_name == positive_class) continue;
    out.negatives.push_back(e.class_name);
    out.scores.push_back(e.score);
  }
  return out;
}

ContrastiveMap rank_contrastive_classes(const ExemplarState& state, int k, int m) {
  ContrastiveMap out;
  for (const auto& [name, set] : state) {
    if (set.empty()) throw ValidationError("rank_contrastive_classes: class " + name + " is empty");
    std::vector<RankedClassList> lists;
    lists.reserve(set.size());
    for (const auto& member : set.members())
      lists.push_back(seed_class_ranking(member.embedding, state, k, member.pair_id));
    out.emplace(name, select_contrastive(name, aggregate_rankings(lists), m));
  }
  return out;
}

}  // namespace coex
