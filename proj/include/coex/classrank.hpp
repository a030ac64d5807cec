#pragma once

#include "coex/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace coex {

/// Candidate class names for one seed, best first.
struct RankedClassList {
  struct Entry {
    std::string class_name;
    double score = 0.0;
    bool operator==(const Entry&) const = default;
  };

  std::string seed_pair_id;
  std::vector<Entry> entries;

  std::vector<std::string> class_names() const;
  bool operator==(const RankedClassList&) const = default;
};

/// Scores `seed_repr` against every class index entry with pair_class_score
/// and sorts by (score desc, class_name asc).
RankedClassList seed_class_ranking(const Embedding& seed_repr, const ExemplarState& class_index,
                                   int k, std::string seed_pair_id = {});

/// Borda count: a class at position i of an N-class list earns N - i points.
/// The aggregate's score field carries the point total.
RankedClassList aggregate_rankings(std::span<const RankedClassList> lists);

/// Top `m` classes of `aggregated` after dropping `positive_class`.
ContrastiveSet select_contrastive(const std::string& positive_class,
                                  const RankedClassList& aggregated, int m);

/// One ranked list per member of the positive class, aggregated, then
/// truncated to m negatives. Repeats for every class in `state`.
ContrastiveMap rank_contrastive_classes(const ExemplarState& state, int k, int m);

}  // namespace coex
