#include "coex/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace coex {

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, TokenSpan span) {
  std::string out;
  for (std::size_t i = span.begin; i < span.end; ++i) {
    if (i > span.begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

void PairMention::validate() const {
  const auto n = tokens.size();
  if (head.empty() || tail.empty())
    throw ValidationError("pair " + id + ": empty head or tail span");
  if (head.end > n || tail.end > n)
    throw ValidationError("pair " + id + ": span out of bounds (" + std::to_string(n) +
                          " tokens)");
  if (head.overlaps(tail)) throw ValidationError("pair " + id + ": head and tail spans overlap");
}

std::string PairMention::head_text() const { return join_tokens(tokens, head); }
std::string PairMention::tail_text() const { return join_tokens(tokens, tail); }

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::analogous_pattern: return "analogous_pattern";
    case Provenance::contrastive_pattern: return "contrastive_pattern";
    case Provenance::mention_context: return "mention_context";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "analogous_pattern") return Provenance::analogous_pattern;
  if (s == "contrastive_pattern") return Provenance::contrastive_pattern;
  if (s == "mention_context") return Provenance::mention_context;
  throw ValidationError("unknown provenance '" + std::string(s) + "'");
}

bool bit_identical(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(float)) == 0;
}

// ---------------------------------------------------------------------------

void EmbeddingStore::put(StoreKey key, Embedding e) {
  if (e.dim() <= 0) throw DimensionMismatch("store: embedding for " + key.id + " is empty");
  if (dim_ != 0 && e.dim() != dim_)
    throw DimensionMismatch("store: " + key.id + " has dim " + std::to_string(e.dim()) +
                            ", store dim is " + std::to_string(dim_));
  if (!e.finite()) throw ValidationError("store: embedding for " + key.id + " is not finite");
  if (index_.contains(key))
    throw ValidationError("store: duplicate key (" + key.id + ", " +
                          std::string(to_string(key.provenance)) + ")");
  dim_ = e.dim();
  index_.emplace(key, entries_.size());
  entries_.push_back({std::move(key), std::move(e)});
}

const Embedding* EmbeddingStore::find(const StoreKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second].embedding;
}

const Embedding& EmbeddingStore::get(const StoreKey& key) const {
  if (const auto* e = find(key)) return *e;
  throw NotFound("store: no embedding for (" + key.id + ", " +
                 std::string(to_string(key.provenance)) + ")");
}

// ---------------------------------------------------------------------------

std::string_view to_string(MemberOrigin o) { return o == MemberOrigin::seed ? "seed" : "expanded"; }

void ExemplarSet::add(std::string pair_id, Embedding e, MemberOrigin origin) {
  if (ids_.contains(pair_id))
    throw ValidationError("exemplar set " + class_name_ + ": duplicate pair " + pair_id);
  if (!members_.empty() && e.dim() != members_.front().embedding.dim())
    throw DimensionMismatch("exemplar set " + class_name_ + ": dimension mismatch for " + pair_id);
  ids_.insert(pair_id);
  members_.push_back({std::move(pair_id), std::move(e), origin});
}

bool ExemplarSet::contains(std::string_view pair_id) const {
  return ids_.contains(std::string(pair_id));
}

std::size_t ExemplarSet::seed_count() const {
  return static_cast<std::size_t>(std::count_if(
      members_.begin(), members_.end(), [](const Member& m) { return m.origin == MemberOrigin::seed; }));
}

void ContrastiveSet::validate(std::size_t max_negatives) const {
  if (negatives.size() > max_negatives)
    throw ValidationError("contrastive set for " + positive_class + " exceeds m");
  if (scores.size() != negatives.size())
    throw ValidationError("contrastive set for " + positive_class + ": scores/negatives length differ");
  std::unordered_set<std::string> seen;
  for (const auto& n : negatives) {
    if (n == positive_class)
      throw ValidationError("contrastive set for " + positive_class + " contains the positive class");
    if (!seen.insert(n).second)
      throw ValidationError("contrastive set for " + positive_class + " repeats " + n);
  }
}

void ExpansionConfig::validate() const {
  if (k < 1 || ensemble_rounds < 1 || sample_size < 1 || num_contrastive < 1 ||
      iterations < 0 || additions_per_iteration < 1)
    throw ValidationError("config: counts must be >= 1");
  if (!(lambda_weight >= 0.0) || !std::isfinite(lambda_weight))
    throw ValidationError("config: lambda_weight must be finite and >= 0");
}

}  // namespace coex
