#pragma once

#include "coex/core.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace coex {

/// The mask literal written in pattern templates. Rendering rewrites it to
/// whatever mask token the provider advertises.
inline constexpr std::string_view kTemplateMask = "[MASK]";

enum class PatternKind : std::uint8_t { analogous, contrastive };

std::string_view to_string(PatternKind k);
PatternKind pattern_kind_from_string(std::string_view s);
Provenance provenance_of(PatternKind k);

/// A probe template with slots {head_seed}, {tail_seed}, {class_name} and
/// exactly two [MASK] placeholders.
class HearstPattern {
 public:
  HearstPattern(std::string pattern_id, PatternKind kind, std::string template_text);

  const std::string& id() const { return id_; }
  PatternKind kind() const { return kind_; }
  const std::string& template_text() const { return template_; }

 private:
  std::string id_;
  PatternKind kind_;
  std::string template_;
};

/// Shipped defaults: one analogous and one contrastive pattern.
std::vector<HearstPattern> default_patterns();

struct SeedPair {
  std::string head;
  std::string tail;
  bool operator==(const SeedPair&) const = default;
};

struct ProbeQuery {
  std::string text;
  std::array<std::size_t, 2> mask_positions{};  // character offsets into text
  std::string pattern_id;
  std::optional<std::string> bound_pair_id;
  std::string bound_class;
};

/// Two mask-position vectors for one query.
struct MaskVectors {
  Vector first;
  Vector second;
};

/// Source of contextual vectors at mask positions, usually a masked LM.
/// Implementations must be deterministic for identical input.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string mask_token() const = 0;
  virtual Eigen::Index dim() const = 0;
  /// Throws ProviderError on failure.
  virtual MaskVectors embed(const ProbeQuery& query) const = 0;
};

/// Hash-seeded deterministic provider used for tests and offline runs. Each
/// mask vector is a pure function of (text, mask ordinal).
class HashProvider final : public EmbeddingProvider {
 public:
  explicit HashProvider(Eigen::Index dim, std::string mask_token = "[MASK]")
      : dim_(dim), mask_(std::move(mask_token)) {}

  std::string mask_token() const override { return mask_; }
  Eigen::Index dim() const override { return dim_; }
  MaskVectors embed(const ProbeQuery& query) const override;

 private:
  Eigen::Index dim_;
  std::string mask_;
};

/// Client for the embedding service: GET /v1/info, POST /v1/embed.
class HttpProvider final : public EmbeddingProvider {
 public:
  /// `base_url` like "http://127.0.0.1:8080". Fetches /v1/info eagerly.
  explicit HttpProvider(std::string base_url);

  std::string mask_token() const override { return mask_; }
  Eigen::Index dim() const override { return dim_; }
  const std::string& model_id() const { return model_id_; }
  MaskVectors embed(const ProbeQuery& query) const override;
  std::vector<MaskVectors> embed_batch(std::span<const ProbeQuery> queries) const;

 private:
  std::string host_;
  int port_ = 80;
  std::string model_id_;
  std::string mask_;
  Eigen::Index dim_ = 0;
};

/// Optional bindings for template slots.
struct SlotBindings {
  std::optional<SeedPair> seed;
  std::optional<std::string> class_name;
};

/// Substitutes slots verbatim and rewrites each [MASK] to `mask_token`.
/// Throws ValidationError on a missing binding or a template without
/// exactly two masks.
ProbeQuery render_query(const HearstPattern& pattern, const SlotBindings& bindings,
                        std::string_view mask_token = kTemplateMask);

/// Element-wise mean of the two mask vectors of `query`.
Embedding pair_representation(const ProbeQuery& query, PatternKind kind,
                              const EmbeddingProvider& provider);

/// Query built from a mention: head and tail spans each collapse to one mask.
ProbeQuery mention_query(const PairMention& m, std::string_view mask_token);

Embedding mention_representation(const PairMention& m, const EmbeddingProvider& provider);

/// |seeds| x |patterns of `kind`| representations, seed-major. With no kind
/// filter every pattern is used.
std::vector<Embedding> class_representations(const std::string& class_name,
                                             std::span<const SeedPair> seeds,
                                             std::span<const HearstPattern> patterns,
                                             const EmbeddingProvider& provider,
                                             std::optional<PatternKind> kind = std::nullopt);

/// Mean of several same-kind representations of one pair (one per pattern).
Embedding mean_representation(std::span<const Embedding> reps);

}  // namespace coex
