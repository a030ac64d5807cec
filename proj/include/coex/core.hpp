#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace coex {

// ---------------------------------------------------------------------------
// Errors. Validation errors map to CLI exit code 1, IO/provider errors to 2.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotFound : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public IoError {
 public:
  using IoError::IoError;
};

// ---------------------------------------------------------------------------

/// Vectors are stored at 32-bit precision; similarity math widens to double.
using Vector = Eigen::VectorXf;

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool overlaps(const TokenSpan& o) const { return begin < o.end && o.begin < end; }
  bool operator==(const TokenSpan&) const = default;
};

/// An entity pair occurrence inside a tokenized sentence.
struct PairMention {
  std::string id;
  std::vector<std::string> tokens;
  TokenSpan head;
  TokenSpan tail;
  std::optional<std::string> gold_relation;

  /// Throws ValidationError if spans are empty, out of bounds or overlapping.
  void validate() const;

  std::string head_text() const;
  std::string tail_text() const;

  bool operator==(const PairMention&) const = default;
};

enum class Provenance : std::uint8_t {
  analogous_pattern = 0,
  contrastive_pattern = 1,
  mention_context = 2,
};

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct Embedding {
  Vector vector;
  Provenance provenance = Provenance::mention_context;
  std::optional<std::string> source_query_id;

  Eigen::Index dim() const { return vector.size(); }
  bool finite() const { return vector.allFinite(); }
};

bool bit_identical(const Vector& a, const Vector& b);

// ---------------------------------------------------------------------------
// Embedding store

struct StoreKey {
  std::string id;
  Provenance provenance = Provenance::mention_context;

  bool operator==(const StoreKey&) const = default;
};

struct StoreKeyHash {
  std::size_t operator()(const StoreKey& k) const noexcept {
    return std::hash<std::string>{}(k.id) * 31u + static_cast<std::size_t>(k.provenance);
  }
};

/// In-memory vector store. The first insert fixes the dimension; iteration
/// follows insertion order.
class EmbeddingStore {
 public:
  struct Entry {
    StoreKey key;
    Embedding embedding;
  };

  EmbeddingStore() = default;
  explicit EmbeddingStore(Eigen::Index dim) : dim_(dim) {}

  void put(StoreKey key, Embedding e);

  const Embedding& get(const StoreKey& key) const;
  const Embedding& get(std::string_view id, Provenance p) const {
    return get(StoreKey{std::string(id), p});
  }
  const Embedding* find(const StoreKey& key) const;
  bool contains(const StoreKey& key) const { return find(key) != nullptr; }

  /// 0 while the store is empty and no dimension was fixed.
  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  Eigen::Index dim_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<StoreKey, std::size_t, StoreKeyHash> index_;
};

// ---------------------------------------------------------------------------
// Exemplar sets

enum class MemberOrigin : std::uint8_t { seed, expanded };

std::string_view to_string(MemberOrigin o);

/// A relation class's current exemplar pairs. Members are append-only, so
/// seeds survive every expansion.
class ExemplarSet {
 public:
  struct Member {
    std::string pair_id;
    Embedding embedding;
    MemberOrigin origin = MemberOrigin::seed;
  };

  ExemplarSet() = default;
  explicit ExemplarSet(std::string class_name) : class_name_(std::move(class_name)) {}

  void add(std::string pair_id, Embedding e, MemberOrigin origin);

  const std::string& class_name() const { return class_name_; }
  const std::vector<Member>& members() const { return members_; }
  const Member& operator[](std::size_t i) const { return members_[i]; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(std::string_view pair_id) const;
  std::size_t seed_count() const;

 private:
  std::string class_name_;
  std::vector<Member> members_;
  std::unordered_set<std::string> ids_;
};

/// Ordered by class name so every traversal is deterministic.
using ExemplarState = std::map<std::string, ExemplarSet>;

/// Confusable classes chosen for one positive class.
struct ContrastiveSet {
  std::string positive_class;
  std::vector<std::string> negatives;
  std::vector<double> scores;

  void validate(std::size_t max_negatives) const;
  bool operator==(const ContrastiveSet&) const = default;
};

using ContrastiveMap = std::map<std::string, ContrastiveSet>;

enum class RankCombine : std::uint8_t {
  geometric,   // sqrt(max(pos,0) * max(neg,0))
  arithmetic,  // (pos + neg) / 2, ablation mode
};

struct ExpansionConfig {
  int k = 3;
  double lambda_weight = 0.5;
  int ensemble_rounds = 5;
  int sample_size = 3;
  int num_contrastive = 6;
  int iterations = 4;
  int additions_per_iteration = 5;
  std::uint64_t master_seed = 0;
  RankCombine rank_combine = RankCombine::geometric;

  void validate() const;
  bool operator==(const ExpansionConfig&) const = default;
};

}  // namespace coex
