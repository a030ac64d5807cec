#pragma once

#include "coex/core.hpp"
#include "coex/fuse_eval.hpp"
#include "coex/probing.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coex {

// ---------------------------------------------------------------------------
// Schemas

struct DatasetSchema {
  std::string name;
  std::vector<std::string> relation_inventory;
  std::string negative_label;

  bool contains(std::string_view relation) const;
};

/// "retacred" (40 relations), "tacrev" (42) or "semeval" (19). Any other
/// value is read as a JSON schema file {name, relation_inventory, negative_label}.
DatasetSchema load_schema(std::string_view name_or_path);
DatasetSchema builtin_schema(std::string_view name);

/// Throws ValidationError when a known schema's inventory size differs from
/// its published relation count.
void validate_schema(const DatasetSchema& schema);

// ---------------------------------------------------------------------------
// Relation instances (TACRED JSON records)

/// Accepts a JSON array of TACRED records or JSON-lines of the same records.
/// subj_end / obj_end are inclusive in the file and exclusive in PairMention.
std::vector<PairMention> parse_relation_instances(std::string_view text, const DatasetSchema& schema);
std::vector<PairMention> load_relation_instances(const std::filesystem::path& path,
                                                 const DatasetSchema& schema);

// ---------------------------------------------------------------------------
// Seeds

struct SeedFile {
  /// Classes in file order, seeds in file order.
  std::vector<std::pair<std::string, std::vector<SeedPair>>> classes;

  const std::vector<SeedPair>* find(std::string_view class_name) const;
  bool operator==(const SeedFile&) const = default;
};

/// Store id of the i-th seed (0-based) of a class: "seed:<class>:<i>".
std::string seed_pair_id(std::string_view class_name, std::size_t index);

SeedFile parse_seed_sets(std::string_view text, const DatasetSchema* schema);
SeedFile load_seed_sets(const std::filesystem::path& path, const DatasetSchema& schema);
std::string seed_sets_to_json(const SeedFile& seeds);

struct SeedRejection {
  std::string class_name;
  SeedPair seed;
  std::string matched;  // the offending head or tail string
};

struct SeedFilterResult {
  SeedFile kept;
  std::vector<SeedRejection> rejected;
};

/// Lowercase English personal/possessive pronouns.
std::set<std::string> default_pronouns();

/// Moves seeds whose head or tail (ASCII case-folded) is a stopword into the
/// rejection report. Throws ValidationError if a class ends up seedless.
SeedFilterResult filter_seeds(const SeedFile& seeds, const std::set<std::string>& stopwords);

// ---------------------------------------------------------------------------
// Pattern files, classifier scores

std::vector<HearstPattern> parse_patterns(std::string_view text);
std::vector<HearstPattern> load_patterns(const std::filesystem::path& path);

/// JSON-lines {pair_id, scores:{class: value}}.
std::vector<ClassifierScores> parse_classifier_scores(std::string_view text);
std::vector<ClassifierScores> load_classifier_scores(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Embedding store file
//
// Line 1: JSON header {"format":"coex-store/1","dim":D,"count":N,
//         "provenance_schema":["analogous_pattern","contrastive_pattern","mention_context"]}\n
// Then N records, all integers little-endian:
//   u32 key_len | key bytes (UTF-8) | u8 provenance code |
//   u32 query_len (0xFFFFFFFF = none) | query bytes | u32 dim | dim x f32

void write_store(const EmbeddingStore& store, std::ostream& out);
EmbeddingStore read_store(std::istream& in);
void save_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_store(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Misc

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string contrastive_map_to_json(const ContrastiveMap& map);
ContrastiveMap parse_contrastive_map(std::string_view text);

/// {class: [{pair_id, origin}]}
std::string exemplar_state_to_json(const ExemplarState& state);

std::string config_to_json(const ExpansionConfig& config);
ExpansionConfig parse_config(std::string_view text);

}  // namespace coex
