#pragma once

#include "coex/coexpand.hpp"
#include "coex/core.hpp"
#include "coex/ingest.hpp"
#include "coex/probing.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

// Pipeline entry points behind the command-line tool. Each writes its
// primary outputs atomically plus a manifest recording the configuration,
// master seed and input digests.
namespace coex::app {

namespace fs = std::filesystem;

/// "hash:<dim>" for the deterministic offline provider, or an http:// URL
/// of a running embedding service.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& descriptor);

/// Hex FNV-1a digest of a file's bytes.
std::string file_digest(const fs::path& path);

/// ExpansionConfig from an optional JSON file, with the --seed override.
ExpansionConfig resolve_config(const std::optional<fs::path>& config_path,
                               std::optional<std::uint64_t> seed_override);

struct ProbeOptions {
  std::string schema = "retacred";
  fs::path seeds;
  std::optional<fs::path> patterns;
  std::optional<fs::path> dataset;  // mentions to embed
  std::string provider = "hash:64";
  fs::path out;                     // store file
};

struct ProbeSummary {
  std::size_t seed_records = 0;
  std::size_t mention_records = 0;
};

/// Seeds get analogous and contrastive representations keyed by
/// seed_pair_id; each dataset mention gets mention_context, analogous and
/// contrastive representations keyed by its record id. Several patterns of
/// one kind are averaged into a single representation.
ProbeSummary run_probe(const ProbeOptions& opt);

struct RankOptions {
  std::string schema = "retacred";
  fs::path store;
  fs::path seeds;
  std::optional<fs::path> config;
  fs::path out;  // contrastive map JSON
};

ContrastiveMap run_rank_classes(const RankOptions& opt);

struct ExpandRunOptions {
  std::string schema = "retacred";
  fs::path store;
  fs::path seeds;
  fs::path candidates;  // TACRED-format records; their ids form the pool
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  fs::path out;  // directory: sets.json, audit.jsonl, manifest.json
};

ExpansionTrace run_expand(const ExpandRunOptions& opt);

struct FuseEvalOptions {
  std::string schema = "retacred";
  fs::path store;
  fs::path scores;   // classifier scores JSON-lines
  fs::path sets;     // sets.json from expand
  fs::path dataset;  // gold labels
  std::optional<fs::path> config;
  std::vector<double> lambdas;  // empty: config lambda
  fs::path out;                 // directory: metrics.json, confusion*.csv
};

std::vector<Metrics> run_fuse_eval(const FuseEvalOptions& opt);

struct FilterSeedsOptions {
  std::string schema = "retacred";
  fs::path seeds;
  std::optional<fs::path> stopwords;  // one word per line; default pronouns
  fs::path out;                       // kept seeds; report at <out>.rejected.json
};

SeedFilterResult run_filter_seeds(const FilterSeedsOptions& opt);

/// Exemplar sets from a sets.json document, embeddings resolved from `store`.
ExemplarState parse_exemplar_state(std::string_view text, const EmbeddingStore& store);

/// Seed state keyed by seed_pair_id for every class in `seeds`.
ExemplarState seed_state(const SeedFile& seeds, const EmbeddingStore& store);

}  // namespace coex::app
