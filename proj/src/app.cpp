#include "coex/app.hpp"

#include "coex/classrank.hpp"
#include "coex/fuse_eval.hpp"
#include "coex/hash.hpp"

#include "json.hpp"

#include <cstdio>
#include <sstream>

namespace coex::app {

using ordered_json = nlohmann::ordered_json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

ordered_json input_entry(const fs::path& p) {
  return {{"path", p.string()}, {"digest", file_digest(p)}};
}

void write_manifest(const fs::path& path, std::string_view command, const ExpansionConfig* config,
                    const ordered_json& inputs, const ordered_json& extra = ordered_json::object()) {
  ordered_json m;
  m["command"] = command;
  if (config) {
    m["master_seed"] = config->master_seed;
    m["config"] = ordered_json::parse(config_to_json(*config));
  }
  m["inputs"] = inputs;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_file_atomic(path, m.dump(2) + "\n");
}

fs::path manifest_beside(const fs::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

/// Averages the representations from every pattern of `kind`.
Embedding pattern_representation(const SeedPair& pair, const std::optional<std::string>& class_name,
                                 std::span<const HearstPattern> patterns, PatternKind kind,
                                 const EmbeddingProvider& provider, const std::string& query_prefix) {
  std::vector<Embedding> reps;
  const std::string mask = provider.mask_token();
  for (const auto& p : patterns) {
    if (p.kind() != kind) continue;
    const ProbeQuery q = render_query(p, SlotBindings{pair, class_name}, mask);
    reps.push_back(pair_representation(q, kind, provider));
  }
  if (reps.empty())
    throw ValidationError("no " + std::string(to_string(kind)) + " pattern configured");
  Embedding e = mean_representation(reps);
  e.source_query_id = query_prefix + "/" + std::string(to_string(kind));
  return e;
}

}  // namespace

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& descriptor) {
  if (descriptor.rfind("hash:", 0) == 0) {
    int dim = 0;
    try {
      dim = std::stoi(descriptor.substr(5));
    } catch (const std::exception&) {
      throw ValidationError("bad provider " + descriptor);
    }
    if (dim <= 0) throw ValidationError("provider dim must be positive");
    return std::make_unique<HashProvider>(dim);
  }
  if (descriptor.rfind("http://", 0) == 0) return std::make_unique<HttpProvider>(descriptor);
  throw ValidationError("provider must be hash:<dim> or http://host:port, got " + descriptor);
}

std::string file_digest(const fs::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return std::string("fnv1a64:") + buf;
}

ExpansionConfig resolve_config(const std::optional<fs::path>& config_path,
                               std::optional<std::uint64_t> seed_override) {
  ExpansionConfig c = config_path ? parse_config(read_file(*config_path)) : ExpansionConfig{};
  if (seed_override) c.master_seed = *seed_override;
  c.validate();
  return c;
}

ExemplarState seed_state(const SeedFile& seeds, const EmbeddingStore& store) {
  std::map<std::string, std::vector<std::string>> ids;
  for (const auto& [name, list] : seeds.classes)
    for (std::size_t i = 0; i < list.size(); ++i) ids[name].push_back(seed_pair_id(name, i));
  return make_seed_state(ids, store);
}

ExemplarState parse_exemplar_state(std::string_view text, const EmbeddingStore& store) {
  ExemplarState state;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [name, arr] : j.items()) {
      ExemplarSet set(name);
      for (const auto& m : arr) {
        const auto origin = m.at("origin").get<std::string>();
        if (origin != "seed" && origin != "expanded")
          throw ValidationError("sets file: unknown origin " + origin);
        const auto id = m.at("pair_id").get<std::string>();
        set.add(id, store.get(id, Provenance::analogous_pattern),
                origin == "seed" ? MemberOrigin::seed : MemberOrigin::expanded);
      }
      state.emplace(name, std::move(set));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("sets file: ") + e.what());
  }
  return state;
}

// ---------------------------------------------------------------------------

ProbeSummary run_probe(const ProbeOptions& opt) {
  const auto schema = load_schema(opt.schema);
  const auto seeds = load_seed_sets(opt.seeds, schema);
  const auto patterns = opt.patterns ? load_patterns(*opt.patterns) : default_patterns();
  const auto mentions = opt.dataset ? load_relation_instances(*opt.dataset, schema)
                                    : std::vector<PairMention>{};
  const auto provider = make_provider(opt.provider);

  EmbeddingStore store(provider->dim());
  ProbeSummary summary;
  for (const auto& [name, list] : seeds.classes) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto id = seed_pair_id(name, i);
      for (auto kind : {PatternKind::analogous, PatternKind::contrastive}) {
        store.put({id, provenance_of(kind)},
                  pattern_representation(list[i], name, patterns, kind, *provider, id));
        ++summary.seed_records;
      }
    }
  }
  for (const auto& m : mentions) {
    store.put({m.id, Provenance::mention_context}, mention_representation(m, *provider));
    const SeedPair pair{m.head_text(), m.tail_text()};
    for (auto kind : {PatternKind::analogous, PatternKind::contrastive})
      store.put({m.id, provenance_of(kind)},
                pattern_representation(pair, std::nullopt, patterns, kind, *provider, m.id));
    ++summary.mention_records;
  }

  save_store(store, opt.out);
  ordered_json inputs;
  inputs["seeds"] = input_entry(opt.seeds);
  if (opt.patterns) inputs["patterns"] = input_entry(*opt.patterns);
  if (opt.dataset) inputs["dataset"] = input_entry(*opt.dataset);
  write_manifest(manifest_beside(opt.out), "probe", nullptr, inputs,
                 {{"schema", opt.schema}, {"provider", opt.provider}});
  return summary;
}

ContrastiveMap run_rank_classes(const RankOptions& opt) {
  const auto schema = load_schema(opt.schema);
  const auto seeds = load_seed_sets(opt.seeds, schema);
  const auto store = load_store(opt.store);
  const auto config = resolve_config(opt.config, std::nullopt);
  const auto state = seed_state(seeds, store);
  auto map = rank_contrastive_classes(state, config.k, config.num_contrastive);
  write_file_atomic(opt.out, contrastive_map_to_json(map));
  write_manifest(manifest_beside(opt.out), "rank-classes", &config,
                 {{"seeds", input_entry(opt.seeds)}, {"store", input_entry(opt.store)}},
                 {{"schema", opt.schema}});
  return map;
}

ExpansionTrace run_expand(const ExpandRunOptions& opt) {
  const auto schema = load_schema(opt.schema);
  const auto seeds = load_seed_sets(opt.seeds, schema);
  const auto store = load_store(opt.store);
  const auto config = resolve_config(opt.config, opt.seed);
  std::vector<std::string> pool;
  for (const auto& m : load_relation_instances(opt.candidates, schema)) pool.push_back(m.id);

  auto trace = expand(seed_state(seeds, store), pool, config, store, ExpandOptions{opt.jobs, true});

  ensure_dir(opt.out);
  write_file_atomic(opt.out / "sets.json", exemplar_state_to_json(trace.state));
  write_file_atomic(opt.out / "audit.jsonl", audit_to_jsonl(trace.audit));
  ordered_json inputs;
  inputs["seeds"] = input_entry(opt.seeds);
  inputs["store"] = input_entry(opt.store);
  inputs["candidates"] = input_entry(opt.candidates);
  if (opt.config) inputs["config"] = input_entry(*opt.config);
  write_manifest(opt.out / "manifest.json", "expand", &config, inputs, {{"schema", opt.schema}});
  return trace;
}

std::vector<Metrics> run_fuse_eval(const FuseEvalOptions& opt) {
  const auto schema = load_schema(opt.schema);
  const auto store = load_store(opt.store);
  const auto config = resolve_config(opt.config, std::nullopt);
  const auto sets = parse_exemplar_state(read_file(opt.sets), store);
  const auto scores = load_classifier_scores(opt.scores);
  std::map<std::string, std::string> gold;
  for (const auto& m : load_relation_instances(opt.dataset, schema))
    if (m.gold_relation) gold[m.id] = *m.gold_relation;

  for (const auto& cs : scores)
    for (const auto& [cls, v] : cs.scores)
      if (!schema.contains(cls))
        throw ValidationError("classifier scores for " + cs.pair_id + " use class " + cls +
                              " outside schema " + schema.name);

  std::vector<double> lambdas = opt.lambdas;
  if (lambdas.empty()) lambdas.push_back(config.lambda_weight);

  ensure_dir(opt.out);
  std::vector<Metrics> results;
  auto records = ordered_json::array();
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    ExpansionConfig c = config;
    c.lambda_weight = lambdas[li];
    c.validate();
    std::vector<Prediction> preds;
    preds.reserve(scores.size());
    for (const auto& cs : scores)
      preds.push_back(fuse_predict(cs, store.get(cs.pair_id, Provenance::mention_context), sets, c));
    const auto m = metrics(preds, gold, schema.negative_label.empty()
                                            ? std::nullopt
                                            : std::optional<std::string>(schema.negative_label));
    const auto cm = confusion_matrix(preds, gold, schema.relation_inventory);
    const std::string csv_name =
        lambdas.size() == 1 ? "confusion.csv" : "confusion-" + std::to_string(li) + ".csv";
    write_file_atomic(opt.out / csv_name, confusion_to_csv(cm, schema.relation_inventory));

    ordered_json r;
    r["lambda"] = c.lambda_weight;
    r["accuracy"] = m.accuracy;
    r["micro_precision"] = m.micro_precision;
    r["micro_recall"] = m.micro_recall;
    r["micro_f1"] = m.micro_f1;
    r["total"] = m.total;
    r["correct"] = m.correct;
    r["confusion"] = csv_name;
    records.push_back(std::move(r));
    results.push_back(m);
  }
  const auto doc = lambdas.size() == 1 ? records.front() : ordered_json{{"sweep", records}};
  write_file_atomic(opt.out / "metrics.json", doc.dump(2) + "\n");
  write_manifest(opt.out / "manifest.json", "fuse-eval", &config,
                 {{"store", input_entry(opt.store)},
                  {"scores", input_entry(opt.scores)},
                  {"sets", input_entry(opt.sets)},
                  {"dataset", input_entry(opt.dataset)}},
                 {{"schema", opt.schema}, {"lambdas", lambdas}});
  return results;
}

SeedFilterResult run_filter_seeds(const FilterSeedsOptions& opt) {
  const auto schema = load_schema(opt.schema);
  const auto seeds = load_seed_sets(opt.seeds, schema);
  std::set<std::string> stopwords = default_pronouns();
  if (opt.stopwords) {
    stopwords.clear();
    std::istringstream in(read_file(*opt.stopwords));
    std::string w;
    while (std::getline(in, w)) {
      while (!w.empty() && (w.back() == '\r' || w.back() == ' ')) w.pop_back();
      if (!w.empty()) {
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        stopwords.insert(w);
      }
    }
  }
  auto result = filter_seeds(seeds, stopwords);
  write_file_atomic(opt.out, seed_sets_to_json(result.kept));
  auto report = ordered_json::array();
  for (const auto& r : result.rejected)
    report.push_back({{"class", r.class_name}, {"seed", {r.seed.head, r.seed.tail}}, {"matched", r.matched}});
  auto report_path = opt.out;
  report_path += ".rejected.json";
  write_file_atomic(report_path, report.dump(2) + "\n");
  return result;
}

}  // namespace coex::app
