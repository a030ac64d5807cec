#include "coex/ingest.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace coex {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::vector<std::string>& tacrev_relations() {
  static const std::vector<std::string> rels = {
      "no_relation",
      "org:alternate_names", "org:city_of_headquarters", "org:country_of_headquarters",
      "org:dissolved", "org:founded", "org:founded_by", "org:member_of", "org:members",
      "org:number_of_employees/members", "org:parents", "org:political/religious_affiliation",
      "org:shareholders", "org:stateorprovince_of_headquarters", "org:subsidiaries",
      "org:top_members/employees", "org:website",
      "per:age", "per:alternate_names", "per:cause_of_death", "per:charges", "per:children",
      "per:cities_of_residence", "per:city_of_birth", "per:city_of_death",
      "per:countries_of_residence", "per:country_of_birth", "per:country_of_death",
      "per:date_of_birth", "per:date_of_death", "per:employee_of", "per:origin",
      "per:other_family", "per:parents", "per:religion", "per:schools_attended",
      "per:siblings", "per:spouse", "per:stateorprovince_of_birth",
      "per:stateorprovince_of_death", "per:stateorprovinces_of_residence", "per:title",
  };
  return rels;
}

const std::vector<std::string>& retacred_relations() {
  static const std::vector<std::string> rels = {
      "no_relation",
      "org:alternate_names", "org:city_of_branch", "org:country_of_branch", "org:dissolved",
      "org:founded", "org:founded_by", "org:member_of", "org:members",
      "org:number_of_employees/members", "org:political/religious_affiliation",
      "org:shareholders", "org:stateorprovince_of_branch", "org:top_members/employees",
      "org:website",
      "per:age", "per:cause_of_death", "per:charges", "per:children", "per:cities_of_residence",
      "per:city_of_birth", "per:city_of_death", "per:countries_of_residence",
      "per:country_of_birth", "per:country_of_death", "per:date_of_birth", "per:date_of_death",
      "per:employee_of", "per:identity", "per:origin", "per:other_family", "per:parents",
      "per:religion", "per:schools_attended", "per:siblings", "per:spouse",
      "per:stateorprovince_of_birth", "per:stateorprovince_of_death",
      "per:stateorprovinces_of_residence", "per:title",
  };
  return rels;
}

std::vector<std::string> semeval_relations() {
  std::vector<std::string> rels = {"Other"};
  for (const char* base : {"Cause-Effect", "Component-Whole", "Content-Container",
                           "Entity-Destination", "Entity-Origin", "Instrument-Agency",
                           "Member-Collection", "Message-Topic", "Product-Producer"}) {
    rels.push_back(std::string(base) + "(e1,e2)");
    rels.push_back(std::string(base) + "(e2,e1)");
  }
  return rels;
}

std::optional<std::size_t> expected_relation_count(std::string_view name) {
  if (name == "retacred") return 40;
  if (name == "tacrev") return 42;
  if (name == "semeval") return 19;
  return std::nullopt;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// 1-based line number of byte offset `pos` in `text`.
std::size_t line_of(std::string_view text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace

bool DatasetSchema::contains(std::string_view relation) const {
  return std::find(relation_inventory.begin(), relation_inventory.end(), relation) !=
         relation_inventory.end();
}

DatasetSchema builtin_schema(std::string_view name) {
  const auto key = lowercase(name);
  DatasetSchema s;
  s.name = key;
  if (key == "retacred") {
    s.relation_inventory = retacred_relations();
    s.negative_label = "no_relation";
  } else if (key == "tacrev") {
    s.relation_inventory = tacrev_relations();
    s.negative_label = "no_relation";
  } else if (key == "semeval") {
    s.relation_inventory = semeval_relations();
    s.negative_label = "Other";
  } else {
    throw ValidationError("unknown schema '" + std::string(name) + "'");
  }
  validate_schema(s);
  return s;
}

void validate_schema(const DatasetSchema& schema) {
  if (schema.relation_inventory.empty())
    throw ValidationError("schema " + schema.name + ": empty relation inventory");
  std::set<std::string> unique(schema.relation_inventory.begin(), schema.relation_inventory.end());
  if (unique.size() != schema.relation_inventory.size())
    throw ValidationError("schema " + schema.name + ": duplicate relation in inventory");
  if (const auto n = expected_relation_count(lowercase(schema.name));
      n && schema.relation_inventory.size() != *n)
    throw ValidationError("schema " + schema.name + ": expected " + std::to_string(*n) +
                          " relations, found " + std::to_string(schema.relation_inventory.size()));
  if (!schema.negative_label.empty() && !schema.contains(schema.negative_label))
    throw ValidationError("schema " + schema.name + ": negative label " + schema.negative_label +
                          " is not in the inventory");
}

DatasetSchema load_schema(std::string_view name_or_path) {
  if (expected_relation_count(lowercase(name_or_path))) return builtin_schema(name_or_path);
  const auto j = [&] {
    try {
      return json::parse(read_file(std::filesystem::path(name_or_path)));
    } catch (const json::exception& e) {
      throw ValidationError("schema file " + std::string(name_or_path) + ": " + e.what());
    }
  }();
  DatasetSchema s;
  try {
    s.name = j.at("name").get<std::string>();
    s.relation_inventory = j.at("relation_inventory").get<std::vector<std::string>>();
    s.negative_label = j.value("negative_label", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError("schema file " + std::string(name_or_path) + ": " + e.what());
  }
  validate_schema(s);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

PairMention mention_from_record(const json& r, const DatasetSchema& schema, const std::string& where) {
  PairMention m;
  try {
    m.id = r.at("id").get<std::string>();
    m.tokens = r.at("token").get<std::vector<std::string>>();
    const auto ss = r.at("subj_start").get<std::size_t>();
    const auto se = r.at("subj_end").get<std::size_t>();
    const auto os = r.at("obj_start").get<std::size_t>();
    const auto oe = r.at("obj_end").get<std::size_t>();
    if (se < ss || oe < os) throw ValidationError(where + ": span end precedes start");
    m.head = {ss, se + 1};
    m.tail = {os, oe + 1};
    if (r.contains("relation") && !r.at("relation").is_null())
      m.gold_relation = r.at("relation").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": malformed record: " + e.what());
  }
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (m.gold_relation && !schema.contains(*m.gold_relation))
    throw ValidationError(where + ": unknown relation label '" + *m.gold_relation +
                          "' for schema " + schema.name);
  return m;
}

}  // namespace

std::vector<PairMention> parse_relation_instances(std::string_view text, const DatasetSchema& schema) {
  std::vector<PairMention> out;
  std::set<std::string> ids;
  auto push = [&](PairMention m, const std::string& where) {
    if (!ids.insert(m.id).second) throw ValidationError(where + ": duplicate id " + m.id);
    out.push_back(std::move(m));
  };

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return out;

  if (text[first] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
    // Record positions are reported by index; a rough line is recovered from
    // the id's first occurrence.
    for (std::size_t i = 0; i < arr.size(); ++i) {
      std::string where = "record " + std::to_string(i);
      if (arr[i].is_object() && arr[i].contains("id") && arr[i]["id"].is_string()) {
        const auto pos = text.find("\"" + arr[i]["id"].get<std::string>() + "\"");
        if (pos != std::string_view::npos) where += " (line " + std::to_string(line_of(text, pos)) + ")";
      }
      push(mention_from_record(arr[i], schema, where), where);
    }
    return out;
  }

  std::size_t line_no = 0;
  std::size_t record = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      const std::string where = "record " + std::to_string(record++) + " (line " + std::to_string(line_no) + ")";
      json r;
      try {
        r = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ValidationError(where + ": " + e.what());
      }
      push(mention_from_record(r, schema, where), where);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

std::vector<PairMention> load_relation_instances(const std::filesystem::path& path,
                                                 const DatasetSchema& schema) {
  try {
    return parse_relation_instances(read_file(path), schema);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

const std::vector<SeedPair>* SeedFile::find(std::string_view class_name) const {
  for (const auto& [name, seeds] : classes)
    if (name == class_name) return &seeds;
  return nullptr;
}

std::string seed_pair_id(std::string_view class_name, std::size_t index) {
  return "seed:" + std::string(class_name) + ":" + std::to_string(index);
}

SeedFile parse_seed_sets(std::string_view text, const DatasetSchema* schema) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ValidationError(std::string("seed file: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("seed file: top level must be an object");
  SeedFile out;
  for (const auto& [name, arr] : j.items()) {
    if (schema && !schema->contains(name))
      throw ValidationError("seed file: class '" + name + "' is not in schema " + schema->name);
    if (!arr.is_array() || arr.empty())
      throw ValidationError("seed file: class '" + name + "' has no seeds");
    std::vector<SeedPair> seeds;
    for (const auto& p : arr) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
        throw ValidationError("seed file: class '" + name + "': each seed must be [head, tail]");
      SeedPair sp{p[0].get<std::string>(), p[1].get<std::string>()};
      if (sp.head.empty() || sp.tail.empty())
        throw ValidationError("seed file: class '" + name + "' has an empty head or tail");
      seeds.push_back(std::move(sp));
    }
    out.classes.emplace_back(name, std::move(seeds));
  }
  return out;
}

SeedFile load_seed_sets(const std::filesystem::path& path, const DatasetSchema& schema) {
  return parse_seed_sets(read_file(path), &schema);
}

std::string seed_sets_to_json(const SeedFile& seeds) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, list] : seeds.classes) {
    auto arr = ordered_json::array();
    for (const auto& s : list) arr.push_back({s.head, s.tail});
    j[name] = std::move(arr);
  }
  return j.dump(2) + "\n";
}

std::set<std::string> default_pronouns() {
  return {"i",     "me",     "my",    "mine",  "myself", "you",   "your",     "yours",
          "yourself", "he",  "him",   "his",   "himself", "she",  "her",      "hers",
          "herself", "it",   "its",   "itself", "we",    "us",    "our",      "ours",
          "ourselves", "they", "them", "their", "theirs", "themselves", "yourselves"};
}

SeedFilterResult filter_seeds(const SeedFile& seeds, const std::set<std::string>& stopwords) {
  SeedFilterResult out;
  for (const auto& [name, list] : seeds.classes) {
    std::vector<SeedPair> kept;
    for (const auto& s : list) {
      if (stopwords.contains(lowercase(s.head))) {
        out.rejected.push_back({name, s, s.head});
      } else if (stopwords.contains(lowercase(s.tail))) {
        out.rejected.push_back({name, s, s.tail});
      } else {
        kept.push_back(s);
      }
    }
    if (kept.empty()) throw ValidationError("filter_seeds: class " + name + " has no seeds left");
    out.kept.classes.emplace_back(name, std::move(kept));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<HearstPattern> parse_patterns(std::string_view text) {
  std::vector<HearstPattern> out;
  try {
    const auto j = json::parse(text);
    if (!j.is_array()) throw ValidationError("pattern file: expected an array");
    for (const auto& p : j)
      out.emplace_back(p.at("pattern_id").get<std::string>(),
                       pattern_kind_from_string(p.at("kind").get<std::string>()),
                       p.at("template").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pattern file: ") + e.what());
  }
  return out;
}

std::vector<HearstPattern> load_patterns(const std::filesystem::path& path) {
  return parse_patterns(read_file(path));
}

std::vector<ClassifierScores> parse_classifier_scores(std::string_view text) {
  std::vector<ClassifierScores> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      ClassifierScores cs;
      cs.pair_id = j.at("pair_id").get<std::string>();
      for (const auto& [cls, v] : j.at("scores").items()) {
        const double value = v.get<double>();
        if (!std::isfinite(value)) throw ValidationError("non-finite score");
        cs.scores[cls] = value;
      }
      out.push_back(std::move(cs));
    } catch (const json::exception& e) {
      throw ValidationError("classifier scores line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ClassifierScores> load_classifier_scores(const std::filesystem::path& path) {
  return parse_classifier_scores(read_file(path));
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kNoQuery = 0xFFFFFFFFu;
constexpr std::string_view kStoreFormat = "coex-store/1";

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

class RecordReader {
 public:
  RecordReader(std::istream& in, std::size_t record) : in_(in), record_(record) {}

  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw IoError("store: truncated record " + std::to_string(record_));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint8_t u8() {
    char c;
    read(&c, 1);
    return static_cast<std::uint8_t>(c);
  }
  std::string str(std::uint32_t n) {
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

 private:
  std::istream& in_;
  std::size_t record_;
};

}  // namespace

void write_store(const EmbeddingStore& store, std::ostream& out) {
  ordered_json header;
  header["format"] = kStoreFormat;
  header["dim"] = store.dim();
  header["count"] = store.size();
  header["provenance_schema"] = {"analogous_pattern", "contrastive_pattern", "mention_context"};
  out << header.dump() << '\n';
  for (const auto& [key, e] : store.entries()) {
    put_u32(out, static_cast<std::uint32_t>(key.id.size()));
    out.write(key.id.data(), static_cast<std::streamsize>(key.id.size()));
    out.put(static_cast<char>(key.provenance));
    if (e.source_query_id) {
      put_u32(out, static_cast<std::uint32_t>(e.source_query_id->size()));
      out.write(e.source_query_id->data(), static_cast<std::streamsize>(e.source_query_id->size()));
    } else {
      put_u32(out, kNoQuery);
    }
    put_u32(out, static_cast<std::uint32_t>(e.dim()));
    for (Eigen::Index i = 0; i < e.dim(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(e.vector[i]));
  }
  if (!out) throw IoError("store: write failed");
}

EmbeddingStore read_store(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw IoError("store: missing header");
  json header;
  std::size_t count = 0;
  Eigen::Index dim = 0;
  try {
    header = json::parse(header_line);
    if (header.at("format").get<std::string>() != kStoreFormat)
      throw IoError("store: unsupported format " + header.at("format").get<std::string>());
    dim = header.at("dim").get<Eigen::Index>();
    count = header.at("count").get<std::size_t>();
    const auto schema = header.at("provenance_schema").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < schema.size(); ++i)
      if (provenance_from_string(schema[i]) != static_cast<Provenance>(i))
        throw IoError("store: unexpected provenance schema");
  } catch (const json::exception& e) {
    throw IoError(std::string("store: bad header: ") + e.what());
  }
  if (count > 0 && dim <= 0) throw IoError("store: non-positive dim with records present");

  EmbeddingStore store = dim > 0 ? EmbeddingStore(dim) : EmbeddingStore();
  for (std::size_t r = 0; r < count; ++r) {
    RecordReader rd(in, r);
    StoreKey key;
    key.id = rd.str(rd.u32());
    const auto prov = rd.u8();
    if (prov > 2) throw IoError("store: record " + std::to_string(r) + " has bad provenance code");
    key.provenance = static_cast<Provenance>(prov);
    Embedding e;
    e.provenance = key.provenance;
    if (const auto qlen = rd.u32(); qlen != kNoQuery) e.source_query_id = rd.str(qlen);
    const auto rdim = rd.u32();
    if (static_cast<Eigen::Index>(rdim) != dim)
      throw DimensionMismatch("store: record " + std::to_string(r) + " has dim " +
                              std::to_string(rdim) + ", header dim is " + std::to_string(dim));
    e.vector.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) e.vector[i] = std::bit_cast<float>(rd.u32());
    store.put(std::move(key), std::move(e));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw IoError("store: trailing bytes after " + std::to_string(count) + " records");
  return store;
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  write_store(store, buf);
  write_file_atomic(path, buf.str());
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open store " + path.string());
  return read_store(in);
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string contrastive_map_to_json(const ContrastiveMap& map) {
  ordered_json j = ordered_json::object();
  for (const auto& [pos, set] : map)
    j[pos] = {{"positive_class", set.positive_class},
              {"negatives", set.negatives},
              {"scores", set.scores}};
  return j.dump(2) + "\n";
}

ContrastiveMap parse_contrastive_map(std::string_view text) {
  ContrastiveMap out;
  try {
    const auto j = json::parse(text);
    for (const auto& [pos, v] : j.items()) {
      ContrastiveSet s;
      s.positive_class = v.at("positive_class").get<std::string>();
      s.negatives = v.at("negatives").get<std::vector<std::string>>();
      s.scores = v.at("scores").get<std::vector<double>>();
      if (s.positive_class != pos)
        throw ValidationError("contrastive map: key " + pos + " holds set for " + s.positive_class);
      s.validate(s.negatives.size());
      out.emplace(pos, std::move(s));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("contrastive map: ") + e.what());
  }
  return out;
}

std::string exemplar_state_to_json(const ExemplarState& state) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, set] : state) {
    auto arr = ordered_json::array();
    for (const auto& m : set.members())
      arr.push_back({{"pair_id", m.pair_id}, {"origin", std::string(to_string(m.origin))}});
    j[name] = std::move(arr);
  }
  return j.dump(2) + "\n";
}

std::string config_to_json(const ExpansionConfig& c) {
  ordered_json j;
  j["k"] = c.k;
  j["lambda_weight"] = c.lambda_weight;
  j["ensemble_rounds"] = c.ensemble_rounds;
  j["sample_size"] = c.sample_size;
  j["num_contrastive"] = c.num_contrastive;
  j["iterations"] = c.iterations;
  j["additions_per_iteration"] = c.additions_per_iteration;
  j["master_seed"] = c.master_seed;
  j["rank_combine"] = c.rank_combine == RankCombine::geometric ? "geometric" : "arithmetic";
  return j.dump(2) + "\n";
}

ExpansionConfig parse_config(std::string_view text) {
  ExpansionConfig c;
  try {
    const auto j = json::parse(text);
    c.k = j.value("k", c.k);
    c.lambda_weight = j.value("lambda_weight", c.lambda_weight);
    c.ensemble_rounds = j.value("ensemble_rounds", c.ensemble_rounds);
    c.sample_size = j.value("sample_size", c.sample_size);
    c.num_contrastive = j.value("num_contrastive", c.num_contrastive);
    c.iterations = j.value("iterations", c.iterations);
    c.additions_per_iteration = j.value("additions_per_iteration", c.additions_per_iteration);
    c.master_seed = j.value("master_seed", c.master_seed);
    const auto mode = j.value("rank_combine", std::string("geometric"));
    if (mode == "geometric") c.rank_combine = RankCombine::geometric;
    else if (mode == "arithmetic") c.rank_combine = RankCombine::arithmetic;
    else throw ValidationError("config: unknown rank_combine '" + mode + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace coex
