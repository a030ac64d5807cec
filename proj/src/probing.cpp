#include "coex/probing.hpp"

#include "coex/hash.hpp"

#include "httplib.h"
#include "json.hpp"

#include <regex>

namespace coex {

namespace {

std::size_t count_masks(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kTemplateMask); pos != std::string_view::npos;
       pos = text.find(kTemplateMask, pos + kTemplateMask.size()))
    ++n;
  return n;
}

Vector mean_of(const MaskVectors& mv, Eigen::Index expected_dim) {
  if (mv.first.size() != expected_dim || mv.second.size() != expected_dim)
    throw DimensionMismatch("provider returned vectors of dim " + std::to_string(mv.first.size()) +
                            "/" + std::to_string(mv.second.size()) + ", expected " +
                            std::to_string(expected_dim));
  if (!mv.first.allFinite() || !mv.second.allFinite())
    throw ProviderError("provider returned a non-finite vector");
  return ((mv.first.cast<double>() + mv.second.cast<double>()) * 0.5).cast<float>();
}

}  // namespace

std::string_view to_string(PatternKind k) {
  return k == PatternKind::analogous ? "analogous" : "contrastive";
}

PatternKind pattern_kind_from_string(std::string_view s) {
  if (s == "analogous") return PatternKind::analogous;
  if (s == "contrastive") return PatternKind::contrastive;
  throw ValidationError("unknown pattern kind '" + std::string(s) + "'");
}

Provenance provenance_of(PatternKind k) {
  return k == PatternKind::analogous ? Provenance::analogous_pattern
                                     : Provenance::contrastive_pattern;
}

HearstPattern::HearstPattern(std::string pattern_id, PatternKind kind, std::string template_text)
    : id_(std::move(pattern_id)), kind_(kind), template_(std::move(template_text)) {
  if (const auto n = count_masks(template_); n != 2)
    throw ValidationError("pattern " + id_ + ": template has " + std::to_string(n) +
                          " mask placeholders, expected 2");
}

std::vector<HearstPattern> default_patterns() {
  return {
      HearstPattern("analogous-0", PatternKind::analogous,
                    "{head_seed} is to {tail_seed} what [MASK] is to [MASK] ."),
      HearstPattern("contrastive-0", PatternKind::contrastive,
                    "unlike {head_seed} and {tail_seed} , [MASK] has a different relation to [MASK] ."),
  };
}

ProbeQuery render_query(const HearstPattern& pattern, const SlotBindings& bindings,
                        std::string_view mask_token) {
  const std::string& tpl = pattern.template_text();
  ProbeQuery q;
  q.pattern_id = pattern.id();
  if (bindings.class_name) q.bound_class = *bindings.class_name;

  std::size_t masks = 0;
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl.compare(i, kTemplateMask.size(), kTemplateMask) == 0) {
      if (masks == 2) throw ValidationError("pattern " + pattern.id() + ": more than two masks");
      q.mask_positions[masks++] = q.text.size();
      q.text += mask_token;
      i += kTemplateMask.size();
      continue;
    }
    if (tpl[i] == '{') {
      const auto close = tpl.find('}', i);
      if (close == std::string::npos)
        throw ValidationError("pattern " + pattern.id() + ": unterminated slot");
      const std::string_view slot(tpl.data() + i + 1, close - i - 1);
      if (slot == "head_seed" || slot == "tail_seed") {
        if (!bindings.seed)
          throw ValidationError("pattern " + pattern.id() + ": missing binding for {" +
                                std::string(slot) + "}");
        q.text += slot == "head_seed" ? bindings.seed->head : bindings.seed->tail;
      } else if (slot == "class_name") {
        if (!bindings.class_name)
          throw ValidationError("pattern " + pattern.id() + ": missing binding for {class_name}");
        q.text += *bindings.class_name;
      } else {
        throw ValidationError("pattern " + pattern.id() + ": unknown slot {" + std::string(slot) +
                              "}");
      }
      i = close + 1;
      continue;
    }
    q.text += tpl[i++];
  }
  if (masks != 2)
    throw ValidationError("pattern " + pattern.id() + ": rendered " + std::to_string(masks) +
                          " masks, expected 2");
  return q;
}

Embedding pair_representation(const ProbeQuery& query, PatternKind kind,
                              const EmbeddingProvider& provider) {
  if (query.mask_positions[0] == query.mask_positions[1])
    throw ValidationError("query " + query.pattern_id + ": mask positions coincide");
  Embedding e;
  e.vector = mean_of(provider.embed(query), provider.dim());
  e.provenance = provenance_of(kind);
  e.source_query_id = query.pattern_id;
  return e;
}

ProbeQuery mention_query(const PairMention& m, std::string_view mask_token) {
  m.validate();
  ProbeQuery q;
  q.pattern_id = "mention";
  q.bound_pair_id = m.id;
  std::size_t masks = 0;
  for (std::size_t i = 0; i < m.tokens.size();) {
    if (!q.text.empty()) q.text += ' ';
    if (i == m.head.begin || i == m.tail.begin) {
      const TokenSpan& span = i == m.head.begin ? m.head : m.tail;
      q.mask_positions[masks++] = q.text.size();
      q.text += mask_token;
      i = span.end;
    } else {
      q.text += m.tokens[i++];
    }
  }
  return q;
}

Embedding mention_representation(const PairMention& m, const EmbeddingProvider& provider) {
  const ProbeQuery q = mention_query(m, provider.mask_token());
  Embedding e;
  e.vector = mean_of(provider.embed(q), provider.dim());
  e.provenance = Provenance::mention_context;
  e.source_query_id = m.id;
  return e;
}

std::vector<Embedding> class_representations(const std::string& class_name,
                                             std::span<const SeedPair> seeds,
                                             std::span<const HearstPattern> patterns,
                                             const EmbeddingProvider& provider,
                                             std::optional<PatternKind> kind) {
  if (seeds.empty()) throw ValidationError("class " + class_name + ": no seeds");
  std::vector<const HearstPattern*> selected;
  for (const auto& p : patterns)
    if (!kind || p.kind() == *kind) selected.push_back(&p);
  if (selected.empty()) throw ValidationError("class " + class_name + ": no patterns of requested kind");

  std::vector<Embedding> out;
  out.reserve(seeds.size() * selected.size());
  const std::string mask = provider.mask_token();
  for (const auto& seed : seeds) {
    for (const auto* p : selected) {
      const ProbeQuery q = render_query(*p, SlotBindings{seed, class_name}, mask);
      out.push_back(pair_representation(q, p->kind(), provider));
    }
  }
  return out;
}

Embedding mean_representation(std::span<const Embedding> reps) {
  if (reps.empty()) throw ValidationError("mean_representation: no inputs");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(reps.front().dim());
  for (const auto& r : reps) {
    if (r.dim() != acc.size()) throw DimensionMismatch("mean_representation: dimension mismatch");
    if (r.provenance != reps.front().provenance)
      throw ValidationError("mean_representation: mixed provenance");
    acc += r.vector.cast<double>();
  }
  Embedding e;
  e.vector = (acc / static_cast<double>(reps.size())).cast<float>();
  e.provenance = reps.front().provenance;
  if (reps.size() == 1) e.source_query_id = reps.front().source_query_id;
  return e;
}

// ---------------------------------------------------------------------------

MaskVectors HashProvider::embed(const ProbeQuery& query) const {
  const std::uint64_t base = fnv1a64(query.text);
  auto draw = [&](std::uint64_t ordinal) {
    Vector v(dim_);
    std::uint64_t state = base ^ (ordinal * 0x9E3779B97F4A7C15ull);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      // top 24 bits -> [-1, 1)
      const auto bits = splitmix64(state) >> 40;
      v[i] = static_cast<float>(static_cast<double>(bits) / 8388608.0 - 1.0);
    }
    return v;
  };
  return {draw(1), draw(2)};
}

// ---------------------------------------------------------------------------

namespace {

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ProviderError("embedding service: vector is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<float>();
  return v;
}

}  // namespace

HttpProvider::HttpProvider(std::string base_url) {
  static const std::regex url_re(R"(^http://([^:/]+)(?::(\d+))?/?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, url_re))
    throw ValidationError("provider url must look like http://host:port, got " + base_url);
  host_ = m[1];
  port_ = m[2].matched ? std::stoi(m[2]) : 80;

  httplib::Client cli(host_, port_);
  auto res = cli.Get("/v1/info");
  if (!res) throw ProviderError("embedding service unreachable at " + base_url);
  if (res->status != 200)
    throw ProviderError("embedding service /v1/info returned HTTP " + std::to_string(res->status));
  try {
    const auto info = nlohmann::json::parse(res->body);
    model_id_ = info.at("model_id").get<std::string>();
    dim_ = info.at("dim").get<Eigen::Index>();
    mask_ = info.at("mask_token").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("embedding service /v1/info: ") + e.what());
  }
  if (dim_ <= 0) throw ProviderError("embedding service advertised non-positive dim");
}

MaskVectors HttpProvider::embed(const ProbeQuery& query) const {
  return embed_batch(std::span<const ProbeQuery>(&query, 1)).front();
}

std::vector<MaskVectors> HttpProvider::embed_batch(std::span<const ProbeQuery> queries) const {
  nlohmann::json req;
  req["deterministic"] = true;
  req["texts"] = nlohmann::json::array();
  for (const auto& q : queries) req["texts"].push_back(q.text);

  httplib::Client cli(host_, port_);
  auto res = cli.Post("/v1/embed", req.dump(), "application/json");
  if (!res) throw ProviderError("embedding service unreachable");
  if (res->status != 200)
    throw ProviderError("embedding service /v1/embed returned HTTP " + std::to_string(res->status) +
                        ": " + res->body);
  std::vector<MaskVectors> out;
  try {
    const auto body = nlohmann::json::parse(res->body);
    const auto& results = body.at("results");
    if (results.size() != queries.size())
      throw ProviderError("embedding service returned " + std::to_string(results.size()) +
                          " results for " + std::to_string(queries.size()) + " texts");
    for (const auto& r : results) {
      const auto& mv = r.at("mask_vectors");
      if (mv.size() != 2) throw ProviderError("embedding service: expected two mask vectors");
      out.push_back({vector_from_json(mv[0]), vector_from_json(mv[1])});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("embedding service /v1/embed: ") + e.what());
  }
  return out;
}

}  // namespace coex
