#include "coex/classrank.hpp"
#include "coex/coexpand.hpp"
#include "coex/sampling.hpp"
#include "coex/scoring.hpp"

#include "instances.hpp"
#include "oracles.hpp"
#include "planted.hpp"

#include "doctest.h"

#include <random>
#include <set>

using namespace coex;

namespace {

Embedding as(Provenance p, const Vector& v) { return {v, p, {}}; }

void put3(EmbeddingStore& store, const std::string& id, const Vector& analogous, const Vector& contrastive,
          const Vector& mention) {
  store.put({id, Provenance::analogous_pattern}, as(Provenance::analogous_pattern, analogous));
  store.put({id, Provenance::contrastive_pattern}, as(Provenance::contrastive_pattern, contrastive));
  store.put({id, Provenance::mention_context}, as(Provenance::mention_context, mention));
}

ExemplarSet members(const std::string& cls, std::initializer_list<std::string> ids, const EmbeddingStore& store) {
  ExemplarSet s(cls);
  for (const auto& id : ids) s.add(id, store.get(id, Provenance::analogous_pattern), MemberOrigin::seed);
  return s;
}

/// Two classes on orthogonal axes: c's members sit on e0 (analogous) and e1
/// (contrastive); n's members the other way round.
struct TwoClass {
  EmbeddingStore store;
  ExemplarState state;
  ContrastiveMap contrastive;
  ExpansionConfig config;

  TwoClass() {
    const Vector e0 = Vector::Unit(3, 0), e1 = Vector::Unit(3, 1);
    put3(store, "c0", e0, e1, e0);
    put3(store, "c1", e0, e1, e0);
    put3(store, "n0", e1, e0, e1);
    put3(store, "n1", e1, e0, e1);
    state["c"] = members("c", {"c0", "c1"}, store);
    state["n"] = members("n", {"n0", "n1"}, store);
    contrastive["c"] = {"c", {"n"}, {1.0}};
    contrastive["n"] = {"n", {"c"}, {1.0}};
    config.ensemble_rounds = 4;
    config.sample_size = 2;
    config.num_contrastive = 1;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// sampling

TEST_CASE("stream seed derivation matches the reference mix") {
  for (std::uint64_t master : {0ull, 1ull, 0xDEADBEEFull})
    for (const char* cls : {"", "per:title", "org:country_of_branch"})
      for (std::uint64_t it = 0; it < 3; ++it)
        for (std::uint64_t round = 1; round < 4; ++round) {
          const auto expect = oracle::ref_mix(oracle::ref_mix(oracle::ref_mix(master ^ oracle::ref_fnv(cls)) ^ it) ^ round);
          CHECK(derive_stream_seed({master, cls, it, round}) == expect);
        }
}

TEST_CASE("bounded_draw stays in range and is roughly uniform") {
  std::mt19937_64 eng(3);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto x = bounded_draw(eng, 7);
    REQUIRE(x < 7);
    ++hist[x];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
  CHECK(bounded_draw(eng, 1) == 0);
}

TEST_CASE("sample_exemplars") {
  EmbeddingStore store;
  ExemplarSet set("c");
  for (int i = 0; i < 10; ++i) {
    const std::string id = "p" + std::to_string(9 - i);  // insertion order differs from name order
    set.add(id, as(Provenance::analogous_pattern, Vector::Constant(2, static_cast<float>(i + 1))), MemberOrigin::seed);
  }

  SUBCASE("sample_size >= |X_c| returns the whole set in insertion order") {
    const auto d = sample_exemplars(set, 10, {1, "c", 1, 2});
    REQUIRE(d.member_ids.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(d.member_ids[i] == set[i].pair_id);
    CHECK(sample_exemplars(set, 50, {1, "c", 1, 2}).member_ids == d.member_ids);
    CHECK(d.round_index == 2);
  }
  SUBCASE("same stream twice gives the same draw") {
    CHECK(sample_exemplars(set, 3, {99, "c", 2, 4}).member_ids == sample_exemplars(set, 3, {99, "c", 2, 4}).member_ids);
  }
  SUBCASE("10 members, size 3 against the reference shuffle") {
    for (std::uint64_t master = 0; master < 50; ++master)
      for (std::uint64_t round = 1; round <= 5; ++round) {
        const auto d = sample_exemplars(set, 3, {master, "c", 1, round});
        const auto idx = oracle::ref_sample(10, 3, master, "c", 1, round);
        REQUIRE(d.member_ids.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(d.member_ids[i] == set[idx[i]].pair_id);
        CHECK(std::set<std::string>(d.member_ids.begin(), d.member_ids.end()).size() == 3);
      }
  }
  SUBCASE("different rounds draw different subsets at least sometimes") {
    std::set<std::vector<std::string>> seen;
    for (std::uint64_t round = 1; round <= 20; ++round) seen.insert(sample_exemplars(set, 3, {7, "c", 1, round}).member_ids);
    CHECK(seen.size() > 10);
  }
  SUBCASE("errors") {
    CHECK_THROWS(sample_exemplars(ExemplarSet("e"), 3, {}));
    CHECK_THROWS(sample_exemplars(set, 0, {}));
  }
}

// ---------------------------------------------------------------------------
// sampled scores

TEST_CASE("sampled_positive_score") {
  EmbeddingStore store;
  const Vector x = (Vector(6) << 1, 2, 3, 4, 5, 6).finished();
  put3(store, "self", x, x, x);
  CHECK(sampled_positive_score(as(Provenance::mention_context, x), {1, "c", {"self"}}, store) == doctest::Approx(1.0));

  put3(store, "o1", Vector::Unit(6, 1), x, x);
  put3(store, "o2", Vector::Unit(6, 4), x, x);
  const Vector e0 = Vector::Unit(6, 0);
  CHECK(sampled_positive_score(as(Provenance::mention_context, e0), {1, "c", {"o1", "o2"}}, store) == 0.0);

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingStore s;
    std::vector<std::string> ids;
    std::vector<oracle::Vec> plain;
    for (int i = 0; i < 4; ++i) {
      const auto v = instances::random_vector(gen, 6);
      ids.push_back("m" + std::to_string(i));
      put3(s, ids.back(), v, -v, v);
      plain.push_back(oracle::to_vec(v));
    }
    const auto xp = instances::random_vector(gen, 6);
    double expect = 0;
    for (const auto& p : plain) expect += oracle::cos(oracle::to_vec(xp), p);
    expect /= 4;
    CHECK(sampled_positive_score(as(Provenance::mention_context, xp), {1, "c", ids}, s) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("sampled_contrastive_score") {
  EmbeddingStore store;
  const Vector x = (Vector(3) << 1, -1, 2).finished();
  put3(store, "a", Vector::Unit(3, 0), x, x);
  put3(store, "b", Vector::Unit(3, 0), x, x);
  const ContrastiveSet one{"c", {"n"}, {1.0}};
  const std::vector<SampleDraw> draws = {{1, "n", {"a", "b"}}};
  CHECK(sampled_contrastive_score(as(Provenance::mention_context, x), one, draws, store) == doctest::Approx(1.0));

  put3(store, "o", x, Vector::Unit(3, 2), x);
  const std::vector<SampleDraw> orth = {{1, "n", {"o"}}};
  CHECK(sampled_contrastive_score(as(Provenance::mention_context, Vector::Unit(3, 0)), one, orth, store) == 0.0);

  SUBCASE("2 negatives x 3 draws against a nested loop") {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 20; ++trial) {
      EmbeddingStore s;
      std::vector<SampleDraw> ds = {{1, "n1", {}}, {1, "n2", {}}};
      std::vector<std::vector<oracle::Vec>> plain(2);
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 3; ++i) {
          const std::string id = "n" + std::to_string(j) + "_" + std::to_string(i);
          const auto v = instances::random_vector(gen, 5);
          put3(s, id, -v, v, v);
          ds[static_cast<std::size_t>(j)].member_ids.push_back(id);
          plain[static_cast<std::size_t>(j)].push_back(oracle::to_vec(v));
        }
      const auto xp = instances::random_vector(gen, 5);
      double outer = 0;
      for (const auto& cls : plain) {
        double inner = 0;
        for (const auto& v : cls) inner += oracle::cos(oracle::to_vec(xp), v);
        outer += inner / 3;
      }
      const ContrastiveSet two{"c", {"n2", "n1"}, {2.0, 1.0}};
      CHECK(sampled_contrastive_score(as(Provenance::mention_context, xp), two, ds, s) == doctest::Approx(outer / 2).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(sampled_contrastive_score(as(Provenance::mention_context, x), {"c", {}, {}}, draws, store), ValidationError);
    const ContrastiveSet missing{"c", {"zz"}, {1.0}};
    CHECK_THROWS_AS(sampled_contrastive_score(as(Provenance::mention_context, x), missing, draws, store), ValidationError);
  }
}

TEST_CASE("pair_rank") {
  CHECK(pair_rank(1, 1) == 1.0);
  CHECK(pair_rank(0, 0.7) == 0.0);
  CHECK(pair_rank(0, -3) == 0.0);
  CHECK(pair_rank(0.5, 0.08) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pair_rank(-0.5, 0.9) == 0.0);
  CHECK(pair_rank(0.5, 0.08, RankCombine::arithmetic) == doctest::Approx(0.29));
}

// ---------------------------------------------------------------------------
// ensemble

TEST_CASE("ensemble_score degenerate cases") {
  TwoClass f;
  SUBCASE("member dominant in every round with r = 1 gives 2T") {
    const auto r = ensemble_score(f.store.get("c0", Provenance::mention_context), "c0", "c", f.state, f.contrastive, f.config, f.store);
    CHECK(r.S == doctest::Approx(2.0 * f.config.ensemble_rounds));
    REQUIRE(r.per_round.size() == 4);
    for (const auto& o : r.per_round) {
      CHECK(o.dominated);
      CHECK(o.r_pos == doctest::Approx(1.0));
      CHECK(o.max_r_neg == 0.0);
    }
  }
  SUBCASE("never dominant gives 0") {
    const auto r = ensemble_score(f.store.get("n0", Provenance::mention_context), "n0", "c", f.state, f.contrastive, f.config, f.store);
    CHECK(r.S == 0.0);
    for (const auto& o : r.per_round) CHECK_FALSE(o.dominated);
  }
  SUBCASE("missing contrastive set is diagnosable") {
    auto partial = f.contrastive;
    partial.erase("n");
    CHECK_THROWS_AS(ensemble_score(f.store.get("c0", Provenance::mention_context), "c0", "c", f.state, partial, f.config, f.store), NotFound);
  }
}

TEST_CASE("ensemble_score replays against the literal oracle") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto b = instances::random_instance(seed);
    const DrawTable table(b.state, b.config, b.plain.iteration);
    for (const auto& [cls, set] : b.state) {
      for (int t = 1; t <= b.config.ensemble_rounds; ++t) CHECK(table.at(cls, t).member_ids == oracle::drawn(b.plain, cls, t));

      std::vector<std::string> probes = {set[0].pair_id, b.outsiders.front()};
      for (const auto& id : probes) {
        const auto& xp = b.store.get(id, Provenance::mention_context);
        const auto got = ensemble_score(xp, id, cls, b.state, b.contrastive, b.config, b.store, b.plain.iteration);
        const double expect = oracle::S(b.plain, oracle::to_vec(xp.vector), id, cls);
        CHECK(got.S == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ensemble_score, T = 3 with 2 negatives on planted embeddings") {
  planted::Options o;
  o.classes = 3;
  o.candidates = 12;
  o.center_norm = 6;
  auto corpus = planted::make(o);
  const auto state = make_seed_state(corpus.seed_ids, corpus.store);
  ExpansionConfig cfg;
  cfg.ensemble_rounds = 3;
  cfg.num_contrastive = 2;
  cfg.master_seed = 1234;
  const auto cmap = rank_contrastive_classes(state, cfg.k, cfg.num_contrastive);

  oracle::Instance plain;
  plain.rounds = 3;
  plain.sample_size = cfg.sample_size;
  plain.master_seed = cfg.master_seed;
  plain.iteration = 1;
  for (const auto& [cls, set] : state) {
    for (const auto& m : set.members()) plain.members[cls].push_back(m.pair_id);
    plain.negatives[cls] = cmap.at(cls).negatives;
    CHECK(cmap.at(cls).negatives.size() == 2);
  }
  for (const auto& e : corpus.store.entries()) {
    auto& rep = plain.reps[e.key.id];
    if (e.key.provenance == Provenance::analogous_pattern) rep.analogous = oracle::to_vec(e.embedding.vector);
    if (e.key.provenance == Provenance::contrastive_pattern) rep.contrastive = oracle::to_vec(e.embedding.vector);
  }
  int dominated_somewhere = 0;
  for (const auto& id : corpus.candidates)
    for (const auto& [cls, set] : state) {
      const auto& xp = corpus.store.get(id, Provenance::mention_context);
      const auto got = ensemble_score(xp, id, cls, state, cmap, cfg, corpus.store);
      CHECK(got.S == doctest::Approx(oracle::S(plain, oracle::to_vec(xp.vector), id, cls)).epsilon(1e-12));
      if (got.S > 0) ++dominated_somewhere;
    }
  CHECK(dominated_somewhere > 0);
}

// ---------------------------------------------------------------------------
// expand_iteration / expand

TEST_CASE("expand_iteration threshold and argmax rules") {
  TwoClass f;
  SUBCASE("all candidates at S = 0 leave the state unchanged") {
    put3(f.store, "z0", Vector::Unit(3, 2), Vector::Unit(3, 2), Vector::Unit(3, 2));
    put3(f.store, "z1", Vector::Unit(3, 2), Vector::Unit(3, 2), Vector::Unit(3, 2) * 3.0f);
    const std::vector<std::string> cands = {"z0", "z1"};
    const auto out = expand_iteration(f.state, cands, f.contrastive, f.config, f.store, 1);
    CHECK(out.additions.empty());
    CHECK(out.state.at("c").size() == 2);
    CHECK(out.state.at("n").size() == 2);
  }
  SUBCASE("one addition per class takes the unique maximum") {
    const Vector e0 = Vector::Unit(3, 0), e2 = Vector::Unit(3, 2);
    put3(f.store, "best", e0, e0, e0);
    put3(f.store, "okay", e0, e0, Vector(e0 + 0.5f * e2));
    put3(f.store, "meh", e0, e0, Vector(e0 + 0.9f * e2));
    f.config.additions_per_iteration = 1;
    const std::vector<std::string> cands = {"meh", "okay", "best"};
    const auto out = expand_iteration(f.state, cands, f.contrastive, f.config, f.store, 1);
    REQUIRE(out.additions.size() == 1);
    CHECK(out.additions[0].result.pair_id == "best");
    CHECK(out.additions[0].result.class_name == "c");
    CHECK(out.state.at("c").size() == 3);
    CHECK(out.state.at("c")[2].pair_id == "best");
    CHECK(out.state.at("c")[2].origin == MemberOrigin::expanded);
  }
  SUBCASE("existing members are not re-added") {
    const std::vector<std::string> cands = {"c0", "n1"};
    CHECK(expand_iteration(f.state, cands, f.contrastive, f.config, f.store, 1).additions.empty());
  }
}

TEST_CASE("expand_iteration on a planted 3-cluster corpus follows oracle S ordering") {
  planted::Options o;
  o.classes = 3;
  o.candidates = 30;
  o.center_norm = 10;
  o.seed = 77;
  const auto corpus = planted::make(o);
  const auto state = make_seed_state(corpus.seed_ids, corpus.store);
  ExpansionConfig cfg;
  cfg.num_contrastive = 2;
  cfg.additions_per_iteration = 3;
  cfg.master_seed = 5;
  const auto cmap = rank_contrastive_classes(state, cfg.k, cfg.num_contrastive);

  oracle::Instance plain;
  plain.rounds = cfg.ensemble_rounds;
  plain.sample_size = cfg.sample_size;
  plain.master_seed = cfg.master_seed;
  plain.iteration = 1;
  for (const auto& [cls, set] : state) {
    for (const auto& m : set.members()) plain.members[cls].push_back(m.pair_id);
    plain.negatives[cls] = cmap.at(cls).negatives;
  }
  for (const auto& e : corpus.store.entries()) {
    auto& rep = plain.reps[e.key.id];
    if (e.key.provenance == Provenance::analogous_pattern) rep.analogous = oracle::to_vec(e.embedding.vector);
    if (e.key.provenance == Provenance::contrastive_pattern) rep.contrastive = oracle::to_vec(e.embedding.vector);
  }

  // Oracle selection: best class per candidate (ties by name), then per class
  // (S desc, id asc), keep the top 3 with S > 0.
  std::map<std::string, std::vector<std::pair<double, std::string>>> per_class;
  for (const auto& id : corpus.candidates) {
    const auto xp = oracle::to_vec(corpus.store.get(id, Provenance::mention_context).vector);
    double best = 0;
    std::string best_cls;
    for (const auto& [cls, ids] : plain.members) {
      const double s = oracle::S(plain, xp, id, cls);
      if (s > best) {
        best = s;
        best_cls = cls;
      }
    }
    if (!best_cls.empty()) per_class[best_cls].push_back({-best, id});
  }
  std::vector<std::pair<std::string, std::string>> expect;  // (class, id) in class order
  for (auto& [cls, list] : per_class) {
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < list.size() && i < 3; ++i) expect.push_back({cls, list[i].second});
  }

  const auto out = expand_iteration(state, corpus.candidates, cmap, cfg, corpus.store, 1);
  std::vector<std::pair<std::string, std::string>> got;
  for (const auto& a : out.additions) got.push_back({a.result.class_name, a.result.pair_id});
  CHECK(got == expect);
  CHECK(got.size() == 9);
}

TEST_CASE("expand no-op budgets") {
  TwoClass f;
  put3(f.store, "x", Vector::Unit(3, 0), Vector::Unit(3, 0), Vector::Unit(3, 0));
  const std::vector<std::string> pool = {"x"};
  auto cfg = f.config;
  cfg.iterations = 0;
  auto trace = expand(f.state, pool, cfg, f.store);
  CHECK(trace.audit.empty());
  CHECK(trace.state.at("c").size() == 2);

  cfg.iterations = 3;
  trace = expand(f.state, std::span<const std::string>{}, cfg, f.store);
  CHECK(trace.audit.empty());
  CHECK(trace.state.at("n").size() == 2);

  trace = expand(f.state, pool, cfg, f.store);
  CHECK(trace.audit.size() == 1);
  CHECK(trace.state.at("c").contains("x"));
  CHECK(trace.contrastive_per_iteration.size() == 3);
}

TEST_CASE("expand keeps seeds, grows monotonically and is job-count independent") {
  planted::Options o;
  o.classes = 4;
  o.candidates = 60;
  o.center_norm = 12;
  const auto corpus = planted::make(o);
  const auto seeds = make_seed_state(corpus.seed_ids, corpus.store);
  ExpansionConfig cfg;
  cfg.num_contrastive = 2;
  cfg.iterations = 3;
  cfg.master_seed = 42;

  const auto one = expand(seeds, corpus.candidates, cfg, corpus.store, {1, true});
  for (const auto& [cls, set] : seeds) {
    const auto& grown = one.state.at(cls);
    REQUIRE(grown.size() >= set.size());
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(grown[i].pair_id == set[i].pair_id);
  }
  std::set<std::string> added;
  for (const auto& a : one.audit) CHECK(added.insert(a.result.pair_id).second);
  CHECK_FALSE(one.audit.empty());

  const auto log = audit_to_jsonl(one.audit);
  for (int jobs : {2, 4, 8}) {
    const auto other = expand(seeds, corpus.candidates, cfg, corpus.store, {jobs, true});
    CHECK(audit_to_jsonl(other.audit) == log);
  }
}

TEST_CASE("non-exclusive assignment may add one pair to several classes") {
  TwoClass f;
  // Equally close to both classes on the analogous side.
  const Vector mid = (Vector(3) << 1, 1, 0).finished();
  put3(f.store, "mid", mid, mid, mid);
  f.config.rank_combine = RankCombine::arithmetic;
  const std::vector<std::string> cands = {"mid"};
  const auto excl = expand_iteration(f.state, cands, f.contrastive, f.config, f.store, 1, {1, true});
  const auto both = expand_iteration(f.state, cands, f.contrastive, f.config, f.store, 1, {1, false});
  CHECK(excl.additions.size() <= 1);
  CHECK(both.additions.size() >= excl.additions.size());
}

TEST_CASE("audit jsonl layout") {
  AuditRecord rec{2, {"p", "c", 1.5, {{0.5, 0.25, true}, {0.1, 0.2, false}}}};
  const std::vector<AuditRecord> audit = {rec};
  CHECK(audit_to_jsonl(audit) ==
        R"({"iteration":2,"class":"c","pair_id":"p","S":1.5,"per_round":[{"r_pos":0.5,"max_r_neg":0.25,"dominated":true},{"r_pos":0.1,"max_r_neg":0.2,"dominated":false}]})"
        "\n");
}
