// coex: co-set expansion pipeline.
//
//   coex probe         --seeds S [--dataset D] [--patterns P] [--provider hash:64|http://..] --out store.bin
//   coex rank-classes  --store store.bin --seeds S [--config C] --out contrastive.json
//   coex expand        --store store.bin --seeds S --candidates D [--config C] [--seed N] [--jobs J] --out dir
//   coex fuse-eval     --store store.bin --scores cls.jsonl --sets dir/sets.json --dataset D [--lambda L ...] --out dir
//   coex filter-seeds  --seeds S [--stopwords W] --out kept.json
//
// Exit codes: 0 success, 1 validation error, 2 provider/IO error.

#include "coex/app.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using coex::app::fs::path;

struct Common {
  std::string schema = "retacred";
  std::string store;
  std::string seeds;
  std::string patterns;
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
};

std::optional<path> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<path>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"co-set expansion for relation extraction"};
  cli.require_subcommand(1);

  Common c;
  std::string dataset;
  std::string provider = "hash:64";
  std::string candidates;
  std::string scores;
  std::string sets;
  std::string stopwords;
  std::vector<double> lambdas;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--schema", c.schema, "retacred | tacrev | semeval | schema JSON path");
    sub->add_option("--out", c.out, "output path")->required();
  };

  auto* probe = cli.add_subcommand("probe", "embed seeds and mentions into a store file");
  add_common(probe);
  probe->add_option("--seeds", c.seeds)->required();
  probe->add_option("--patterns", c.patterns);
  probe->add_option("--dataset", dataset, "TACRED-format mentions to embed");
  probe->add_option("--provider", provider, "hash:<dim> or http://host:port");

  auto* rank = cli.add_subcommand("rank-classes", "select contrastive classes per relation");
  add_common(rank);
  rank->add_option("--store", c.store)->required();
  rank->add_option("--seeds", c.seeds)->required();
  rank->add_option("--config", c.config);

  auto* expand = cli.add_subcommand("expand", "co-expand exemplar sets");
  add_common(expand);
  expand->add_option("--store", c.store)->required();
  expand->add_option("--seeds", c.seeds)->required();
  expand->add_option("--candidates", candidates, "TACRED-format candidate pool")->required();
  expand->add_option("--config", c.config);
  expand->add_option("--seed", c.seed, "master RNG seed (overrides config)");
  expand->add_option("--jobs", c.jobs)->check(CLI::PositiveNumber);

  auto* fuse = cli.add_subcommand("fuse-eval", "fuse classifier scores and evaluate");
  add_common(fuse);
  fuse->add_option("--store", c.store)->required();
  fuse->add_option("--scores", scores, "classifier scores JSON-lines")->required();
  fuse->add_option("--sets", sets, "sets.json written by expand")->required();
  fuse->add_option("--dataset", dataset, "gold-labelled TACRED-format records")->required();
  fuse->add_option("--config", c.config);
  fuse->add_option("--lambda", lambdas, "one or more lambda values (sweep)");

  auto* filter = cli.add_subcommand("filter-seeds", "drop pronoun-bearing seeds");
  add_common(filter);
  filter->add_option("--seeds", c.seeds)->required();
  filter->add_option("--stopwords", stopwords, "one word per line; default English pronouns");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (probe->parsed()) {
      const auto s = coex::app::run_probe(
          {c.schema, c.seeds, opt_path(c.patterns), opt_path(dataset), provider, c.out});
      std::cout << "wrote " << s.seed_records << " seed and " << s.mention_records
                << " mention representations to " << c.out << "\n";
    } else if (rank->parsed()) {
      const auto map = coex::app::run_rank_classes({c.schema, c.store, c.seeds, opt_path(c.config), c.out});
      std::cout << "ranked contrastive classes for " << map.size() << " classes\n";
    } else if (expand->parsed()) {
      const auto trace = coex::app::run_expand(
          {c.schema, c.store, c.seeds, candidates, opt_path(c.config), c.seed, c.jobs, c.out});
      std::cout << "added " << trace.audit.size() << " exemplars\n";
    } else if (fuse->parsed()) {
      const auto ms = coex::app::run_fuse_eval(
          {c.schema, c.store, scores, sets, dataset, opt_path(c.config), lambdas, c.out});
      for (const auto& m : ms)
        std::cout << "accuracy " << m.accuracy << "  micro-F1 " << m.micro_f1 << "\n";
    } else if (filter->parsed()) {
      const auto r = coex::app::run_filter_seeds({c.schema, c.seeds, opt_path(stopwords), c.out});
      for (const auto& rej : r.rejected)
        std::cout << "rejected " << rej.class_name << " ('" << rej.seed.head << "', '"
                  << rej.seed.tail << "'): " << rej.matched << "\n";
    }
  } catch (const coex::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const coex::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const coex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
