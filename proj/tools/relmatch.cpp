#include "relmatch/app/commands.hpp"
#include "relmatch/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>

namespace {

namespace app = relmatch::app;

struct Flags {
  std::string config;
  std::string out, features_dir, captions, val_captions, checkpoint, predicates;
  std::optional<std::uint64_t> seed;
  std::optional<long> folds, k, pairs;
  std::vector<std::string> overrides;
};

app::CommandOptions resolve(const Flags& f) {
  app::CommandOptions o;
  if (!f.config.empty()) o.config = relmatch::load_config(f.config);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw relmatch::ConfigError("--set expects key=value, got '" + kv + "'");
    relmatch::set_config_value(o.config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) o.config.seed = *f.seed;
  if (f.folds) o.config.folds = *f.folds;
  if (f.k) o.config.k = *f.k;
  if (f.pairs) o.config.synth_pairs = *f.pairs;
  relmatch::validate(o.config);
  o.out = f.out;
  o.features_dir = f.features_dir;
  o.captions = f.captions;
  o.val_captions = f.val_captions;
  o.checkpoint = f.checkpoint;
  o.predicates = f.predicates;
  o.log = &std::cout;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Relation-aware image-text matching and captioning"};
  cli.set_version_flag("--version", std::string(relmatch::kVersion));
  cli.require_subcommand(1);
  Flags flags;
  int status = 0;

  auto add = [&](const char* name, const char* help, std::function<void(const app::CommandOptions&)> run) {
    CLI::App* sub = cli.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", flags.overrides, "override a configuration key (key=value)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--features-dir", flags.features_dir, "directory of per-image feature files");
    sub->add_option("--captions", flags.captions, "caption corpus (JSONL)");
    sub->add_option("--val-captions", flags.val_captions, "validation caption corpus (JSONL)");
    sub->add_option("--checkpoint", flags.checkpoint, "model checkpoint");
    sub->add_option("--folds", flags.folds, "number of evaluation folds");
    sub->add_option("--k", flags.k, "regions per image");
    sub->add_option("--pairs", flags.pairs, "synthetic image-caption pairs");
    sub->add_option("--predicates", flags.predicates, "predicate list, one phrase per line");
    sub->callback([&flags, run] { run(resolve(flags)); });
    return sub;
  };

  add("synth-data", "write a planted synthetic corpus", app::synth_data);
  add("train-matcher", "train the matcher", app::train_matcher);
  add("eval-retrieval", "evaluate bidirectional retrieval",
      [](const app::CommandOptions& o) { app::eval_retrieval(o); });
  add("train-captioner", "train the captioner with cross-entropy", app::train_captioner);
  add("caption", "generate captions", app::caption);
  add("scst-finetune", "fine-tune the captioner with self-critical training", app::scst_finetune);
  add("build-vrr-split", "select images whose captions contain a relation phrase", app::build_vrr_split);
  add("gradcheck", "finite-difference gradient check on toy models", [&status](const app::CommandOptions& o) {
    if (!app::gradcheck(o).passed()) status = 1;
  });
  add("sweep-temperature", "retrain and evaluate over the attention temperatures", app::sweep_temperature);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return status;
}
