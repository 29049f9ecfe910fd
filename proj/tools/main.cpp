#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"

namespace {

using glemb::cli::RunConfig;

// Per-invocation option values; only options the user actually passed
// override the config file.
struct Flags {
  std::string config_file;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string data;
  std::string checkpoint;
  std::string features;
  std::string mode;
  std::uint64_t identities = 0;
  std::uint64_t samples_per_view = 0;
  std::uint64_t dim = 0;
  std::uint64_t epochs = 0;
  std::uint64_t batch_size = 0;
  double learning_rate = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t instances = 0;
  std::uint64_t grad_batches = 0;
  std::string inject_fault;
  bool dump_features = false;
};

bool passed(const CLI::App& sub, const std::string& name) {
  const CLI::Option* opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

RunConfig resolve(const Flags& f, const CLI::App& sub) {
  RunConfig config;
  if (passed(sub, "--config")) {
    glemb::cli::apply_config_file(config, f.config_file);
  }
  if (passed(sub, "--seed")) config.set_seed(f.seed);
  if (passed(sub, "--out")) config.out_dir = f.out_dir;
  if (passed(sub, "--data")) config.data_path = f.data;
  if (passed(sub, "--checkpoint")) config.checkpoint_path = f.checkpoint;
  if (passed(sub, "--features")) config.features_path = f.features;
  if (passed(sub, "--mode")) config.train.mode = glemb::parse_mode(f.mode);
  if (passed(sub, "--identities")) config.synth.num_identities = f.identities;
  if (passed(sub, "--samples-per-view")) config.synth.samples_per_view = f.samples_per_view;
  if (passed(sub, "--dim")) config.synth.dim = f.dim;
  if (passed(sub, "--epochs")) config.train.epochs = f.epochs;
  if (passed(sub, "--batch-size")) config.train.batch_size = f.batch_size;
  if (passed(sub, "--lr")) config.train.lr.base = f.learning_rate;
  if (passed(sub, "--lambda")) config.train.loss.lambda = f.lambda;
  if (passed(sub, "--beta")) config.train.loss.beta = f.beta;
  if (passed(sub, "--trials")) config.eval.trials = f.trials;
  if (passed(sub, "--instances")) config.check.equivalence_instances = f.instances;
  if (passed(sub, "--grad-batches")) config.check.gradient_batches = f.grad_batches;
  if (passed(sub, "--inject-fault")) config.check.inject_fault = f.inject_fault;
  config.dump_features = f.dump_features;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glemb: joint softmax + graph-Laplacian metric embedding toolkit"};
  app.require_subcommand(1);
  Flags f;
  int exit_code = glemb::cli::kExitOk;

  auto add_common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config_file, "key=value configuration file");
    sub->add_option("--seed", f.seed, "RNG seed (required for gen-data/train)");
    sub->add_option("--out", f.out_dir, "output directory");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic identity dataset");
  add_common(gen);
  gen->add_option("--identities", f.identities, "number of identities");
  gen->add_option("--samples-per-view", f.samples_per_view, "samples per identity per view");
  gen->add_option("--dim", f.dim, "input dimension");
  gen->callback([&] { exit_code = glemb::cli::cmd_gen_data(resolve(f, *gen)); });

  CLI::App* train = app.add_subcommand("train", "train the embedding network");
  add_common(train);
  train->add_option("--data", f.data, "dataset CSV path");
  train->add_option("--mode", f.mode, "softmax|bgcl|bgtl|bgctl|joint");
  train->add_option("--epochs", f.epochs, "training epochs");
  train->add_option("--batch-size", f.batch_size, "batch size (even)");
  train->add_option("--lr", f.learning_rate, "base learning rate");
  train->add_option("--lambda", f.lambda, "joint trade-off weight");
  train->add_option("--beta", f.beta, "contrastive/triplet combination weight");
  train->callback([&] { exit_code = glemb::cli::cmd_train(resolve(f, *train)); });

  CLI::App* eval = app.add_subcommand("eval", "single-shot retrieval evaluation (CMC + mAP)");
  add_common(eval);
  eval->add_option("--data", f.data, "dataset CSV path");
  eval->add_option("--checkpoint", f.checkpoint, "trained checkpoint path");
  eval->add_option("--features", f.features, "precomputed feature file (CSV or binary)");
  eval->add_option("--trials", f.trials, "number of single-shot gallery splits");
  eval->add_flag("--dump-features", f.dump_features, "also write embedded features");
  eval->callback([&] { exit_code = glemb::cli::cmd_eval(resolve(f, *eval)); });

  CLI::App* check = app.add_subcommand("check", "run the verification property suite");
  add_common(check);
  check->add_option("--instances", f.instances, "random instances per equivalence property");
  check->add_option("--grad-batches", f.grad_batches, "batches per gradient property");
  check->add_option("--inject-fault", f.inject_fault,
                    "test-only mutation canary (triplet-sign)");
  check->callback([&] { exit_code = glemb::cli::cmd_check(resolve(f, *check)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : glemb::cli::kExitConfigError;
  } catch (const glemb::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return glemb::cli::kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return glemb::cli::kExitConfigError;
  }
  return exit_code;
}
