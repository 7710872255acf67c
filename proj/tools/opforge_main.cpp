// opforge: operator-learning reduced-order models for a desk-scale laser
// deposition thermal model. Subcommands cover the whole study pipeline:
// data generation, ROM training, evaluation, hyperparameter search, and
// variance-based sensitivity analysis.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "opforge/workflow.hpp"

namespace {

std::size_t workers_or_env(std::size_t flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("OPFORGE_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 0;  // auto
}

void fail(const std::string& command, const std::string& message) {
  std::cerr << R"({"error":")" << command << R"(","message":")" << message << "\"}\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-learning ROM toolkit for laser deposition thermal response"};
  app.require_subcommand(1);

  std::string config_path, dataset_path, model_path, out_dir = ".";
  std::string model_kind = "dnn", target = "scalar";
  std::uint64_t seed = 42;
  std::size_t workers = 0, n_base = 1024;

  auto* gen = app.add_subcommand("generate", "run the sampling campaign and write the dataset");
  gen->add_option("--config", config_path, "campaign config file (key = value)");
  auto* gen_seed = gen->add_option("--seed", seed, "root seed");
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--workers", workers, "max parallel simulations");

  auto* tr = app.add_subcommand("train", "train one ROM on a dataset");
  tr->add_option("--dataset", dataset_path, "dataset file")->required();
  tr->add_option("--model-kind", model_kind, "dnn|deeponet|fno");
  tr->add_option("--target", target, "scalar|series");
  tr->add_option("--config", config_path, "training config file");
  tr->add_option("--seed", seed, "root seed");
  tr->add_option("--out", out_dir, "output directory");

  auto* ev = app.add_subcommand("evaluate", "evaluate a trained model on the test split");
  ev->add_option("--dataset", dataset_path, "dataset file")->required();
  ev->add_option("--model", model_path, "model file")->required();
  ev->add_option("--out", out_dir, "output directory");

  auto* hs = app.add_subcommand("hypersearch", "train and rank the six model groups");
  hs->add_option("--dataset", dataset_path, "dataset file")->required();
  hs->add_option("--model-kind", model_kind, "dnn|deeponet|fno");
  hs->add_option("--target", target, "scalar|series");
  hs->add_option("--config", config_path, "training config file");
  hs->add_option("--seed", seed, "root seed");
  hs->add_option("--out", out_dir, "output directory");
  hs->add_option("--workers", workers, "max parallel candidate runs");

  auto* se = app.add_subcommand("sensitivity", "Sobol indices of a trained model");
  se->add_option("--model", model_path, "model file")->required();
  se->add_option("--n-base", n_base, "Saltelli base sample count (power of two)");
  se->add_option("--seed", seed, "root seed");
  se->add_option("--out", out_dir, "output directory");
  se->add_option("--workers", workers, "max parallel evaluations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    fail("usage", e.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (gen->parsed()) {
      opforge::GenerateOptions opts;
      opts.config_path = config_path;
      opts.out_dir = out_dir;
      opts.seed = seed;
      opts.seed_from_flag = gen_seed->count() > 0;
      opts.workers = workers_or_env(workers);
      opforge::run_generate(opts);
    } else if (tr->parsed()) {
      opforge::TrainOptions opts;
      opts.dataset_path = dataset_path;
      opts.out_dir = out_dir;
      opts.config_path = config_path;
      opts.kind = opforge::rom_kind_from_name(model_kind);
      if (target != "scalar" && target != "series")
        throw std::invalid_argument("--target must be scalar or series");
      opts.series_target = target == "series";
      opts.seed = seed;
      opforge::run_train(opts);
    } else if (ev->parsed()) {
      opforge::EvaluateOptions opts;
      opts.dataset_path = dataset_path;
      opts.model_path = model_path;
      opts.out_dir = out_dir;
      opforge::run_evaluate(opts);
    } else if (hs->parsed()) {
      opforge::HypersearchOptions opts;
      opts.dataset_path = dataset_path;
      opts.out_dir = out_dir;
      opts.config_path = config_path;
      opts.kind = opforge::rom_kind_from_name(model_kind);
      if (target != "scalar" && target != "series")
        throw std::invalid_argument("--target must be scalar or series");
      opts.series_target = target == "series";
      opts.seed = seed;
      opts.workers = workers_or_env(workers);
      opforge::run_hypersearch(opts);
    } else if (se->parsed()) {
      opforge::SensitivityOptions opts;
      opts.model_path = model_path;
      opts.out_dir = out_dir;
      opts.n_base = n_base;
      opts.seed = seed;
      opts.workers = workers_or_env(workers);
      opforge::run_sensitivity(opts);
    }
  } catch (const std::exception& e) {
    fail(command, e.what());
    return 1;
  }
  return 0;
}
