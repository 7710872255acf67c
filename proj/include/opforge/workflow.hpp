#pragma once

// Command implementations behind the CLI: data generation, training,
// evaluation, the hyperparameter grid, and sensitivity analysis. The CLI
// binary and the acceptance suite both call these. Everything written here
// except the run manifest (which records timestamps and wall-clock numbers)
// is byte-reproducible for a fixed config and seed.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "opforge/dataset_io.hpp"
#include "opforge/kvconfig.hpp"
#include "opforge/manifest.hpp"
#include "opforge/model_io.hpp"
#include "opforge/sobol.hpp"
#include "opforge/train.hpp"

namespace opforge {

namespace workflow_detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace workflow_detail

// =============================================================================
// generate
// =============================================================================

struct GenerateOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  bool seed_from_flag = false;  // a --seed flag beats the config file
  std::size_t workers = 0;
};

struct GenerateOutcome {
  std::string dataset_path;
  std::size_t n_samples = 0;
  std::size_t removed = 0;
  std::size_t retained = 0;
};

inline const std::set<std::string> kGenerateKeys{
    "n_samples", "seed", "split.train", "split.val", "split.test",
    "bounds.P.low", "bounds.P.high", "bounds.v.low", "bounds.v.high",
    "bounds.r.low", "bounds.r.high", "bounds.eta.low", "bounds.eta.high",
    "bounds.alpha.low", "bounds.alpha.high",
    "grid.nx", "grid.nz", "grid.dx", "grid.dz", "grid.scan_length",
    "grid.n_output_steps",
    "material.density", "material.specific_heat", "material.conductivity",
    "material.convection", "material.t_ambient", "material.t_melt"};

inline GenerateOutcome run_generate(const GenerateOptions& opts) {
  KvConfig cfg;
  if (!opts.config_path.empty()) cfg = KvConfig::from_file(opts.config_path);
  cfg.require_known_keys(kGenerateKeys);

  LhsDesign design;
  design.n_samples = cfg.get_u64("n_samples", 500);
  if (design.n_samples == 0) throw std::invalid_argument("generate: n_samples must be >= 1");
  design.seed = opts.seed_from_flag ? opts.seed : cfg.get_u64("seed", opts.seed);
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string base = std::string("bounds.") + ParamBounds::names[i];
    design.bounds[i].lo = cfg.get_double(base + ".low", design.bounds[i].lo);
    design.bounds[i].hi = cfg.get_double(base + ".high", design.bounds[i].hi);
  }

  GridSpec grid;
  grid.nx = cfg.get_u64("grid.nx", grid.nx);
  grid.nz = cfg.get_u64("grid.nz", grid.nz);
  grid.dx = cfg.get_double("grid.dx", grid.dx);
  grid.dz = cfg.get_double("grid.dz", grid.dz);
  grid.scan_length = cfg.get_double("grid.scan_length", grid.scan_length);
  grid.n_output_steps = cfg.get_u64("grid.n_output_steps", grid.n_output_steps);

  MaterialProps mat;
  mat.density = cfg.get_double("material.density", mat.density);
  mat.specific_heat = cfg.get_double("material.specific_heat", mat.specific_heat);
  mat.conductivity = cfg.get_double("material.conductivity", mat.conductivity);
  mat.convection = cfg.get_double("material.convection", mat.convection);
  mat.t_ambient = cfg.get_double("material.t_ambient", mat.t_ambient);
  mat.t_melt = cfg.get_double("material.t_melt", mat.t_melt);

  const std::array<double, 3> ratios{cfg.get_double("split.train", 0.8),
                                     cfg.get_double("split.val", 0.1),
                                     cfg.get_double("split.test", 0.1)};

  RunManifest manifest;
  manifest.command = "generate";
  manifest.config_path = opts.config_path;
  manifest.seed = design.seed;
  manifest.out_dir = opts.out_dir;
  manifest.started_at = iso8601_now();

  auto samples = lhs_sample(design);
  auto records = run_campaign(samples, mat, grid, opts.workers);
  auto filtered = filter_non_melting(records);
  if (filtered.retained.empty())
    throw std::runtime_error("generate: no melting samples; check bounds and material");

  Dataset ds = split_dataset(std::move(filtered.retained), ratios, design.seed);
  ds.removed_count = filtered.removed;
  ds.bounds = design.bounds;
  ds.grid = grid;
  ds.material = mat;

  workflow_detail::ensure_dir(opts.out_dir);
  GenerateOutcome outcome;
  outcome.dataset_path = workflow_detail::join_path(opts.out_dir, "dataset.jsonl");
  outcome.n_samples = design.n_samples;
  outcome.removed = filtered.removed;
  outcome.retained = ds.records.size();
  save_dataset(outcome.dataset_path, ds);

  manifest.add_artifact("dataset", outcome.dataset_path);
  manifest.finished_at = iso8601_now();
  write_manifest(workflow_detail::join_path(opts.out_dir, "run_manifest_generate.json"),
                 manifest);

  std::cout << "generate: " << design.n_samples << " samples, " << outcome.removed
            << " non-melting samples removed, " << outcome.retained << " retained\n";
  std::cout << "generate: split " << ds.split.train.size() << "/" << ds.split.val.size()
            << "/" << ds.split.test.size() << ", dataset " << outcome.dataset_path
            << "\n";
  return outcome;
}

// =============================================================================
// train / evaluate
// =============================================================================

struct TrainOptions {
  std::string dataset_path;
  std::string out_dir = ".";
  std::string config_path;  // optional training/model overrides
  RomKind kind = RomKind::dnn;
  bool series_target = false;
  std::uint64_t seed = 42;
};

struct TrainOutcome {
  std::string model_path;
  std::string report_path;
  std::string losses_path;
  std::string predictions_path;
  EvalReport report;
  TrainResult train_result;
};

inline const std::set<std::string> kTrainKeys{
    "epochs", "batch_size", "lr", "loss", "patience",
    "dnn.widths", "dnn.activation",
    "deeponet.branch_hidden", "deeponet.trunk_hidden", "deeponet.latent_dim",
    "deeponet.activation",
    "fno.modes", "fno.width", "fno.layers", "fno.projection_width"};

/// Model configuration from the config file, falling back to the defaults
/// used throughout the study (group-1 widths for the DNN, the 3x130
/// DeepONet, the 50-mode FNO).
inline RomConfig resolve_rom_config(RomKind kind, const KvConfig& cfg,
                                    std::size_t series_len) {
  switch (kind) {
    case RomKind::dnn: {
      DnnConfig c;
      c.hidden_widths = cfg.get_size_list("dnn.widths", {100, 150, 200, 150, 100});
      c.activation = cfg.get_string("dnn.activation", "relu");
      return c;
    }
    case RomKind::deeponet: {
      DeepOnetConfig c;
      c.branch_hidden = cfg.get_size_list("deeponet.branch_hidden", {130, 130, 130});
      c.trunk_hidden = cfg.get_size_list("deeponet.trunk_hidden", {130, 130, 130});
      c.latent_dim = cfg.get_u64("deeponet.latent_dim", 130);
      c.activation = cfg.get_string("deeponet.activation", "relu");
      return c;
    }
    case RomKind::fno: {
      FnoConfig c;
      c.modes = cfg.get_u64("fno.modes", 50);
      c.width = cfg.get_u64("fno.width", 16);
      c.n_layers = cfg.get_u64("fno.layers", 3);
      c.grid_len = series_len;
      c.fft_len = next_power_of_two(series_len + series_len / 4);
      c.projection_width = cfg.get_u64("fno.projection_width", 32);
      return c;
    }
  }
  throw std::logic_error("resolve_rom_config: bad kind");
}

inline TrainConfig resolve_train_config(RomKind kind, bool series, const KvConfig& cfg,
                                        std::uint64_t seed) {
  TrainConfig tc = default_train_config(kind, series);
  tc.epochs = cfg.get_u64("epochs", tc.epochs);
  tc.batch_size = cfg.get_u64("batch_size", tc.batch_size);
  tc.lr = cfg.get_double("lr", tc.lr);
  tc.loss = loss_kind_from_name(cfg.get_string("loss", loss_kind_name(tc.loss)));
  tc.patience = cfg.get_u64("patience", tc.patience);
  tc.seed = seed;
  return tc;
}

inline void write_report_file(const std::string& path, const std::string& kind,
                              const std::string& target, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open " + path);
  auto g = workflow_detail::format_g17;
  out << "model_kind = " << kind << "\n";
  out << "target = " << target << "\n";
  for (const auto& q : report.scalar) {
    const std::string p = "scalar." + q.name + ".";
    out << p << "rmse_physical = " << g(q.rmse_physical) << "\n";
    out << p << "rmse_scaled = " << g(q.rmse_scaled) << "\n";
    out << p << "r2 = " << g(q.r2) << "\n";
    out << p << "rel_err_excluded = " << q.rel_err_excluded << "\n";
    out << p << "rel_err_min_pct = " << g(q.rel_err_summary.min) << "\n";
    out << p << "rel_err_q1_pct = " << g(q.rel_err_summary.q1) << "\n";
    out << p << "rel_err_median_pct = " << g(q.rel_err_summary.median) << "\n";
    out << p << "rel_err_q3_pct = " << g(q.rel_err_summary.q3) << "\n";
    out << p << "rel_err_max_pct = " << g(q.rel_err_summary.max) << "\n";
    out << p << "rel_err_outliers = "
        << outlier_indices(q.rel_err_pct, q.rel_err_summary).size() << "\n";
    out << p << "rel_err_pct =";
    for (double v : q.rel_err_pct) out << " " << g(v);
    out << "\n";
  }
  for (const auto& s : report.series) {
    const std::string p = "series." + s.name + ".";
    out << p << "rmse_physical = " << g(s.rmse_physical) << "\n";
    out << p << "rel_l2_min_pct = " << g(s.rel_l2_summary.min) << "\n";
    out << p << "rel_l2_median_pct = " << g(s.rel_l2_summary.median) << "\n";
    out << p << "rel_l2_max_pct = " << g(s.rel_l2_summary.max) << "\n";
    out << p << "rel_l2_pct =";
    for (double v : s.rel_l2_pct) out << " " << g(v);
    out << "\n";
  }
}

inline void write_losses_file(const std::string& path, const TrainResult& tr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("losses: cannot open " + path);
  out << "epoch\ttrain_loss\tval_loss\n";
  for (std::size_t e = 0; e < tr.train_loss.size(); ++e)
    out << e << "\t" << workflow_detail::format_g17(tr.train_loss[e]) << "\t"
        << workflow_detail::format_g17(tr.val_loss[e]) << "\n";
}

inline void write_series_predictions(const std::string& path, const RomModel& model,
                                     const Dataset& ds,
                                     const std::vector<std::size_t>& idx) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("predictions: cannot open " + path);
  auto g = workflow_detail::format_g17;
  out << "sample\tqoi\tstep\ttime_ms\ttruth\tprediction\n";
  auto pred = predict_series(model, ds, idx);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const auto& r = ds.records.at(idx[s]);
    for (std::size_t q = 0; q < kNumQois; ++q) {
      const auto& truth = q == 0 ? r.v_bead : r.t_mp;
      for (std::size_t j = 0; j < truth.size(); ++j)
        out << idx[s] << "\t" << kSeriesQoiNames[q] << "\t" << j << "\t"
            << g(r.time_grid[j]) << "\t" << g(truth[j]) << "\t" << g(pred[s][q][j])
            << "\n";
    }
  }
}

inline void write_scalar_predictions(const std::string& path, const RomModel& model,
                                     const Dataset& ds,
                                     const std::vector<std::size_t>& idx) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("predictions: cannot open " + path);
  auto g = workflow_detail::format_g17;
  out << "sample\tqoi\ttruth\tprediction\n";
  auto pred = predict_scalars(model, ds, idx);
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const auto& r = ds.records.at(idx[s]);
    const std::array<double, 2> truth{series_max(r.v_bead), series_max(r.t_mp)};
    for (std::size_t q = 0; q < kNumQois; ++q)
      out << idx[s] << "\t" << kQoiNames[q] << "\t" << g(truth[q]) << "\t"
          << g(pred[s][q]) << "\n";
  }
}

inline TrainOutcome run_train(const TrainOptions& opts) {
  KvConfig cfg;
  if (!opts.config_path.empty()) cfg = KvConfig::from_file(opts.config_path);
  cfg.require_known_keys(kTrainKeys);

  if (opts.kind == RomKind::dnn && opts.series_target)
    throw std::invalid_argument("train: the dnn supports --target scalar only");

  Dataset ds = load_dataset(opts.dataset_path);

  RunManifest manifest;
  manifest.command = "train";
  manifest.config_path = opts.config_path;
  manifest.seed = opts.seed;
  manifest.out_dir = opts.out_dir;
  manifest.started_at = iso8601_now();

  RomModel model;
  model.config = resolve_rom_config(opts.kind, cfg, ds.grid.n_output_steps);
  // Operator-learning models always train on the series; --target only
  // selects the reported view (maxima vs whole series).
  model.scaling.series_targets = opts.kind != RomKind::dnn;
  TrainConfig tc = resolve_train_config(opts.kind, model.scaling.series_targets, cfg,
                                        opts.seed);

  TrainOutcome outcome;
  outcome.train_result = train(model, ds, tc);
  outcome.report = evaluate(model, ds, ds.split.test);
  outcome.report.training_time_s = outcome.train_result.training_time_s;

  const std::string kind_name = rom_kind_name(opts.kind);
  const std::string target_name = opts.series_target ? "series" : "scalar";
  const std::string tag = kind_name + "_" + target_name;
  workflow_detail::ensure_dir(opts.out_dir);
  outcome.model_path = workflow_detail::join_path(opts.out_dir, "model_" + tag + ".opfm");
  outcome.report_path =
      workflow_detail::join_path(opts.out_dir, "report_" + tag + ".txt");
  outcome.losses_path =
      workflow_detail::join_path(opts.out_dir, "losses_" + tag + ".tsv");
  outcome.predictions_path =
      workflow_detail::join_path(opts.out_dir, "predictions_" + tag + ".tsv");

  save_model(outcome.model_path, model);
  write_report_file(outcome.report_path, kind_name, target_name, outcome.report);
  write_losses_file(outcome.losses_path, outcome.train_result);
  if (opts.kind == RomKind::dnn || !opts.series_target)
    write_scalar_predictions(outcome.predictions_path, model, ds, ds.split.test);
  else
    write_series_predictions(outcome.predictions_path, model, ds, ds.split.test);

  manifest.add_artifact("model", outcome.model_path);
  manifest.add_artifact("report", outcome.report_path);
  manifest.add_artifact("losses", outcome.losses_path);
  manifest.add_artifact("predictions", outcome.predictions_path);
  manifest.timings_s.emplace_back("training", outcome.train_result.training_time_s);
  manifest.finished_at = iso8601_now();
  write_manifest(
      workflow_detail::join_path(opts.out_dir, "run_manifest_train_" + tag + ".json"),
      manifest);

  std::cout << "train: " << kind_name << " (" << target_name << " target), "
            << outcome.train_result.stopped_epoch + 1 << " epochs, best epoch "
            << outcome.train_result.best_epoch << ", "
            << outcome.train_result.training_time_s << " s\n";
  for (const auto& q : outcome.report.scalar)
    std::cout << "train: test " << q.name << " rmse " << q.rmse_physical << " r2 "
              << q.r2 << "\n";
  for (const auto& s : outcome.report.series)
    std::cout << "train: test " << s.name << " median rel-L2 "
              << s.rel_l2_summary.median << "%\n";
  return outcome;
}

struct EvaluateOptions {
  std::string dataset_path;
  std::string model_path;
  std::string out_dir = ".";
};

inline EvalReport run_evaluate(const EvaluateOptions& opts) {
  Dataset ds = load_dataset(opts.dataset_path);
  RomModel model = load_model(opts.model_path);

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.out_dir = opts.out_dir;
  manifest.started_at = iso8601_now();

  EvalReport report = evaluate(model, ds, ds.split.test);
  const std::string tag = std::string(rom_kind_name(model.kind())) + "_eval";
  workflow_detail::ensure_dir(opts.out_dir);
  const auto path = workflow_detail::join_path(opts.out_dir, "report_" + tag + ".txt");
  write_report_file(path, rom_kind_name(model.kind()),
                    model.scaling.series_targets ? "series" : "scalar", report);
  manifest.add_artifact("report", path);
  manifest.finished_at = iso8601_now();
  write_manifest(
      workflow_detail::join_path(opts.out_dir, "run_manifest_" + tag + ".json"),
      manifest);

  for (const auto& q : report.scalar)
    std::cout << "evaluate: " << q.name << " rmse " << q.rmse_physical << " r2 " << q.r2
              << "\n";
  return report;
}

// =============================================================================
// hypersearch
// =============================================================================

struct HypersearchOptions {
  std::string dataset_path;
  std::string out_dir = ".";
  std::string config_path;
  RomKind kind = RomKind::dnn;
  bool series_target = false;
  std::uint64_t seed = 42;
  std::size_t workers = 0;
};

inline std::vector<GridEntry> run_hypersearch(const HypersearchOptions& opts) {
  KvConfig cfg;
  if (!opts.config_path.empty()) cfg = KvConfig::from_file(opts.config_path);
  std::set<std::string> keys{"epochs", "batch_size", "lr", "loss", "patience"};
  cfg.require_known_keys(keys);

  Dataset ds = load_dataset(opts.dataset_path);
  const bool series = opts.kind != RomKind::dnn;
  TrainConfig tc = resolve_train_config(opts.kind, series, cfg, opts.seed);

  RunManifest manifest;
  manifest.command = "hypersearch";
  manifest.config_path = opts.config_path;
  manifest.seed = opts.seed;
  manifest.out_dir = opts.out_dir;
  manifest.started_at = iso8601_now();

  auto entries = grid_search(table2_groups(opts.kind), ds, series, tc, opts.workers);

  workflow_detail::ensure_dir(opts.out_dir);
  const std::string path = workflow_detail::join_path(
      opts.out_dir, "hypersearch_" + std::string(rom_kind_name(opts.kind)) + ".txt");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("hypersearch: cannot open " + path);
  auto g = workflow_detail::format_g17;
  out << "rank\tlabel\tval_rmse_scaled\ttest_rmse_v_bead_max\ttest_rmse_t_mp_max\tstatus\n";
  for (std::size_t rank = 0; rank < entries.size(); ++rank) {
    const auto& e = entries[rank];
    out << rank + 1 << "\t" << e.candidate.label << "\t";
    if (e.failed)
      out << "nan\tnan\tnan\tfailed: " << e.error << "\n";
    else
      out << g(e.val_rmse_scaled) << "\t" << g(e.report.scalar[0].rmse_physical) << "\t"
          << g(e.report.scalar[1].rmse_physical) << "\tok\n";
  }
  out.close();

  manifest.add_artifact("hypersearch", path);
  manifest.finished_at = iso8601_now();
  write_manifest(workflow_detail::join_path(
                     opts.out_dir, "run_manifest_hypersearch_" +
                                       std::string(rom_kind_name(opts.kind)) + ".json"),
                 manifest);

  std::cout << "hypersearch: " << entries.size() << " candidates, best "
            << entries.front().candidate.label << " (val rmse "
            << entries.front().val_rmse_scaled << ")\n";
  return entries;
}

// =============================================================================
// sensitivity
// =============================================================================

struct SensitivityOptions {
  std::string model_path;
  std::string out_dir = ".";
  std::size_t n_base = 1024;
  std::uint64_t seed = 42;
  std::size_t workers = 0;
};

/// Physical-parameter evaluator over a trained model: scales the inputs,
/// runs the forward pass, and returns the two physical scalar QoIs (series
/// models are reduced by their maxima).
inline SobolEvaluator make_rom_evaluator(const RomModel& model) {
  auto shared = std::make_shared<RomModel>(model);
  return [shared](std::span<const double> row) {
    ProcessParams pp{row[0], row[1], row[2], row[3], row[4]};
    const auto x = shared->scaling.input_bounds.clamp01(pp);
    std::array<double, kNumQois> qoi{};
    switch (shared->kind()) {
      case RomKind::dnn:
        qoi = dnn_forward(*shared, x);
        for (std::size_t q = 0; q < kNumQois; ++q)
          qoi[q] = shared->scaling.output_scaler.invert(qoi[q], q);
        break;
      case RomKind::deeponet: {
        auto times = make_time_coords(200);
        std::vector<double> t(times.values().begin(), times.values().end());
        qoi = scalar_heads(deeponet_forward(*shared, x, t));
        break;
      }
      case RomKind::fno:
        qoi = scalar_heads(fno_forward(*shared, x));
        break;
    }
    return std::vector<double>{qoi[0], qoi[1]};
  };
}

struct SensitivityOutcome {
  std::string result_path;
  SobolResult result;
  InteractionCheck interactions;
};

inline SensitivityOutcome run_sensitivity(const SensitivityOptions& opts) {
  RomModel model = load_model(opts.model_path);

  RunManifest manifest;
  manifest.command = "sensitivity";
  manifest.seed = opts.seed;
  manifest.out_dir = opts.out_dir;
  manifest.started_at = iso8601_now();

  std::vector<Range> bounds(model.scaling.input_bounds.ranges.begin(),
                            model.scaling.input_bounds.ranges.end());
  auto design = saltelli_sample(bounds, opts.n_base, opts.seed);
  auto evaluator = make_rom_evaluator(model);
  SensitivityOutcome outcome;
  outcome.result = sobol_indices(evaluator, design,
                                 {kQoiNames[0], kQoiNames[1]}, opts.workers);
  outcome.interactions = interaction_check(outcome.result);

  workflow_detail::ensure_dir(opts.out_dir);
  outcome.result_path = workflow_detail::join_path(
      opts.out_dir, "sobol_" + std::string(rom_kind_name(model.kind())) + ".txt");
  std::ofstream out(outcome.result_path, std::ios::binary);
  if (!out) throw std::runtime_error("sensitivity: cannot open " + outcome.result_path);
  auto g = workflow_detail::format_g17;
  out << "n_base = " << outcome.result.n_base << "\n";
  out << "qoi\tinput\ts1\tst\n";
  for (std::size_t q = 0; q < outcome.result.qoi_labels.size(); ++q)
    for (std::size_t i = 0; i < outcome.result.input_labels.size(); ++i)
      out << outcome.result.qoi_labels[q] << "\t" << outcome.result.input_labels[i]
          << "\t" << g(outcome.result.s1[q][i]) << "\t" << g(outcome.result.st[q][i])
          << "\n";
  for (std::size_t q = 0; q < outcome.result.qoi_labels.size(); ++q)
    out << "sum_st." << outcome.result.qoi_labels[q] << " = "
        << g(outcome.interactions.st_sums[q])
        << (outcome.interactions.negligible[q] ? " # negligible interactions"
                                               : " # interactions present")
        << "\n";
  out.close();

  manifest.add_artifact("sobol", outcome.result_path);
  manifest.finished_at = iso8601_now();
  write_manifest(
      workflow_detail::join_path(opts.out_dir,
                                 "run_manifest_sensitivity_" +
                                     std::string(rom_kind_name(model.kind())) + ".json"),
      manifest);

  for (std::size_t q = 0; q < outcome.result.qoi_labels.size(); ++q)
    std::cout << "sensitivity: sum of total indices for "
              << outcome.result.qoi_labels[q] << " = " << outcome.interactions.st_sums[q]
              << "\n";
  return outcome;
}

}  // namespace opforge
