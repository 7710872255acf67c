#pragma once

// Training loops, evaluation, and the hyperparameter-grid harness.
// One training run is strictly single-threaded and seeded, so loss curves
// and trained weights are bitwise reproducible; grid-search candidates run
// concurrently as independent single-threaded jobs.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "opforge/adam.hpp"
#include "opforge/campaign.hpp"
#include "opforge/metrics.hpp"
#include "opforge/rom.hpp"

namespace opforge {

enum class LossKind { mse, mae };

inline const char* loss_kind_name(LossKind k) {
  return k == LossKind::mse ? "mse" : "mae";
}

inline LossKind loss_kind_from_name(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "mae") return LossKind::mae;
  throw std::invalid_argument("unknown loss kind: " + s);
}

struct TrainConfig {
  std::size_t epochs = 2000;   // series default raised by default_train_config
  std::size_t batch_size = 0;  // 0 = full batch
  double lr = 1e-3;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;
  std::size_t patience = 300;  // early-stop patience on validation loss; 0 = off

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs < 1");
    if (!(lr >= 0.0)) throw std::invalid_argument("TrainConfig: negative lr");
  }
};

/// MSE for the dense nets, MAE for the FNO; 2000 epochs on scalar targets,
/// 3000 on series targets.
inline TrainConfig default_train_config(RomKind kind, bool series_targets) {
  TrainConfig cfg;
  cfg.epochs = series_targets ? 3000 : 2000;
  cfg.loss = kind == RomKind::fno ? LossKind::mae : LossKind::mse;
  return cfg;
}

struct TrainResult {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;     // epoch with the lowest validation loss
  std::size_t stopped_epoch = 0;  // last epoch actually run
  double training_time_s = 0.0;   // wall clock; reported, never persisted
};

struct divergence_error : std::runtime_error {
  std::size_t epoch;
  explicit divergence_error(std::size_t e)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(e)),
        epoch(e) {}
};

// =============================================================================
// Target assembly
// =============================================================================

namespace train_detail {

struct Prepared {
  std::vector<std::array<double, kNumInputs>> inputs;  // scaled, per record
  // scalar targets [record][qoi], scaled
  std::vector<std::array<double, kNumQois>> scalar_targets;
  // series targets [record][step*2+qoi], scaled
  std::vector<std::vector<double>> series_targets;
  std::size_t series_len = 0;
};

inline Prepared prepare(const Dataset& ds, const RomModel& model) {
  Prepared p;
  p.inputs.reserve(ds.records.size());
  const auto& sc = model.scaling.output_scaler;
  for (const auto& r : ds.records) {
    p.inputs.push_back(model.scaling.input_bounds.clamp01(r.params));
    if (model.scaling.series_targets) {
      if (p.series_len == 0) p.series_len = r.v_bead.size();
      if (r.v_bead.size() != p.series_len || r.t_mp.size() != p.series_len)
        throw std::invalid_argument("train: records disagree on series length");
      std::vector<double> row(p.series_len * kNumQois);
      for (std::size_t j = 0; j < p.series_len; ++j) {
        row[j * kNumQois + 0] = sc.transform(r.v_bead[j], 0);
        row[j * kNumQois + 1] = sc.transform(r.t_mp[j], 1);
      }
      p.series_targets.push_back(std::move(row));
    } else {
      p.scalar_targets.push_back(
          {sc.transform(series_max(r.v_bead), 0), sc.transform(series_max(r.t_mp), 1)});
    }
  }
  return p;
}

inline Tensor gather_inputs(const Prepared& p, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size() * kNumInputs);
  for (auto i : idx)
    v.insert(v.end(), p.inputs[i].begin(), p.inputs[i].end());
  return Tensor({idx.size(), kNumInputs}, std::move(v));
}

inline Tensor gather_scalar_targets(const Prepared& p, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size() * kNumQois);
  for (auto i : idx)
    v.insert(v.end(), p.scalar_targets[i].begin(), p.scalar_targets[i].end());
  return Tensor({idx.size(), kNumQois}, std::move(v));
}

/// [n*L, 2] interleaved, matching the FNO output layout.
inline Tensor gather_series_targets(const Prepared& p, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  v.reserve(idx.size() * p.series_len * kNumQois);
  for (auto i : idx)
    v.insert(v.end(), p.series_targets[i].begin(), p.series_targets[i].end());
  return Tensor({idx.size() * p.series_len, kNumQois}, std::move(v));
}

/// per-QoI [n, L] matrices, matching the DeepONet output layout.
inline std::array<Tensor, kNumQois> gather_series_targets_qoi(
    const Prepared& p, const std::vector<std::size_t>& idx) {
  std::array<std::vector<double>, kNumQois> v;
  for (auto& q : v) q.reserve(idx.size() * p.series_len);
  for (auto i : idx)
    for (std::size_t q = 0; q < kNumQois; ++q)
      for (std::size_t j = 0; j < p.series_len; ++j)
        v[q].push_back(p.series_targets[i][j * kNumQois + q]);
  return {Tensor({idx.size(), p.series_len}, std::move(v[0])),
          Tensor({idx.size(), p.series_len}, std::move(v[1]))};
}

inline Tensor residual_loss(LossKind kind, const Tensor& out, const Tensor& target) {
  Tensor d = sub(out, target);
  return kind == LossKind::mse ? mean(mul(d, d)) : mean(abs(d));
}

/// Combined loss across the two DeepONet heads (same weight per entry).
inline Tensor residual_loss2(LossKind kind, const std::array<Tensor, 2>& out,
                             const std::array<Tensor, 2>& target) {
  Tensor acc;
  std::size_t total = 0;
  for (std::size_t q = 0; q < 2; ++q) {
    Tensor d = sub(out[q], target[q]);
    Tensor s = kind == LossKind::mse ? sum(mul(d, d)) : sum(abs(d));
    acc = q == 0 ? s : add(acc, s);
    total += d.size();
  }
  return scale(acc, 1.0 / static_cast<double>(total));
}

}  // namespace train_detail

// =============================================================================
// train
// =============================================================================

/// Minimizes the configured loss on the train split with full-batch (or
/// mini-batch) Adam, records per-epoch train/val losses, early-stops on the
/// validation loss, and restores the best-validation weights.
inline TrainResult train(RomModel& model, const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.split.train.empty() || ds.split.val.empty())
    throw std::invalid_argument("train: dataset needs non-empty train and val splits");

  model.scaling.input_bounds = ds.bounds;
  if (model.scaling.output_scaler.channels() == 0)  // a preset scaler wins
    model.scaling.output_scaler =
        model.scaling.series_targets ? ds.scaler
                                     : fit_scaler_scalar(ds.records, ds.split.train);
  if (model.weights.empty()) initialize_weights(model, cfg.seed);
  model.validate();

  const auto prepared = train_detail::prepare(ds, model);
  const auto layout = weight_layout(model.config);
  const RomKind kind = model.kind();
  const std::size_t series_len = prepared.series_len;

  if (kind == RomKind::dnn && model.scaling.series_targets)
    throw std::invalid_argument("train: the dnn supports scalar targets only");
  if (kind == RomKind::fno &&
      std::get<FnoConfig>(model.config).grid_len != series_len)
    throw std::invalid_argument("train: FnoConfig.grid_len must match the dataset's "
                                "output grid");

  // Forward + loss over an index set; returns the loss tensor.
  auto forward_loss = [&](const std::vector<Tensor>& blocks,
                          const std::vector<std::size_t>& idx) -> Tensor {
    switch (kind) {
      case RomKind::dnn: {
        Tensor x = train_detail::gather_inputs(prepared, idx);
        Tensor y = train_detail::gather_scalar_targets(prepared, idx);
        Tensor out = dnn_forward_blocks(std::get<DnnConfig>(model.config), blocks, x);
        return train_detail::residual_loss(cfg.loss, out, y);
      }
      case RomKind::deeponet: {
        Tensor x = train_detail::gather_inputs(prepared, idx);
        Tensor times = make_time_coords(series_len);
        auto out = deeponet_forward_blocks(std::get<DeepOnetConfig>(model.config),
                                           blocks, x, times);
        auto y = train_detail::gather_series_targets_qoi(prepared, idx);
        return train_detail::residual_loss2(cfg.loss, out, y);
      }
      case RomKind::fno: {
        const auto& fc = std::get<FnoConfig>(model.config);
        Tensor x = train_detail::gather_inputs(prepared, idx);
        Tensor grid = make_fno_grid_inputs(x, series_len);
        Tensor out = fno_forward_blocks(fc, blocks, grid, idx.size(), series_len,
                                        fc.fft_len);
        Tensor y = train_detail::gather_series_targets(prepared, idx);
        return train_detail::residual_loss(cfg.loss, out, y);
      }
    }
    throw std::logic_error("train: bad kind");
  };

  AdamState adam;
  adam.lr = cfg.lr;
  TrainResult result;
  std::vector<double> flat_grad(model.weights.size());
  std::vector<double> best_weights;
  double best_val = std::numeric_limits<double>::infinity();

  const auto& train_idx = ds.split.train;
  const std::size_t batch =
      cfg.batch_size == 0 ? train_idx.size() : std::min(cfg.batch_size, train_idx.size());
  std::vector<std::size_t> order = train_idx;

  const auto t_start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    try {
      if (batch < order.size()) {
        std::mt19937_64 rng(derive_seed(cfg.seed, "batch-order", epoch));
        shuffle_inplace(order, rng);
      }
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t stop = std::min(start + batch, order.size());
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
        Tape tape;
        auto blocks = weight_tensors(model, &tape);
        Tensor loss = forward_loss(blocks, idx);
        tape.backward(loss);
        for (std::size_t b = 0; b < layout.size(); ++b) {
          const auto g = tape.grad(blocks[b]);
          std::copy(g.begin(), g.end(),
                    flat_grad.begin() + static_cast<std::ptrdiff_t>(layout[b].offset));
        }
        adam_step(model.weights, flat_grad, adam);
        epoch_loss += loss.scalar_value() * static_cast<double>(idx.size());
        seen += idx.size();
      }
    } catch (const std::runtime_error&) {
      throw divergence_error(epoch);
    }
    epoch_loss /= static_cast<double>(seen);

    double val_loss;
    try {
      auto blocks = weight_tensors(model, nullptr);
      val_loss = forward_loss(blocks, ds.split.val).scalar_value();
    } catch (const std::runtime_error&) {
      throw divergence_error(epoch);
    }

    result.train_loss.push_back(epoch_loss);
    result.val_loss.push_back(val_loss);
    result.stopped_epoch = epoch;

    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      if (cfg.patience > 0) best_weights = model.weights;
    }
    if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) break;
  }
  if (cfg.patience > 0 && !best_weights.empty()) model.weights = std::move(best_weights);
  result.training_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

// =============================================================================
// prediction and evaluation
// =============================================================================

/// Physical-unit series predictions for the given records. Series models only.
inline std::vector<std::array<std::vector<double>, kNumQois>> predict_series(
    const RomModel& model, const Dataset& ds, const std::vector<std::size_t>& idx,
    std::size_t n_steps = 0) {
  if (model.kind() == RomKind::dnn)
    throw std::invalid_argument("predict_series: dnn has no series output");
  model.validate();
  const auto& sc = model.scaling.output_scaler;

  std::vector<ProcessParams> samples;
  samples.reserve(idx.size());
  for (auto i : idx) samples.push_back(ds.records.at(i).params);
  Tensor x = make_scaled_inputs(model.scaling.input_bounds, samples);
  auto blocks = weight_tensors(model, nullptr);

  std::size_t len = n_steps;
  Tensor out;  // sample-major series
  if (model.kind() == RomKind::deeponet) {
    if (len == 0) len = ds.grid.n_output_steps;
    auto o = deeponet_forward_blocks(std::get<DeepOnetConfig>(model.config), blocks, x,
                                     make_time_coords(len));
    std::vector<std::array<std::vector<double>, kNumQois>> result(idx.size());
    for (std::size_t s = 0; s < idx.size(); ++s)
      for (std::size_t q = 0; q < kNumQois; ++q) {
        result[s][q].resize(len);
        for (std::size_t j = 0; j < len; ++j)
          result[s][q][j] = sc.invert(o[q][s * len + j], q);
      }
    return result;
  }

  const auto& fc = std::get<FnoConfig>(model.config);
  if (len == 0) len = fc.grid_len;
  std::size_t fft_len = fc.fft_len;
  if (len != fc.grid_len)
    fft_len = next_power_of_two((len * fc.fft_len + fc.grid_len - 1) / fc.grid_len);
  Tensor grid = make_fno_grid_inputs(x, len);
  out = fno_forward_blocks(fc, blocks, grid, idx.size(), len, fft_len);
  std::vector<std::array<std::vector<double>, kNumQois>> result(idx.size());
  for (std::size_t s = 0; s < idx.size(); ++s)
    for (std::size_t q = 0; q < kNumQois; ++q) {
      result[s][q].resize(len);
      for (std::size_t j = 0; j < len; ++j)
        result[s][q][j] = sc.invert(out[(s * len + j) * kNumQois + q], q);
    }
  return result;
}

/// Physical-unit scalar QoI predictions (per-QoI maxima for series models).
inline std::vector<std::array<double, kNumQois>> predict_scalars(
    const RomModel& model, const Dataset& ds, const std::vector<std::size_t>& idx) {
  model.validate();
  std::vector<std::array<double, kNumQois>> result;
  result.reserve(idx.size());
  if (model.kind() == RomKind::dnn) {
    std::vector<ProcessParams> samples;
    for (auto i : idx) samples.push_back(ds.records.at(i).params);
    Tensor x = make_scaled_inputs(model.scaling.input_bounds, samples);
    auto blocks = weight_tensors(model, nullptr);
    Tensor out = dnn_forward_blocks(std::get<DnnConfig>(model.config), blocks, x);
    const auto& sc = model.scaling.output_scaler;
    for (std::size_t s = 0; s < idx.size(); ++s)
      result.push_back({sc.invert(out[s * kNumQois + 0], 0),
                        sc.invert(out[s * kNumQois + 1], 1)});
    return result;
  }
  for (const auto& series : predict_series(model, ds, idx))
    result.push_back(scalar_heads(series));
  return result;
}

struct QoiReport {
  std::string name;
  double rmse_physical = 0.0;
  double rmse_scaled = 0.0;
  double r2 = 0.0;
  std::vector<double> rel_err_pct;
  std::size_t rel_err_excluded = 0;
  FiveNumber rel_err_summary;
};

struct SeriesQoiReport {
  std::string name;
  double rmse_physical = 0.0;     // over all (sample, step) points
  std::vector<double> rel_l2_pct; // per sample
  FiveNumber rel_l2_summary;
};

struct EvalReport {
  std::array<QoiReport, kNumQois> scalar;
  std::vector<SeriesQoiReport> series;  // present for series models
  double training_time_s = 0.0;
};

inline const std::array<const char*, kNumQois> kQoiNames{"v_bead_max", "t_mp_max"};
inline const std::array<const char*, kNumQois> kSeriesQoiNames{"v_bead", "t_mp"};

/// Test-split evaluation: scalar metrics always (via maxima for the series
/// models), plus per-sample series metrics for the operator-learning models.
inline EvalReport evaluate(const RomModel& model, const Dataset& ds,
                           const std::vector<std::size_t>& idx) {
  if (idx.size() < 2) throw std::invalid_argument("evaluate: need >= 2 records");
  EvalReport report;

  std::array<std::vector<double>, kNumQois> truth, pred;
  for (auto i : idx) {
    truth[0].push_back(series_max(ds.records.at(i).v_bead));
    truth[1].push_back(series_max(ds.records.at(i).t_mp));
  }
  for (const auto& row : predict_scalars(model, ds, idx)) {
    pred[0].push_back(row[0]);
    pred[1].push_back(row[1]);
  }

  // scaled-space copies use the scalar convention for comparability
  const Scaler scalar_sc = fit_scaler_scalar(ds.records, ds.split.train);
  for (std::size_t q = 0; q < kNumQois; ++q) {
    auto& r = report.scalar[q];
    r.name = kQoiNames[q];
    r.rmse_physical = rmse(pred[q], truth[q]);
    std::vector<double> ps, ts;
    for (std::size_t s = 0; s < idx.size(); ++s) {
      ps.push_back(scalar_sc.transform(pred[q][s], q));
      ts.push_back(scalar_sc.transform(truth[q][s], q));
    }
    r.rmse_scaled = rmse(ps, ts);
    r.r2 = r2(pred[q], truth[q]);
    auto re = rel_err(pred[q], truth[q]);
    r.rel_err_pct = std::move(re.pct);
    r.rel_err_excluded = re.excluded;
    r.rel_err_summary = five_number(r.rel_err_pct);
  }

  if (model.kind() != RomKind::dnn) {
    auto series_pred = predict_series(model, ds, idx);
    for (std::size_t q = 0; q < kNumQois; ++q) {
      SeriesQoiReport sr;
      sr.name = kSeriesQoiNames[q];
      double acc = 0.0;
      std::size_t count = 0;
      for (std::size_t s = 0; s < idx.size(); ++s) {
        const auto& t = q == 0 ? ds.records.at(idx[s]).v_bead : ds.records.at(idx[s]).t_mp;
        const auto& p = series_pred[s][q];
        for (std::size_t j = 0; j < t.size(); ++j) {
          acc += (p[j] - t[j]) * (p[j] - t[j]);
          ++count;
        }
        sr.rel_l2_pct.push_back(rel_l2_pct(p, t));
      }
      sr.rmse_physical = std::sqrt(acc / static_cast<double>(count));
      sr.rel_l2_summary = five_number(sr.rel_l2_pct);
      report.series.push_back(std::move(sr));
    }
  }
  return report;
}

// =============================================================================
// grid search
// =============================================================================

struct GridCandidate {
  RomConfig config;
  std::string label;
};

struct GridEntry {
  GridCandidate candidate;
  bool failed = false;
  std::string error;
  double val_rmse_scaled = std::numeric_limits<double>::infinity();
  EvalReport report;
  TrainResult train_result;
};

/// Validation RMSE in the model's scaled target space; the ranking key.
inline double validation_rmse(const RomModel& model, const Dataset& ds) {
  const auto& sc = model.scaling.output_scaler;
  const auto& idx = ds.split.val;
  double acc = 0.0;
  std::size_t n = 0;
  if (model.kind() == RomKind::dnn) {
    auto pred = predict_scalars(model, ds, idx);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const auto& r = ds.records.at(idx[s]);
      const std::array<double, 2> truth{series_max(r.v_bead), series_max(r.t_mp)};
      for (std::size_t q = 0; q < kNumQois; ++q) {
        const double d = sc.transform(pred[s][q], q) - sc.transform(truth[q], q);
        acc += d * d;
        ++n;
      }
    }
  } else {
    auto pred = predict_series(model, ds, idx);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const auto& r = ds.records.at(idx[s]);
      for (std::size_t q = 0; q < kNumQois; ++q) {
        const auto& t = q == 0 ? r.v_bead : r.t_mp;
        for (std::size_t j = 0; j < t.size(); ++j) {
          const double d = sc.transform(pred[s][q][j], q) - sc.transform(t[j], q);
          acc += d * d;
          ++n;
        }
      }
    }
  }
  return std::sqrt(acc / static_cast<double>(n));
}

/// Trains every candidate with the same seed, ranks by validation RMSE.
/// Per-candidate failures are recorded, not fatal.
inline std::vector<GridEntry> grid_search(const std::vector<GridCandidate>& candidates,
                                          const Dataset& ds, bool series_targets,
                                          const TrainConfig& base_cfg,
                                          std::size_t worker_count = 0) {
  if (candidates.empty()) throw std::invalid_argument("grid_search: no candidates");
  if (worker_count == 0)
    worker_count = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  worker_count = std::min(worker_count, candidates.size());

  std::vector<GridEntry> entries(candidates.size());
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= candidates.size()) return;
      auto& e = entries[i];
      e.candidate = candidates[i];
      try {
        RomModel model;
        model.config = candidates[i].config;
        model.scaling.series_targets =
            config_kind(candidates[i].config) == RomKind::dnn ? false : series_targets;
        TrainConfig cfg = base_cfg;
        cfg.loss = config_kind(candidates[i].config) == RomKind::fno ? LossKind::mae
                                                                     : base_cfg.loss;
        e.train_result = train(model, ds, cfg);
        e.val_rmse_scaled = validation_rmse(model, ds);
        e.report = evaluate(model, ds, ds.split.test);
        e.report.training_time_s = e.train_result.training_time_s;
      } catch (const std::exception& ex) {
        e.failed = true;
        e.error = ex.what();
      }
    }
  };

  if (worker_count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < worker_count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(entries.begin(), entries.end(),
                   [](const GridEntry& a, const GridEntry& b) {
                     return a.val_rmse_scaled < b.val_rmse_scaled;
                   });
  return entries;
}

/// The six model groups of the hyperparameter study, per kind.
inline std::vector<GridCandidate> table2_groups(RomKind kind) {
  std::vector<GridCandidate> out;
  switch (kind) {
    case RomKind::dnn: {
      const std::vector<std::vector<std::size_t>> widths{
          {100, 150, 200, 150, 100}, {150, 200, 250, 200, 150},
          {250, 300, 350, 300, 250}, {300, 300},
          {300, 300, 300},           {300, 300, 300, 300}};
      for (std::size_t i = 0; i < widths.size(); ++i) {
        DnnConfig c;
        c.hidden_widths = widths[i];
        out.push_back({RomConfig{c}, "dnn-group" + std::to_string(i + 1)});
      }
      break;
    }
    case RomKind::deeponet: {
      // {neurons, branch hidden layers, trunk hidden layers}
      const std::vector<std::array<std::size_t, 3>> spec{
          {100, 2, 1}, {200, 2, 1}, {300, 2, 1},
          {150, 3, 2}, {150, 4, 3}, {150, 5, 4}};
      for (std::size_t i = 0; i < spec.size(); ++i) {
        DeepOnetConfig c;
        c.branch_hidden.assign(spec[i][1], spec[i][0]);
        c.trunk_hidden.assign(spec[i][2], spec[i][0]);
        c.latent_dim = spec[i][0];
        out.push_back({RomConfig{c}, "deeponet-group" + std::to_string(i + 1)});
      }
      break;
    }
    case RomKind::fno: {
      // {modes, fourier layers}
      const std::vector<std::array<std::size_t, 2>> spec{
          {1, 4}, {5, 4}, {9, 4}, {1, 1}, {1, 2}, {1, 3}};
      for (std::size_t i = 0; i < spec.size(); ++i) {
        FnoConfig c;
        c.modes = spec[i][0];
        c.n_layers = spec[i][1];
        out.push_back({RomConfig{c}, "fno-group" + std::to_string(i + 1)});
      }
      break;
    }
  }
  return out;
}

}  // namespace opforge
