#pragma once

// Data-generation campaign: Latin hypercube sampling over the five process
// inputs, parallel execution of the thermal solver, non-melting outlier
// removal, per-QoI standardization, and the deterministic 80/10/10 split.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "opforge/rng.hpp"
#include "opforge/thermal_sim.hpp"
#include "opforge/version.hpp"

namespace opforge {

// =============================================================================
// Parameter bounds (Table-1 ranges by default)
// =============================================================================

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct ParamBounds {
  std::array<Range, 5> ranges{{{250.0, 400.0},
                               {0.004, 0.020},
                               {0.25, 0.40},
                               {0.3, 0.4},
                               {1.0, 2.0}}};

  static constexpr std::array<const char*, 5> names{"P", "v", "r", "eta", "alpha"};

  const Range& operator[](std::size_t i) const { return ranges[i]; }
  Range& operator[](std::size_t i) { return ranges[i]; }

  void validate() const {
    for (const auto& r : ranges)
      if (!(r.lo < r.hi) || !(r.lo > 0.0))
        throw std::invalid_argument("ParamBounds: need 0 < low < high per input");
  }

  std::array<double, 5> clamp01(const ProcessParams& pp) const {
    const std::array<double, 5> raw{pp.power, pp.speed, pp.radius, pp.efficiency,
                                    pp.scaling};
    std::array<double, 5> out{};
    for (std::size_t i = 0; i < 5; ++i)
      out[i] = (raw[i] - ranges[i].lo) / (ranges[i].hi - ranges[i].lo);
    return out;
  }
};

inline ProcessParams params_from_array(const std::array<double, 5>& a) {
  return ProcessParams{a[0], a[1], a[2], a[3], a[4]};
}

inline std::array<double, 5> params_to_array(const ProcessParams& pp) {
  return {pp.power, pp.speed, pp.radius, pp.efficiency, pp.scaling};
}

// =============================================================================
// Latin hypercube sampling
// =============================================================================

struct LhsDesign {
  std::size_t n_samples = 500;
  ParamBounds bounds;
  std::uint64_t seed = 0;
};

/// Stratified design: per input, exactly one point in each of the n equal
/// strata, with independent in-stratum jitter and a fresh permutation per
/// column. Column streams derive from (seed, "lhs", column).
inline std::vector<ProcessParams> lhs_sample(const LhsDesign& design) {
  if (design.n_samples < 1) throw std::invalid_argument("lhs_sample: n_samples < 1");
  design.bounds.validate();
  const std::size_t n = design.n_samples;

  std::vector<std::array<double, 5>> points(n);
  for (std::size_t col = 0; col < 5; ++col) {
    std::mt19937_64 rng(derive_seed(design.seed, "lhs", col));
    std::vector<std::size_t> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = i;
    shuffle_inplace(strata, rng);
    const auto [lo, hi] = design.bounds[col];
    const double width = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform01(rng);
      points[i][col] = lo + (static_cast<double>(strata[i]) + u) * width;
    }
  }

  std::vector<ProcessParams> out;
  out.reserve(n);
  for (const auto& p : points) out.push_back(params_from_array(p));
  return out;
}

// =============================================================================
// Campaign execution
// =============================================================================

struct CampaignError : std::runtime_error {
  std::size_t sample_index;
  CampaignError(std::size_t idx, const std::string& what)
      : std::runtime_error("sample " + std::to_string(idx) + ": " + what),
        sample_index(idx) {}
};

/// Runs one simulation per sample. Workers pull indices from a shared
/// counter but write into per-index slots, so the record order always
/// matches the sample order regardless of scheduling.
inline std::vector<SimulationRecord> run_campaign(const std::vector<ProcessParams>& samples,
                                                  const MaterialProps& mat,
                                                  const GridSpec& grid,
                                                  std::size_t worker_count = 0) {
  if (samples.empty()) return {};
  if (worker_count == 0)
    worker_count = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  worker_count = std::min(worker_count, samples.size());

  std::vector<SimulationRecord> records(samples.size());
  std::vector<std::optional<std::string>> failures(samples.size());
  std::atomic<std::size_t> cursor{0};

  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= samples.size()) return;
      try {
        records[i] = run_simulation(samples[i], mat, grid);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };

  if (worker_count == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < failures.size(); ++i)
    if (failures[i]) throw CampaignError(i, *failures[i]);
  return records;
}

// =============================================================================
// Non-melting filter
// =============================================================================

struct FilterResult {
  std::vector<SimulationRecord> retained;
  std::size_t removed = 0;
};

/// Drops runs where the melt temperature was never reached; such samples do
/// not correspond to an actual deposition process and poison training.
inline FilterResult filter_non_melting(const std::vector<SimulationRecord>& records) {
  FilterResult out;
  for (const auto& r : records) {
    if (r.melted)
      out.retained.push_back(r);
    else
      ++out.removed;
  }
  if (out.retained.empty() && !records.empty())
    std::cerr << "error: campaign produced no melting samples; dataset is unusable\n";
  return out;
}

// =============================================================================
// Standardization
// =============================================================================

/// Per-output-channel standardizer (channel 0: bead volume, channel 1: melt
/// pool temperature). Population (divide-by-N) convention.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t channels() const { return mean.size(); }

  double transform(double x, std::size_t ch) const {
    return (x - mean[ch]) / stddev[ch];
  }
  double invert(double y, std::size_t ch) const { return y * stddev[ch] + mean[ch]; }

  void validate() const {
    if (mean.size() != stddev.size()) throw std::invalid_argument("Scaler: size mismatch");
    for (double s : stddev)
      if (!(s > 0.0)) throw std::invalid_argument("Scaler: non-positive stddev");
  }
};

/// Fits one channel per value stream. Throws on zero variance.
inline Scaler fit_channels(const std::vector<std::vector<double>>& channel_values) {
  Scaler sc;
  for (const auto& vals : channel_values) {
    if (vals.size() < 2)
      throw std::invalid_argument("fit_scaler: need at least 2 values per channel");
    double m = 0.0;
    for (double v : vals) m += v;
    m /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - m) * (v - m);
    var /= static_cast<double>(vals.size());
    if (!(var > 0.0)) throw std::invalid_argument("fit_scaler: zero-variance channel");
    sc.mean.push_back(m);
    sc.stddev.push_back(std::sqrt(var));
  }
  return sc;
}

inline double series_max(const std::vector<double>& v) {
  double m = v.at(0);
  for (double x : v) m = std::max(m, x);
  return m;
}

/// Series scaler over the full 200-step output matrix of the given records
/// (training split only): all bead-volume values form channel 0, all
/// temperatures channel 1.
inline Scaler fit_scaler_series(const std::vector<SimulationRecord>& records,
                                const std::vector<std::size_t>& indices) {
  if (indices.size() < 2)
    throw std::invalid_argument("fit_scaler: need at least 2 records");
  std::vector<std::vector<double>> ch(2);
  for (std::size_t idx : indices) {
    const auto& r = records.at(idx);
    ch[0].insert(ch[0].end(), r.v_bead.begin(), r.v_bead.end());
    ch[1].insert(ch[1].end(), r.t_mp.begin(), r.t_mp.end());
  }
  return fit_channels(ch);
}

/// Scalar scaler over the per-run maxima of the two QoIs.
inline Scaler fit_scaler_scalar(const std::vector<SimulationRecord>& records,
                                const std::vector<std::size_t>& indices) {
  if (indices.size() < 2)
    throw std::invalid_argument("fit_scaler: need at least 2 records");
  std::vector<std::vector<double>> ch(2);
  for (std::size_t idx : indices) {
    const auto& r = records.at(idx);
    ch[0].push_back(series_max(r.v_bead));
    ch[1].push_back(series_max(r.t_mp));
  }
  return fit_channels(ch);
}

// =============================================================================
// Dataset assembly and split
// =============================================================================

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

struct Dataset {
  std::vector<SimulationRecord> records;  // retained (melted) records only
  Scaler scaler;                          // series scaler fitted on train
  SplitIndices split;
  int schema_version = kDatasetSchemaVersion;
  ParamBounds bounds;
  GridSpec grid;
  MaterialProps material;
  std::size_t removed_count = 0;
  std::uint64_t seed = 0;
};

/// Deterministic shuffled split. Sizes follow floor(n*ratio) for train and
/// val; the remainder goes to test (482 records -> 385/48/49).
inline SplitIndices split_indices(std::size_t n, const std::array<double, 3>& ratios,
                                  std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split: negative ratio");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split: ratios must sum to 1");

  const auto n_train = static_cast<std::size_t>(
      std::floor(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::floor(ratios[1] * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw std::invalid_argument("split: too few records for three non-empty splits");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(seed, "split"));
  shuffle_inplace(order, rng);

  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline Dataset split_dataset(std::vector<SimulationRecord> records,
                             const std::array<double, 3>& ratios, std::uint64_t seed) {
  Dataset ds;
  ds.split = split_indices(records.size(), ratios, seed);
  ds.records = std::move(records);
  ds.scaler = fit_scaler_series(ds.records, ds.split.train);
  ds.seed = seed;
  return ds;
}

}  // namespace opforge
