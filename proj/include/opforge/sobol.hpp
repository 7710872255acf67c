#pragma once

// Variance-based global sensitivity analysis: radial Saltelli sampling and
// the first-order (Saltelli-2010) / total (Jansen) Sobol index estimators.
// The A and B sample matrices come from one Latin hypercube over 2d columns,
// which keeps both marginals stratified at no extra cost.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "opforge/campaign.hpp"
#include "opforge/fft.hpp"  // is_power_of_two
#include "opforge/rng.hpp"

namespace opforge {

struct SaltelliDesign {
  std::size_t n_base = 1024;
  std::size_t dims = 0;
  std::vector<Range> bounds;
  // (dims + 2) * n_base rows, row-major: A block, B block, then AB_i blocks
  // (A with column i replaced from B).
  std::vector<double> rows;

  std::size_t n_rows() const { return (dims + 2) * n_base; }
  const double* row(std::size_t r) const { return rows.data() + r * dims; }
};

/// Radial Saltelli evaluation matrix. n_base must be a power of two (the
/// usual variance-reduction convention; 1000 paper samples map to 1024).
inline SaltelliDesign saltelli_sample(const std::vector<Range>& bounds,
                                      std::size_t n_base, std::uint64_t seed) {
  if (bounds.empty()) throw std::invalid_argument("saltelli_sample: empty bounds");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi)) throw std::invalid_argument("saltelli_sample: invalid bounds");
  if (!is_power_of_two(n_base))
    throw std::invalid_argument("saltelli_sample: n_base must be a power of two");

  const std::size_t d = bounds.size();
  SaltelliDesign design;
  design.n_base = n_base;
  design.dims = d;
  design.bounds = bounds;

  // One LHS core over 2d columns: columns [0,d) form A, [d,2d) form B.
  std::vector<double> a(n_base * d), b(n_base * d);
  for (std::size_t col = 0; col < 2 * d; ++col) {
    std::mt19937_64 rng(derive_seed(seed, "saltelli", col));
    std::vector<std::size_t> strata(n_base);
    for (std::size_t i = 0; i < n_base; ++i) strata[i] = i;
    shuffle_inplace(strata, rng);
    const auto& range = bounds[col % d];
    const double width = (range.hi - range.lo) / static_cast<double>(n_base);
    for (std::size_t i = 0; i < n_base; ++i) {
      const double u = uniform01(rng);
      const double v = range.lo + (static_cast<double>(strata[i]) + u) * width;
      (col < d ? a : b)[i * d + col % d] = v;
    }
  }

  design.rows.resize(design.n_rows() * d);
  double* out = design.rows.data();
  std::copy(a.begin(), a.end(), out);
  std::copy(b.begin(), b.end(), out + n_base * d);
  for (std::size_t i = 0; i < d; ++i) {
    double* block = out + (2 + i) * n_base * d;
    std::copy(a.begin(), a.end(), block);
    for (std::size_t r = 0; r < n_base; ++r) block[r * d + i] = b[r * d + i];
  }
  return design;
}

struct SobolResult {
  std::vector<std::string> qoi_labels;
  std::vector<std::vector<double>> s1;  // [qoi][input]
  std::vector<std::vector<double>> st;  // [qoi][input]
  std::size_t n_base = 0;
  std::vector<std::string> input_labels;
};

/// Evaluator: one input row (design.dims values) -> one value per QoI.
using SobolEvaluator = std::function<std::vector<double>(std::span<const double>)>;

/// First-order indices by the Saltelli-2010 estimator
///   S1_i = mean(fB * (fAB_i - fA)) / V,
/// total indices by the Jansen estimator
///   ST_i = mean((fA - fAB_i)^2) / (2 V),
/// with V the population variance over the A and B evaluations. Evaluations
/// run concurrently; the reduction is single-threaded and deterministic.
inline SobolResult sobol_indices(const SobolEvaluator& f, const SaltelliDesign& design,
                                 std::vector<std::string> qoi_labels,
                                 std::size_t worker_count = 0) {
  const std::size_t d = design.dims;
  const std::size_t n = design.n_base;
  const std::size_t rows = design.n_rows();
  if (worker_count == 0)
    worker_count = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  worker_count = std::min(worker_count, rows);

  // Evaluate all rows; values laid out [row][qoi].
  std::vector<std::vector<double>> values(rows);
  {
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;
    auto work = [&] {
      for (;;) {
        const std::size_t r = cursor.fetch_add(1);
        if (r >= rows || failed.load()) return;
        try {
          values[r] = f(std::span<const double>(design.row(r), d));
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed.store(true);
          if (error.empty()) error = e.what();
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
    if (failed.load()) throw std::runtime_error("sobol_indices: evaluator failed: " + error);
  }

  const std::size_t n_qoi = values.at(0).size();
  for (const auto& v : values)
    if (v.size() != n_qoi)
      throw std::runtime_error("sobol_indices: evaluator output width varies");

  SobolResult result;
  result.n_base = n;
  result.qoi_labels = std::move(qoi_labels);
  if (result.qoi_labels.size() != n_qoi)
    throw std::invalid_argument("sobol_indices: label count mismatch");
  if (d == 5)
    result.input_labels.assign(ParamBounds::names.begin(), ParamBounds::names.end());
  else
    for (std::size_t i = 0; i < d; ++i)
      result.input_labels.push_back("x" + std::to_string(i + 1));

  for (std::size_t q = 0; q < n_qoi; ++q) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 2 * n; ++r) mean += values[r][q];
    mean /= static_cast<double>(2 * n);
    // centered evaluations; shifting by the sample mean leaves both
    // estimators unbiased and removes the mean-coupled noise term
    auto fa = [&](std::size_t r) { return values[r][q] - mean; };
    auto fb = [&](std::size_t r) { return values[n + r][q] - mean; };
    auto fab = [&](std::size_t i, std::size_t r) {
      return values[(2 + i) * n + r][q] - mean;
    };

    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += fa(r) * fa(r) + fb(r) * fb(r);
    var /= static_cast<double>(2 * n);
    if (!(var > 0.0)) throw std::runtime_error("sobol_indices: zero output variance");

    std::vector<double> s1(d), st(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc1 = 0.0, acc_t = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc1 += fb(r) * (fab(i, r) - fa(r));
        const double dlt = fa(r) - fab(i, r);
        acc_t += dlt * dlt;
      }
      s1[i] = acc1 / (static_cast<double>(n) * var);
      st[i] = acc_t / (2.0 * static_cast<double>(n) * var);
    }
    result.s1.push_back(std::move(s1));
    result.st.push_back(std::move(st));
  }
  return result;
}

struct InteractionCheck {
  std::vector<double> st_sums;          // per QoI
  std::vector<bool> negligible;         // sum <= 1.15 per QoI
};

/// Sum of total indices per QoI. Sums only slightly above 1 indicate that
/// parameter interactions are negligible.
inline InteractionCheck interaction_check(const SobolResult& result,
                                          double threshold = 1.15) {
  InteractionCheck out;
  for (const auto& st : result.st) {
    double sum = 0.0;
    for (double v : st) sum += v;
    out.st_sums.push_back(sum);
    out.negligible.push_back(sum <= threshold);
  }
  return out;
}

}  // namespace opforge
