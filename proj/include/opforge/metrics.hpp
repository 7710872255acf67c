#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace opforge {

inline double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("rmse: length mismatch or empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

/// Coefficient of determination, 1 - SSres/SStot.
inline double r2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.size() < 2)
    throw std::invalid_argument("r2: need at least two paired values");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw std::invalid_argument("r2: zero-variance truth");
  return 1.0 - ss_res / ss_tot;
}

struct RelErrResult {
  std::vector<double> pct;       // |pred-truth|/|truth| in percent
  std::size_t excluded = 0;      // samples with |truth| below threshold
};

inline RelErrResult rel_err(std::span<const double> pred, std::span<const double> truth,
                            double denom_floor = 1e-12) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("rel_err: length mismatch or empty");
  RelErrResult out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(truth[i]) < denom_floor) {
      ++out.excluded;
      continue;
    }
    out.pct.push_back(100.0 * std::abs(pred[i] - truth[i]) / std::abs(truth[i]));
  }
  return out;
}

/// Relative L2 error of a whole series, in percent.
inline double rel_l2_pct(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("rel_l2: length mismatch or empty");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  if (!(den > 0.0)) throw std::invalid_argument("rel_l2: zero truth norm");
  return 100.0 * std::sqrt(num / den);
}

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;

  double iqr() const { return q3 - q1; }
  /// Box-plot outlier fence: third quartile plus 1.5 IQR.
  double outlier_threshold() const { return q3 + 1.5 * iqr(); }
};

/// Five-number summary with linear-interpolation quantiles.
inline FiveNumber five_number(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("five_number: empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  return FiveNumber{sorted.front(), quantile(0.25), quantile(0.5), quantile(0.75),
                    sorted.back()};
}

inline std::vector<std::size_t> outlier_indices(std::span<const double> values,
                                                const FiveNumber& fn) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > fn.outlier_threshold()) out.push_back(i);
  return out;
}

}  // namespace opforge
