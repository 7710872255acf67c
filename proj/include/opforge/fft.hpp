#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace opforge {

/// Split-complex vector: parallel re/im arrays of equal length.
struct ComplexVector {
  std::vector<double> re;
  std::vector<double> im;

  ComplexVector() = default;
  explicit ComplexVector(std::size_t n) : re(n, 0.0), im(n, 0.0) {}
  ComplexVector(std::vector<double> r, std::vector<double> i)
      : re(std::move(r)), im(std::move(i)) {
    if (re.size() != im.size())
      throw std::invalid_argument("ComplexVector: re/im length mismatch");
  }

  std::size_t size() const { return re.size(); }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace fft_detail {

// Twiddle factors w^k = exp(-i 2 pi k / n), k < n/2, computed once per
// length from direct sin/cos calls (no recurrences; keeps 1e-12 accuracy
// over the full 2..1024 range). Cached per thread so concurrent model
// evaluations never contend.
struct TwiddleTable {
  std::vector<double> cos_;
  std::vector<double> sin_;
};

inline const TwiddleTable& twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, TwiddleTable> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  TwiddleTable t;
  t.cos_.resize(n / 2);
  t.sin_.resize(n / 2);
  const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 0; k < n / 2; ++k) {
    t.cos_[k] = std::cos(step * static_cast<double>(k));
    t.sin_[k] = std::sin(step * static_cast<double>(k));
  }
  return cache.emplace(n, std::move(t)).first->second;
}

}  // namespace fft_detail

/// In-place radix-2 Cooley-Tukey transform, power-of-two lengths only.
/// Forward uses exp(-i...) and applies no scaling; the inverse direction
/// uses exp(+i...) and is likewise unscaled (callers divide by n).
inline void fft_unscaled_inplace(std::vector<double>& re, std::vector<double>& im,
                                 bool inverse) {
  const std::size_t n = re.size();
  if (im.size() != n) throw std::invalid_argument("fft: re/im length mismatch");
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: length must be a power of two");
  if (n == 1) return;

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }

  const auto& tw = fft_detail::twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t stride = n / len;  // twiddle index step at this stage
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const double wr = tw.cos_[k * stride];
        const double wi = inverse ? -tw.sin_[k * stride] : tw.sin_[k * stride];
        const std::size_t a = base + k;
        const std::size_t b = a + half;
        const double tr = re[b] * wr - im[b] * wi;
        const double ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
}

/// Forward DFT, unscaled: X[k] = sum_n x[n] exp(-i 2 pi k n / N).
inline ComplexVector fft(const ComplexVector& x) {
  ComplexVector out = x;
  fft_unscaled_inplace(out.re, out.im, /*inverse=*/false);
  return out;
}

/// Inverse DFT with 1/N scaling, so ifft(fft(x)) == x.
inline ComplexVector ifft(const ComplexVector& x) {
  ComplexVector out = x;
  fft_unscaled_inplace(out.re, out.im, /*inverse=*/true);
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.re[i] *= inv_n;
    out.im[i] *= inv_n;
  }
  return out;
}

}  // namespace opforge
