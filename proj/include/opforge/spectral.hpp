#pragma once

// Batched 1-D spectral convolution: the Fourier-space integral kernel of a
// Fourier layer, as a single differentiable primitive. Keeping it one tape
// node lets the adjoint reuse FFTs instead of differentiating through them.
// All transforms are real-valued at heart, so channels are packed two per
// complex FFT (even/odd split on the input side, Hermitian synthesis on the
// output side).

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

#include "opforge/fft.hpp"
#include "opforge/tensor.hpp"

namespace opforge {

namespace spectral_detail {

struct Workspace {
  std::vector<double> re, im;
  void reset(std::size_t n) {
    re.assign(n, 0.0);
    im.assign(n, 0.0);
  }
};

enum class PadMode { edge, zero };

/// Gathers channel ch (and ch+1 when paired) of one sample out of the
/// [batch*len, channels] layout into the complex buffer, extending the
/// series to fft_len either by edge replication (forward inputs) or with
/// zeros (the adjoint's output-gradient transform).
inline void load_padded(const double* x, std::size_t series_len, std::size_t channels,
                        std::size_t ch, bool paired, std::size_t fft_len, PadMode pad,
                        Workspace& w) {
  w.reset(fft_len);
  for (std::size_t n = 0; n < series_len; ++n) w.re[n] = x[n * channels + ch];
  if (pad == PadMode::edge) {
    const double edge_re = w.re[series_len - 1];
    for (std::size_t n = series_len; n < fft_len; ++n) w.re[n] = edge_re;
  }
  if (paired) {
    for (std::size_t n = 0; n < series_len; ++n) w.im[n] = x[n * channels + ch + 1];
    if (pad == PadMode::edge) {
      const double edge_im = w.im[series_len - 1];
      for (std::size_t n = series_len; n < fft_len; ++n) w.im[n] = edge_im;
    }
  }
}

/// One FFT of (a + i b) carries the spectra of both real signals; split the
/// packed transform back into the two Hermitian halves, modes 0..M-1.
/// spec buffers are interleaved (re, im) pairs with stride 2.
inline void split_packed_spectrum(const Workspace& w, std::size_t fft_len,
                                  std::size_t modes, double* spec_a, double* spec_b) {
  spec_a[0] = w.re[0];
  spec_a[1] = 0.0;
  if (spec_b) {
    spec_b[0] = w.im[0];
    spec_b[1] = 0.0;
  }
  for (std::size_t k = 1; k < modes; ++k) {
    const double zr = w.re[k], zi = w.im[k];
    const double mr = w.re[fft_len - k], mi = w.im[fft_len - k];
    spec_a[2 * k] = 0.5 * (zr + mr);
    spec_a[2 * k + 1] = 0.5 * (zi - mi);
    if (spec_b) {
      spec_b[2 * k] = 0.5 * (zi + mi);
      spec_b[2 * k + 1] = 0.5 * (mr - zr);
    }
  }
}

/// Forward transforms of one sample's channels into mode coefficients,
/// [channels][modes] interleaved complex.
inline void channel_spectra(const double* x, std::size_t series_len,
                            std::size_t channels, std::size_t fft_len,
                            std::size_t modes, PadMode pad, Workspace& w, double* spec) {
  for (std::size_t c = 0; c < channels; c += 2) {
    const bool paired = c + 1 < channels;
    load_padded(x, series_len, channels, c, paired, fft_len, pad, w);
    fft_unscaled_inplace(w.re, w.im, /*inverse=*/false);
    split_packed_spectrum(w, fft_len, modes, spec + c * modes * 2,
                          paired ? spec + (c + 1) * modes * 2 : nullptr);
  }
}

/// Hermitian synthesis of one or two channels' mode coefficients back to the
/// time domain (inverse transform of the mirrored spectrum, real parts in
/// w.re, the paired channel in w.im). Unscaled: callers divide by fft_len.
inline void hermitian_synthesis(const double* ya, const double* yb, std::size_t fft_len,
                                std::size_t modes, Workspace& w) {
  w.reset(fft_len);
  w.re[0] = ya[0];
  if (yb) w.im[0] = yb[0];
  for (std::size_t k = 1; k < modes; ++k) {
    double sr = ya[2 * k], si = ya[2 * k + 1];
    double mr = ya[2 * k], mi = -ya[2 * k + 1];  // conj at the mirror bin
    if (yb) {
      sr -= yb[2 * k + 1];
      si += yb[2 * k];
      mr -= -yb[2 * k + 1];  // + i*conj(yb[k])
      mi += yb[2 * k];
    }
    w.re[k] = sr;
    w.im[k] = si;
    w.re[fft_len - k] = mr;
    w.im[fft_len - k] = mi;
  }
  fft_unscaled_inplace(w.re, w.im, /*inverse=*/true);
}

/// Real part of the unscaled inverse transform of one or two truncated
/// (non-Hermitian) spectra: used by the input-gradient path. Implemented by
/// Hermitianizing each spectrum, which leaves exactly the real part.
inline void real_inverse_of_truncated(const double* sa, const double* sb,
                                      std::size_t fft_len, std::size_t modes,
                                      Workspace& w) {
  w.reset(fft_len);
  w.re[0] = sa[0];
  if (sb) w.im[0] = sb[0];
  for (std::size_t k = 1; k < modes; ++k) {
    // H[k] = S[k]/2, H[N-k] = conj(S[k])/2, packed as H_a + i H_b
    double hr = 0.5 * sa[2 * k], hi = 0.5 * sa[2 * k + 1];
    double mr = hr, mi = -hi;
    if (sb) {
      hr -= 0.5 * sb[2 * k + 1];
      hi += 0.5 * sb[2 * k];
      mr -= -0.5 * sb[2 * k + 1];
      mi += 0.5 * sb[2 * k];
    }
    w.re[k] = hr;
    w.im[k] = hi;
    w.re[fft_len - k] = mr;
    w.im[fft_len - k] = mi;
  }
  fft_unscaled_inplace(w.re, w.im, /*inverse=*/true);
}

}  // namespace spectral_detail

/// Spectral convolution over the trailing series axis.
///
/// x        : [batch*series_len, in_channels], row (b, n) at b*series_len + n
/// weights  : [in_channels, out_channels, modes, 2] complex kernel weights
/// result   : [batch*series_len, out_channels]
///
/// Per sample and channel the series is edge-padded to fft_len, transformed,
/// the lowest `modes` coefficients are mixed by the complex weights, all
/// higher modes are zeroed, and the Hermitian-symmetric inverse transform is
/// cropped back to series_len.
inline Tensor spectral_conv1d(const Tensor& x, const Tensor& weights,
                              std::size_t batch, std::size_t series_len,
                              std::size_t fft_len) {
  if (!x.is_matrix()) throw std::invalid_argument("spectral_conv1d: x must be 2-D");
  if (weights.shape().size() != 4 || weights.shape()[3] != 2)
    throw std::invalid_argument("spectral_conv1d: weights must be [in, out, modes, 2]");
  const std::size_t in_ch = weights.shape()[0];
  const std::size_t out_ch = weights.shape()[1];
  const std::size_t modes = weights.shape()[2];
  if (x.shape()[0] != batch * series_len || x.shape()[1] != in_ch)
    throw std::invalid_argument("spectral_conv1d: x shape mismatch");
  if (!is_power_of_two(fft_len) || fft_len < series_len)
    throw std::invalid_argument("spectral_conv1d: fft_len must be a power of two >= series length");
  if (modes == 0 || modes > fft_len / 2)
    throw std::invalid_argument("spectral_conv1d: modes must be in [1, fft_len/2]");

  const double* px = x.values().data();
  const double* pw = weights.values().data();

  // Input spectra are cached for the adjoint: [batch][in_ch][modes] complex.
  auto in_spec = std::make_shared<std::vector<double>>(batch * in_ch * modes * 2);
  std::vector<double> out(batch * series_len * out_ch, 0.0);

  spectral_detail::Workspace w;
  std::vector<double> y_spec(out_ch * modes * 2);
  const double inv_n = 1.0 / static_cast<double>(fft_len);

  for (std::size_t b = 0; b < batch; ++b) {
    double* rspec_b = in_spec->data() + b * in_ch * modes * 2;
    spectral_detail::channel_spectra(px + b * series_len * in_ch, series_len, in_ch,
                                     fft_len, modes, spectral_detail::PadMode::edge, w,
                                     rspec_b);

    // Y[o,k] = sum_i W[i,o,k] * R[i,k]  (complex)
    std::fill(y_spec.begin(), y_spec.end(), 0.0);
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
      const double* rspec = rspec_b + ci * modes * 2;
      for (std::size_t co = 0; co < out_ch; ++co) {
        const double* wk = pw + ((ci * out_ch + co) * modes) * 2;
        double* y = y_spec.data() + co * modes * 2;
        for (std::size_t k = 0; k < modes; ++k) {
          const double wr = wk[2 * k], wi = wk[2 * k + 1];
          const double rr = rspec[2 * k], ri = rspec[2 * k + 1];
          y[2 * k] += wr * rr - wi * ri;
          y[2 * k + 1] += wr * ri + wi * rr;
        }
      }
    }

    double* ob = out.data() + b * series_len * out_ch;
    for (std::size_t co = 0; co < out_ch; co += 2) {
      const bool paired = co + 1 < out_ch;
      spectral_detail::hermitian_synthesis(
          y_spec.data() + co * modes * 2,
          paired ? y_spec.data() + (co + 1) * modes * 2 : nullptr, fft_len, modes, w);
      for (std::size_t n = 0; n < series_len; ++n) ob[n * out_ch + co] = w.re[n] * inv_n;
      if (paired)
        for (std::size_t n = 0; n < series_len; ++n)
          ob[n * out_ch + co + 1] = w.im[n] * inv_n;
    }
  }

  Tape* tape = op_detail::joint_tape(x, weights);
  const int nx = x.requires_grad() ? x.node() : -1;
  const int nw = weights.requires_grad() ? weights.node() : -1;
  auto wdata = weights.storage();

  return op_detail::finish(
      {batch * series_len, out_ch}, std::move(out), tape, "spectral_conv1d",
      [&](Tape& t, int node) {
        t.set_backward(node, [nx, nw, node, wdata, in_spec, batch, series_len, fft_len,
                              in_ch, out_ch, modes](Tape& tp) {
          auto g = tp.node_grad(node);  // [batch*series_len, out_ch]
          const double inv_n = 1.0 / static_cast<double>(fft_len);
          spectral_detail::Workspace w;
          std::vector<double> gy(out_ch * modes * 2);   // dL/dY (complex pairs)
          std::vector<double> gr(in_ch * modes * 2);    // dL/dR

          std::vector<double>* gx = nx >= 0 ? &tp.grad_buffer(nx) : nullptr;
          std::vector<double>* gw = nw >= 0 ? &tp.grad_buffer(nw) : nullptr;
          const double* pw = wdata->data();

          for (std::size_t b = 0; b < batch; ++b) {
            // dY[o,k] = (c_k / N) * G[o,k], G the forward DFT of the
            // (zero-padded) output gradient; c_0 = 1, else 2 from the
            // Hermitian mirror.
            spectral_detail::channel_spectra(g.data() + b * series_len * out_ch,
                                             series_len, out_ch, fft_len, modes,
                                             spectral_detail::PadMode::zero, w,
                                             gy.data());
            for (std::size_t co = 0; co < out_ch; ++co) {
              double* y = gy.data() + co * modes * 2;
              y[0] *= inv_n;
              y[1] = 0.0;
              for (std::size_t k = 1; k < modes; ++k) {
                y[2 * k] *= 2.0 * inv_n;
                y[2 * k + 1] *= 2.0 * inv_n;
              }
            }

            // dW[i,o,k] += dY[o,k] conj(R[i,k]);  dR[i,k] = sum_o dY[o,k] conj(W[i,o,k])
            std::fill(gr.begin(), gr.end(), 0.0);
            const double* rspec_b = in_spec->data() + b * in_ch * modes * 2;
            for (std::size_t ci = 0; ci < in_ch; ++ci) {
              const double* rspec = rspec_b + ci * modes * 2;
              double* gri = gr.data() + ci * modes * 2;
              for (std::size_t co = 0; co < out_ch; ++co) {
                const double* y = gy.data() + co * modes * 2;
                const double* wk = pw + ((ci * out_ch + co) * modes) * 2;
                double* gwk = gw ? gw->data() + ((ci * out_ch + co) * modes) * 2 : nullptr;
                for (std::size_t k = 0; k < modes; ++k) {
                  const double yr = y[2 * k], yi = y[2 * k + 1];
                  if (gwk) {
                    const double rr = rspec[2 * k], ri = rspec[2 * k + 1];
                    gwk[2 * k] += yr * rr + yi * ri;
                    gwk[2 * k + 1] += yi * rr - yr * ri;
                  }
                  if (gx) {
                    const double wr = wk[2 * k], wi = wk[2 * k + 1];
                    gri[2 * k] += yr * wr + yi * wi;
                    gri[2 * k + 1] += yi * wr - yr * wi;
                  }
                }
              }
            }

            // dx via the real part of the unscaled inverse transform of dR;
            // the edge-replication adjoint folds padded cells onto the last
            // step.
            if (gx) {
              double* gxb = gx->data() + b * series_len * in_ch;
              for (std::size_t ci = 0; ci < in_ch; ci += 2) {
                const bool paired = ci + 1 < in_ch;
                spectral_detail::real_inverse_of_truncated(
                    gr.data() + ci * modes * 2,
                    paired ? gr.data() + (ci + 1) * modes * 2 : nullptr, fft_len, modes,
                    w);
                for (std::size_t n = 0; n + 1 < series_len; ++n) {
                  gxb[n * in_ch + ci] += w.re[n];
                  if (paired) gxb[n * in_ch + ci + 1] += w.im[n];
                }
                double tail_re = 0.0, tail_im = 0.0;
                for (std::size_t n = series_len - 1; n < fft_len; ++n) {
                  tail_re += w.re[n];
                  tail_im += w.im[n];
                }
                gxb[(series_len - 1) * in_ch + ci] += tail_re;
                if (paired) gxb[(series_len - 1) * in_ch + ci + 1] += tail_im;
              }
            }
          }
        });
      });
}

}  // namespace opforge
