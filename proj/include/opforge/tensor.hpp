#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace opforge {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

class Tape;

// =============================================================================
// Tensor: immutable dense f64 value, row-major. Copies share storage.
// A tensor either lives off-tape (constant) or references the tape node
// that produced it, which is what requires_grad() reports.
// =============================================================================

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data)
      : data_(std::make_shared<const std::vector<double>>(std::move(data))),
        shape_(std::move(shape)) {
    if (shape_numel(shape_) != data_->size())
      throw std::invalid_argument("Tensor: shape does not match data length");
    check_finite("Tensor()");
  }

  static Tensor zeros(Shape shape) {
    std::vector<double> d(shape_numel(shape), 0.0);
    return Tensor(std::move(shape), std::move(d));
  }

  static Tensor full(Shape shape, double value) {
    std::vector<double> d(shape_numel(shape), value);
    return Tensor(std::move(shape), std::move(d));
  }

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_ ? data_->size() : 0; }
  bool defined() const { return static_cast<bool>(data_); }

  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : shape_.at(0); }
  std::size_t cols() const { return shape_.size() == 2 ? shape_[1] : 1; }
  bool is_matrix() const { return shape_.size() == 2; }

  std::span<const double> values() const { return {data_->data(), data_->size()}; }
  const std::shared_ptr<const std::vector<double>>& storage() const { return data_; }

  double operator[](std::size_t i) const { return (*data_)[i]; }

  double scalar_value() const {
    if (size() != 1) throw std::invalid_argument("Tensor: not a scalar");
    return (*data_)[0];
  }

  bool requires_grad() const { return node_ >= 0; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  friend class Tape;

  void check_finite(const char* where) const {
    for (double v : *data_)
      if (!std::isfinite(v))
        throw std::runtime_error(std::string("non-finite value in ") + where);
  }

  std::shared_ptr<const std::vector<double>> data_;
  Shape shape_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// =============================================================================
// Tape: define-by-run reverse-mode record. Rebuilt per forward pass;
// single-writer. Node order is creation order, which is topological.
// =============================================================================

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&)>;

  /// A tracked leaf (network weight, input under differentiation).
  Tensor leaf(Shape shape, std::vector<double> data) {
    Tensor t(std::move(shape), std::move(data));
    return adopt(std::move(t));
  }

  Tensor leaf(Shape shape, std::span<const double> data) {
    return leaf(std::move(shape), std::vector<double>(data.begin(), data.end()));
  }

  /// Wraps an already-computed op result as a tape node.
  Tensor adopt(Tensor t) {
    t.tape_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{t.size(), nullptr});
    return t;
  }

  void set_backward(int node, BackwardFn fn) {
    nodes_[static_cast<std::size_t>(node)].backward = std::move(fn);
  }

  std::size_t node_count() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Populates gradients for every node
  /// on the path; leaves off the path read back as zero.
  void backward(const Tensor& loss) {
    if (loss.size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
    if (loss.tape() != this || loss.node() < 0)
      throw std::invalid_argument("backward: loss was not produced on this tape");
    grads_.assign(nodes_.size(), {});
    grads_[static_cast<std::size_t>(loss.node())] = {1.0};
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (grads_[i].empty()) continue;  // node not on the loss path
      if (nodes_[i].backward) nodes_[i].backward(*this);
    }
    ran_ = true;
  }

  bool has_gradients() const { return ran_; }

  /// Gradient of the last backward() pass w.r.t. a tensor on this tape.
  std::vector<double> grad(const Tensor& t) const {
    if (t.tape() != this || t.node() < 0)
      throw std::invalid_argument("grad: tensor is not tracked on this tape");
    if (!ran_) throw std::runtime_error("grad: backward() has not run");
    const auto& g = grads_[static_cast<std::size_t>(t.node())];
    if (g.empty()) return std::vector<double>(t.size(), 0.0);
    return g;
  }

  // --- accumulation helpers used by op adjoints ---

  std::span<const double> node_grad(int node) const {
    const auto& g = grads_[static_cast<std::size_t>(node)];
    return {g.data(), g.size()};
  }

  bool node_has_grad(int node) const {
    return !grads_[static_cast<std::size_t>(node)].empty();
  }

  std::vector<double>& grad_buffer(int node) {
    auto& g = grads_[static_cast<std::size_t>(node)];
    if (g.empty()) g.assign(nodes_[static_cast<std::size_t>(node)].size, 0.0);
    return g;
  }

 private:
  struct Node {
    std::size_t size;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool ran_ = false;
};

// =============================================================================
// Primitive ops. Each computes eagerly, validates finiteness, and records
// its adjoint when an input is tracked.
// =============================================================================

namespace op_detail {

inline void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("non-finite value produced by ") + op);
}

inline Tape* joint_tape(const Tensor& a, const Tensor& b) {
  Tape* ta = a.requires_grad() ? a.tape() : nullptr;
  Tape* tb = b.requires_grad() ? b.tape() : nullptr;
  if (ta && tb && ta != tb)
    throw std::invalid_argument("op: inputs live on different tapes");
  return ta ? ta : tb;
}

inline Tensor finish(Shape shape, std::vector<double> data, Tape* tape, const char* op,
                     const std::function<void(Tape&, int)>& make_backward) {
  check_finite(data, op);
  Tensor out(std::move(shape), std::move(data));
  if (!tape) return out;
  out = tape->adopt(std::move(out));
  const int node = out.node();
  make_backward(*tape, node);
  return out;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace op_detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  op_detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  Tape* tape = op_detail::joint_tape(a, b);
  const int na = a.requires_grad() ? a.node() : -1;
  const int nb = b.requires_grad() ? b.node() : -1;
  return op_detail::finish(a.shape(), std::move(out), tape, "add", [&](Tape& t, int node) {
    t.set_backward(node, [na, nb, node](Tape& tp) {
      auto g = tp.node_grad(node);
      if (na >= 0) {
        auto& ga = tp.grad_buffer(na);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (nb >= 0) {
        auto& gb = tp.grad_buffer(nb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  op_detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  Tape* tape = op_detail::joint_tape(a, b);
  const int na = a.requires_grad() ? a.node() : -1;
  const int nb = b.requires_grad() ? b.node() : -1;
  return op_detail::finish(a.shape(), std::move(out), tape, "sub", [&](Tape& t, int node) {
    t.set_backward(node, [na, nb, node](Tape& tp) {
      auto g = tp.node_grad(node);
      if (na >= 0) {
        auto& ga = tp.grad_buffer(na);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (nb >= 0) {
        auto& gb = tp.grad_buffer(nb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  op_detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Tape* tape = op_detail::joint_tape(a, b);
  const int na = a.requires_grad() ? a.node() : -1;
  const int nb = b.requires_grad() ? b.node() : -1;
  auto da = a.storage();
  auto db = b.storage();
  return op_detail::finish(a.shape(), std::move(out), tape, "mul", [&](Tape& t, int node) {
    t.set_backward(node, [na, nb, node, da, db](Tape& tp) {
      auto g = tp.node_grad(node);
      if (na >= 0) {
        auto& ga = tp.grad_buffer(na);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*db)[i];
      }
      if (nb >= 0) {
        auto& gb = tp.grad_buffer(nb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * (*da)[i];
      }
    });
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * c;
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  return op_detail::finish(a.shape(), std::move(out), tape, "scale", [&](Tape& t, int node) {
    t.set_backward(node, [na, node, c](Tape& tp) {
      auto g = tp.node_grad(node);
      auto& ga = tp.grad_buffer(na);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    });
  });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + c;
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  return op_detail::finish(a.shape(), std::move(out), tape, "add_scalar",
                           [&](Tape& t, int node) {
                             t.set_backward(node, [na, node](Tape& tp) {
                               auto g = tp.node_grad(node);
                               auto& ga = tp.grad_buffer(na);
                               for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                             });
                           });
}

/// C[m x n] = A[m x k] . B[k x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (!a.is_matrix() || !b.is_matrix())
    throw std::invalid_argument("matmul: inputs must be 2-D");
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) throw std::invalid_argument("matmul: inner extents disagree");

  std::vector<double> out(m * n, 0.0);
  {
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    for (std::size_t i = 0; i < m; ++i) {
      double* po = out.data() + i * n;
      for (std::size_t l = 0; l < k; ++l) {
        const double av = pa[i * k + l];
        const double* pbl = pb + l * n;
        for (std::size_t j = 0; j < n; ++j) po[j] += av * pbl[j];
      }
    }
  }

  Tape* tape = op_detail::joint_tape(a, b);
  const int na = a.requires_grad() ? a.node() : -1;
  const int nb = b.requires_grad() ? b.node() : -1;
  auto da = a.storage();
  auto db = b.storage();
  return op_detail::finish({m, n}, std::move(out), tape, "matmul", [&](Tape& t, int node) {
    t.set_backward(node, [na, nb, node, da, db, m, k, n](Tape& tp) {
      auto g = tp.node_grad(node);
      if (na >= 0) {
        // dA[i,l] = sum_j G[i,j] B[l,j]: row-by-row dot products, both
        // operands streamed contiguously
        auto& ga = tp.grad_buffer(na);
        const double* pb = db->data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* gi = g.data() + i * n;
          double* gai = ga.data() + i * k;
          for (std::size_t l = 0; l < k; ++l) {
            const double* pbl = pb + l * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += gi[j] * pbl[j];
            gai[l] += acc;
          }
        }
      }
      if (nb >= 0) {
        // dB[l,j] = sum_i A[i,l] G[i,j]: one pass over the rows keeps the
        // k x n accumulator hot in cache
        auto& gb = tp.grad_buffer(nb);
        const double* pa = da->data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* ai = pa + i * k;
          const double* gi = g.data() + i * n;
          for (std::size_t l = 0; l < k; ++l) {
            const double av = ai[l];
            double* gbl = gb.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) gbl[j] += av * gi[j];
          }
        }
      }
    });
  });
}

inline Tensor transpose(const Tensor& a) {
  if (!a.is_matrix()) throw std::invalid_argument("transpose: input must be 2-D");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  return op_detail::finish({c, r}, std::move(out), tape, "transpose",
                           [&](Tape& t, int node) {
                             t.set_backward(node, [na, node, r, c](Tape& tp) {
                               auto g = tp.node_grad(node);  // shape c x r
                               auto& ga = tp.grad_buffer(na);
                               for (std::size_t j = 0; j < c; ++j)
                                 for (std::size_t i = 0; i < r; ++i)
                                   ga[i * c + j] += g[j * r + i];
                             });
                           });
}

/// M[r x c] + v[c], v broadcast over rows (the usual dense-layer bias).
inline Tensor add_row_bias(const Tensor& m, const Tensor& v) {
  if (!m.is_matrix() || v.shape().size() != 1)
    throw std::invalid_argument("add_row_bias: expects matrix and vector");
  const std::size_t r = m.shape()[0], c = m.shape()[1];
  if (v.size() != c) throw std::invalid_argument("add_row_bias: width mismatch");
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = m[i * c + j] + v[j];
  Tape* tape = op_detail::joint_tape(m, v);
  const int nm = m.requires_grad() ? m.node() : -1;
  const int nv = v.requires_grad() ? v.node() : -1;
  return op_detail::finish(m.shape(), std::move(out), tape, "add_row_bias",
                           [&](Tape& t, int node) {
                             t.set_backward(node, [nm, nv, node, r, c](Tape& tp) {
                               auto g = tp.node_grad(node);
                               if (nm >= 0) {
                                 auto& gm = tp.grad_buffer(nm);
                                 for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
                               }
                               if (nv >= 0) {
                                 auto& gv = tp.grad_buffer(nv);
                                 for (std::size_t i = 0; i < r; ++i)
                                   for (std::size_t j = 0; j < c; ++j)
                                     gv[j] += g[i * c + j];
                               }
                             });
                           });
}

/// M + s, a trainable scalar broadcast over every element.
inline Tensor add_bias_scalar(const Tensor& m, const Tensor& s) {
  if (s.size() != 1) throw std::invalid_argument("add_bias_scalar: bias must be scalar");
  const double sv = s[0];
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] + sv;
  Tape* tape = op_detail::joint_tape(m, s);
  const int nm = m.requires_grad() ? m.node() : -1;
  const int ns = s.requires_grad() ? s.node() : -1;
  return op_detail::finish(m.shape(), std::move(out), tape, "add_bias_scalar",
                           [&](Tape& t, int node) {
                             t.set_backward(node, [nm, ns, node](Tape& tp) {
                               auto g = tp.node_grad(node);
                               if (nm >= 0) {
                                 auto& gm = tp.grad_buffer(nm);
                                 for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
                               }
                               if (ns >= 0) {
                                 double acc = 0.0;
                                 for (double gi : g) acc += gi;
                                 tp.grad_buffer(ns)[0] += acc;
                               }
                             });
                           });
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  auto da = a.storage();
  return op_detail::finish(a.shape(), std::move(out), tape, "relu", [&](Tape& t, int node) {
    t.set_backward(node, [na, node, da](Tape& tp) {
      auto g = tp.node_grad(node);
      auto& ga = tp.grad_buffer(na);
      for (std::size_t i = 0; i < g.size(); ++i)
        if ((*da)[i] > 0.0) ga[i] += g[i];
    });
  });
}

inline constexpr double kInvSqrt2 = 0.7071067811865475244;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

/// Exact (erf-based) GELU. The forward pass caches the Gaussian CDF so the
/// adjoint pays for one exp, not another erf.
inline Tensor gelu(const Tensor& a) {
  std::vector<double> out(a.size());
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  std::shared_ptr<std::vector<double>> cdf_cache;
  if (tape) cdf_cache = std::make_shared<std::vector<double>>(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a[i];
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    out[i] = x * cdf;
    if (cdf_cache) (*cdf_cache)[i] = cdf;
  }
  const int na = a.requires_grad() ? a.node() : -1;
  auto da = a.storage();
  return op_detail::finish(a.shape(), std::move(out), tape, "gelu", [&](Tape& t, int node) {
    t.set_backward(node, [na, node, da, cdf_cache](Tape& tp) {
      auto g = tp.node_grad(node);
      auto& ga = tp.grad_buffer(na);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = (*da)[i];
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        ga[i] += g[i] * ((*cdf_cache)[i] + x * pdf);
      }
    });
  });
}

/// |a| elementwise; subgradient 0 at the origin.
inline Tensor abs(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(a[i]);
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  auto da = a.storage();
  return op_detail::finish(a.shape(), std::move(out), tape, "abs", [&](Tape& t, int node) {
    t.set_backward(node, [na, node, da](Tape& tp) {
      auto g = tp.node_grad(node);
      auto& ga = tp.grad_buffer(na);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = (*da)[i];
        if (x > 0.0) ga[i] += g[i];
        else if (x < 0.0) ga[i] -= g[i];
      }
    });
  });
}

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  return op_detail::finish({1}, {s}, tape, "sum", [&](Tape& t, int node) {
    t.set_backward(node, [na, node](Tape& tp) {
      const double g = tp.node_grad(node)[0];
      auto& ga = tp.grad_buffer(na);
      for (auto& v : ga) v += g;
    });
  });
}

inline Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
  const double inv_n = 1.0 / static_cast<double>(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  s *= inv_n;
  Tape* tape = a.requires_grad() ? a.tape() : nullptr;
  const int na = a.requires_grad() ? a.node() : -1;
  return op_detail::finish({1}, {s}, tape, "mean", [&](Tape& t, int node) {
    t.set_backward(node, [na, node, inv_n](Tape& tp) {
      const double g = tp.node_grad(node)[0] * inv_n;
      auto& ga = tp.grad_buffer(na);
      for (auto& v : ga) v += g;
    });
  });
}

}  // namespace opforge
