#pragma once

// Central finite-difference gradient checker. The forward builder runs in
// two modes: tracked leaves on a tape (reverse-mode gradients) and plain
// constants (numerator for the FD quotient), so the check never shares a
// code path with the adjoints it verifies.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "opforge/rng.hpp"
#include "opforge/tensor.hpp"

namespace gradcheck {

using Builder = std::function<opforge::Tensor(const std::vector<opforge::Tensor>&)>;

struct Result {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline std::vector<std::vector<double>> random_inputs(
    const std::vector<opforge::Shape>& shapes, std::uint64_t seed,
    double kink_margin = 0.0) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> vals;
  for (const auto& s : shapes) {
    std::vector<double> v(opforge::shape_numel(s));
    for (auto& x : v) {
      x = opforge::uniform_in(rng, -1.0, 1.0);
      // keep piecewise ops away from their kink so FD stays valid
      if (kink_margin > 0.0 && std::abs(x) < kink_margin)
        x = x < 0.0 ? x - kink_margin : x + kink_margin;
    }
    vals.push_back(std::move(v));
  }
  return vals;
}

inline Result check(const std::vector<opforge::Shape>& shapes, const Builder& f,
                    std::uint64_t seed, double h = 1e-5, double kink_margin = 0.0) {
  auto vals = random_inputs(shapes, seed, kink_margin);

  opforge::Tape tape;
  std::vector<opforge::Tensor> leaves;
  for (std::size_t i = 0; i < shapes.size(); ++i)
    leaves.push_back(tape.leaf(shapes[i], vals[i]));
  opforge::Tensor loss = f(leaves);
  tape.backward(loss);
  std::vector<std::vector<double>> ad;
  for (const auto& l : leaves) ad.push_back(tape.grad(l));

  auto eval = [&](const std::vector<std::vector<double>>& v) {
    std::vector<opforge::Tensor> consts;
    for (std::size_t i = 0; i < shapes.size(); ++i)
      consts.emplace_back(shapes[i], v[i]);
    return f(consts).scalar_value();
  };

  Result r;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    for (std::size_t j = 0; j < vals[i].size(); ++j) {
      auto plus = vals, minus = vals;
      plus[i][j] += h;
      minus[i][j] -= h;
      const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
      const double a = ad[i][j];
      const double denom = std::max({std::abs(a), std::abs(fd), 1e-2});
      r.max_rel_err = std::max(r.max_rel_err, std::abs(a - fd) / denom);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace gradcheck
