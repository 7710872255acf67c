#pragma once

// The three surrogate architectures as pure differentiable functions from
// min-max-scaled inputs to standardized QoIs:
//
//   dnn      - fully connected baseline, 5 inputs -> 2 scalar maxima
//   deeponet - unstacked branch/trunk pair per QoI, fused by dot product;
//              the five inputs feed the branch, the time grid the trunk
//   fno      - 1-D Fourier neural operator over the output time grid; the
//              constant inputs are repeated across the grid plus one
//              normalized time-coordinate channel
//
// Weights live in one flat store; the layout below is the file format's
// and the optimizer's single source of truth.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "opforge/campaign.hpp"
#include "opforge/rng.hpp"
#include "opforge/spectral.hpp"
#include "opforge/tensor.hpp"

namespace opforge {

enum class RomKind { dnn, deeponet, fno };

inline const char* rom_kind_name(RomKind k) {
  switch (k) {
    case RomKind::dnn: return "dnn";
    case RomKind::deeponet: return "deeponet";
    case RomKind::fno: return "fno";
  }
  throw std::logic_error("rom_kind_name: bad kind");
}

inline RomKind rom_kind_from_name(const std::string& s) {
  if (s == "dnn") return RomKind::dnn;
  if (s == "deeponet") return RomKind::deeponet;
  if (s == "fno") return RomKind::fno;
  throw std::invalid_argument("unknown model kind: " + s);
}

constexpr std::size_t kNumInputs = 5;
constexpr std::size_t kNumQois = 2;

// =============================================================================
// Configurations
// =============================================================================

struct DnnConfig {
  std::vector<std::size_t> hidden_widths{100, 150, 200, 150, 100};
  std::string activation = "relu";

  void validate() const {
    if (hidden_widths.empty())
      throw std::invalid_argument("DnnConfig: need at least one hidden layer");
    for (auto w : hidden_widths)
      if (w < 1) throw std::invalid_argument("DnnConfig: zero-width layer");
  }
};

struct DeepOnetConfig {
  std::vector<std::size_t> branch_hidden{100, 100};
  std::vector<std::size_t> trunk_hidden{100};
  std::size_t latent_dim = 100;  // shared width p of the dot-product fusion
  std::string activation = "relu";

  void validate() const {
    if (latent_dim < 1) throw std::invalid_argument("DeepOnetConfig: latent_dim < 1");
    for (auto w : branch_hidden)
      if (w < 1) throw std::invalid_argument("DeepOnetConfig: zero-width branch layer");
    for (auto w : trunk_hidden)
      if (w < 1) throw std::invalid_argument("DeepOnetConfig: zero-width trunk layer");
  }
};

struct FnoConfig {
  std::size_t modes = 50;
  std::size_t width = 16;
  std::size_t n_layers = 3;
  std::size_t grid_len = 200;
  std::size_t fft_len = 256;  // series edge-padded to this inside each layer
  std::size_t projection_width = 32;

  void validate() const {
    if (n_layers < 1) throw std::invalid_argument("FnoConfig: n_layers < 1");
    if (width < 1) throw std::invalid_argument("FnoConfig: width < 1");
    if (modes < 1 || modes > grid_len / 2)
      throw std::invalid_argument("FnoConfig: modes must be in [1, grid_len/2]");
    if (!is_power_of_two(fft_len) || fft_len < grid_len)
      throw std::invalid_argument("FnoConfig: fft_len must be a power of two >= grid_len");
    if (projection_width < 1) throw std::invalid_argument("FnoConfig: projection_width < 1");
  }
};

using RomConfig = std::variant<DnnConfig, DeepOnetConfig, FnoConfig>;

inline RomKind config_kind(const RomConfig& c) {
  return static_cast<RomKind>(c.index());
}

// =============================================================================
// Weight layout
// =============================================================================

enum class BlockRole { weight_matrix, bias, spectral };

struct WeightBlock {
  Shape shape;
  std::size_t offset = 0;
  BlockRole role = BlockRole::weight_matrix;
};

namespace rom_detail {

inline void push_dense(std::vector<WeightBlock>& blocks, std::size_t& off,
                       std::size_t in, std::size_t out) {
  blocks.push_back({{in, out}, off, BlockRole::weight_matrix});
  off += in * out;
  blocks.push_back({{out}, off, BlockRole::bias});
  off += out;
}

inline void push_mlp(std::vector<WeightBlock>& blocks, std::size_t& off,
                     std::size_t in, const std::vector<std::size_t>& hidden,
                     std::size_t out) {
  std::size_t prev = in;
  for (auto w : hidden) {
    push_dense(blocks, off, prev, w);
    prev = w;
  }
  push_dense(blocks, off, prev, out);
}

}  // namespace rom_detail

inline std::vector<WeightBlock> weight_layout(const DnnConfig& c) {
  c.validate();
  std::vector<WeightBlock> blocks;
  std::size_t off = 0;
  rom_detail::push_mlp(blocks, off, kNumInputs, c.hidden_widths, kNumQois);
  return blocks;
}

inline std::vector<WeightBlock> weight_layout(const DeepOnetConfig& c) {
  c.validate();
  std::vector<WeightBlock> blocks;
  std::size_t off = 0;
  for (std::size_t qoi = 0; qoi < kNumQois; ++qoi) {
    rom_detail::push_mlp(blocks, off, kNumInputs, c.branch_hidden, c.latent_dim);
    rom_detail::push_mlp(blocks, off, 1, c.trunk_hidden, c.latent_dim);
    blocks.push_back({{1}, off, BlockRole::bias});  // fusion bias
    off += 1;
  }
  return blocks;
}

inline std::vector<WeightBlock> weight_layout(const FnoConfig& c) {
  c.validate();
  std::vector<WeightBlock> blocks;
  std::size_t off = 0;
  rom_detail::push_dense(blocks, off, kNumInputs + 1, c.width);  // lifting
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    blocks.push_back({{c.width, c.width, c.modes, 2}, off, BlockRole::spectral});
    off += c.width * c.width * c.modes * 2;
    rom_detail::push_dense(blocks, off, c.width, c.width);  // pointwise path
  }
  rom_detail::push_dense(blocks, off, c.width, c.projection_width);
  rom_detail::push_dense(blocks, off, c.projection_width, kNumQois);
  return blocks;
}

inline std::vector<WeightBlock> weight_layout(const RomConfig& c) {
  return std::visit([](const auto& cfg) { return weight_layout(cfg); }, c);
}

inline std::size_t param_count(const RomConfig& c) {
  std::size_t n = 0;
  for (const auto& b : weight_layout(c)) n += shape_numel(b.shape);
  return n;
}

// =============================================================================
// Model
// =============================================================================

struct RomScaling {
  ParamBounds input_bounds;   // min-max scaling of the five inputs to [0,1]
  Scaler output_scaler;       // per-QoI standardization of the outputs
  bool series_targets = false;
};

struct RomModel {
  RomConfig config;
  std::vector<double> weights;
  RomScaling scaling;

  RomKind kind() const { return config_kind(config); }

  void validate() const {
    if (weights.size() != param_count(config))
      throw std::invalid_argument("RomModel: weight count does not match the config");
    scaling.output_scaler.validate();
  }
};

/// Seeded He-style fan-in uniform init for dense blocks, zero biases, and
/// small uniform complex spectral weights (scaled by 1/(in*out)).
inline void initialize_weights(RomModel& model, std::uint64_t seed) {
  const auto layout = weight_layout(model.config);
  model.weights.assign(param_count(model.config), 0.0);
  std::mt19937_64 rng(derive_seed(seed, "init"));
  for (const auto& block : layout) {
    double* w = model.weights.data() + block.offset;
    const std::size_t n = shape_numel(block.shape);
    switch (block.role) {
      case BlockRole::weight_matrix: {
        const double limit = std::sqrt(6.0 / static_cast<double>(block.shape[0]));
        for (std::size_t i = 0; i < n; ++i) w[i] = uniform_in(rng, -limit, limit);
        break;
      }
      case BlockRole::bias:
        break;  // zeros
      case BlockRole::spectral: {
        const double s =
            1.0 / static_cast<double>(block.shape[0] * block.shape[1]);
        for (std::size_t i = 0; i < n; ++i) w[i] = uniform_in(rng, -s, s);
        break;
      }
    }
  }
}

/// Weight blocks as tensors: tracked leaves when a tape is given (training),
/// plain constants otherwise (inference).
inline std::vector<Tensor> weight_tensors(const RomModel& model, Tape* tape) {
  const auto layout = weight_layout(model.config);
  std::vector<Tensor> blocks;
  blocks.reserve(layout.size());
  for (const auto& b : layout) {
    std::span<const double> vals{model.weights.data() + b.offset, shape_numel(b.shape)};
    if (tape)
      blocks.push_back(tape->leaf(b.shape, vals));
    else
      blocks.push_back(Tensor(b.shape, std::vector<double>(vals.begin(), vals.end())));
  }
  return blocks;
}

// =============================================================================
// Forward passes (batched; single-sample wrappers below)
// =============================================================================

namespace rom_detail {

inline Tensor activate(const std::string& name, const Tensor& t) {
  if (name == "relu") return relu(t);
  if (name == "gelu") return gelu(t);
  throw std::invalid_argument("unknown activation: " + name);
}

/// hidden layers with activation, linear head; blocks consumed pairwise
inline Tensor mlp_forward(const Tensor& x, const std::vector<Tensor>& blocks,
                          std::size_t& cursor, std::size_t n_hidden,
                          const std::string& activation) {
  Tensor h = x;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    h = activate(activation,
                 add_row_bias(matmul(h, blocks[cursor]), blocks[cursor + 1]));
    cursor += 2;
  }
  h = add_row_bias(matmul(h, blocks[cursor]), blocks[cursor + 1]);
  cursor += 2;
  return h;
}

inline void check_unit_range(std::span<const double> vals, const char* what) {
  for (double v : vals)
    if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
      throw std::invalid_argument(std::string(what) + ": values must lie in [0,1]");
}

}  // namespace rom_detail

/// x: [B, 5] scaled inputs -> [B, 2] scaled scalar QoIs.
inline Tensor dnn_forward_blocks(const DnnConfig& cfg, const std::vector<Tensor>& blocks,
                                 const Tensor& x) {
  std::size_t cursor = 0;
  return rom_detail::mlp_forward(x, blocks, cursor, cfg.hidden_widths.size(),
                                 cfg.activation);
}

/// x: [B, 5]; times: [n, 1] scaled to [0,1]. Returns one [B, n] matrix per
/// QoI: out(b, j) = sum_k branch_k(x_b) * trunk_k(t_j) + bias.
inline std::array<Tensor, kNumQois> deeponet_forward_blocks(
    const DeepOnetConfig& cfg, const std::vector<Tensor>& blocks, const Tensor& x,
    const Tensor& times) {
  if (times.size() == 0) throw std::invalid_argument("deeponet: empty times");
  std::array<Tensor, kNumQois> out;
  std::size_t cursor = 0;
  for (std::size_t q = 0; q < kNumQois; ++q) {
    Tensor branch = rom_detail::mlp_forward(x, blocks, cursor,
                                            cfg.branch_hidden.size(), cfg.activation);
    Tensor trunk = rom_detail::mlp_forward(times, blocks, cursor,
                                           cfg.trunk_hidden.size(), cfg.activation);
    Tensor fused = matmul(branch, transpose(trunk));  // [B, n]
    out[q] = add_bias_scalar(fused, blocks[cursor]);
    cursor += 1;
  }
  return out;
}

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// grid_input: [B*n_steps, 6] (five repeated scaled inputs + time coordinate).
/// Returns [B*n_steps, 2] scaled QoI series, sample-major.
inline Tensor fno_forward_blocks(const FnoConfig& cfg, const std::vector<Tensor>& blocks,
                                 const Tensor& grid_input, std::size_t batch,
                                 std::size_t n_steps, std::size_t fft_len) {
  std::size_t cursor = 0;
  Tensor q = add_row_bias(matmul(grid_input, blocks[cursor]), blocks[cursor + 1]);
  cursor += 2;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    Tensor spec = spectral_conv1d(q, blocks[cursor], batch, n_steps, fft_len);
    cursor += 1;
    Tensor pointwise = add_row_bias(matmul(q, blocks[cursor]), blocks[cursor + 1]);
    cursor += 2;
    q = gelu(add(pointwise, spec));
  }
  q = gelu(add_row_bias(matmul(q, blocks[cursor]), blocks[cursor + 1]));
  cursor += 2;
  return add_row_bias(matmul(q, blocks[cursor]), blocks[cursor + 1]);
}

// =============================================================================
// Input builders
// =============================================================================

/// Min-max scaled input matrix [B, 5] from physical parameter samples.
inline Tensor make_scaled_inputs(const ParamBounds& bounds,
                                 const std::vector<ProcessParams>& samples) {
  std::vector<double> vals;
  vals.reserve(samples.size() * kNumInputs);
  for (const auto& pp : samples) {
    const auto s = bounds.clamp01(pp);
    vals.insert(vals.end(), s.begin(), s.end());
  }
  return Tensor({samples.size(), kNumInputs}, std::move(vals));
}

/// Normalized output-grid time coordinates (j+1)/n as an [n, 1] tensor.
inline Tensor make_time_coords(std::size_t n) {
  if (n == 0) throw std::invalid_argument("make_time_coords: empty grid");
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j)
    t[j] = (static_cast<double>(j) + 1.0) / static_cast<double>(n);
  return Tensor({n, 1}, std::move(t));
}

/// FNO grid input: each sample's five scaled inputs repeated over n_steps
/// rows, plus the time coordinate as channel 6. Layout [B*n_steps, 6].
inline Tensor make_fno_grid_inputs(const Tensor& scaled_inputs, std::size_t n_steps) {
  const std::size_t batch = scaled_inputs.shape()[0];
  std::vector<double> vals;
  vals.reserve(batch * n_steps * (kNumInputs + 1));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < n_steps; ++j) {
      for (std::size_t c = 0; c < kNumInputs; ++c)
        vals.push_back(scaled_inputs[b * kNumInputs + c]);
      vals.push_back((static_cast<double>(j) + 1.0) / static_cast<double>(n_steps));
    }
  }
  return Tensor({batch * n_steps, kNumInputs + 1}, std::move(vals));
}

// =============================================================================
// Single-sample forward operations (scaled in, scaled out)
// =============================================================================

inline std::array<double, kNumQois> dnn_forward(const RomModel& model,
                                                const std::array<double, kNumInputs>& x) {
  rom_detail::check_unit_range(x, "dnn_forward");
  const auto& cfg = std::get<DnnConfig>(model.config);
  auto blocks = weight_tensors(model, nullptr);
  Tensor in({1, kNumInputs}, std::vector<double>(x.begin(), x.end()));
  Tensor out = dnn_forward_blocks(cfg, blocks, in);
  return {out[0], out[1]};
}

/// Per-QoI series evaluated at the given scaled time points.
inline std::array<std::vector<double>, kNumQois> deeponet_forward(
    const RomModel& model, const std::array<double, kNumInputs>& x,
    const std::vector<double>& times) {
  rom_detail::check_unit_range(x, "deeponet_forward");
  rom_detail::check_unit_range(times, "deeponet_forward times");
  if (times.empty()) throw std::invalid_argument("deeponet_forward: empty times");
  const auto& cfg = std::get<DeepOnetConfig>(model.config);
  auto blocks = weight_tensors(model, nullptr);
  Tensor in({1, kNumInputs}, std::vector<double>(x.begin(), x.end()));
  Tensor t({times.size(), 1}, times);
  auto out = deeponet_forward_blocks(cfg, blocks, in, t);
  std::array<std::vector<double>, kNumQois> series;
  for (std::size_t q = 0; q < kNumQois; ++q) {
    auto v = out[q].values();
    series[q].assign(v.begin(), v.end());
  }
  return series;
}

/// Per-QoI series over an n_steps output grid (default: the trained grid).
/// The FFT length scales with the grid so the learned modes stay aligned,
/// which is what makes evaluation at other resolutions meaningful.
inline std::array<std::vector<double>, kNumQois> fno_forward(
    const RomModel& model, const std::array<double, kNumInputs>& x,
    std::size_t n_steps = 0) {
  rom_detail::check_unit_range(x, "fno_forward");
  const auto& cfg = std::get<FnoConfig>(model.config);
  if (n_steps == 0) n_steps = cfg.grid_len;
  std::size_t fft_len = cfg.fft_len;
  if (n_steps != cfg.grid_len)
    fft_len = next_power_of_two(
        (n_steps * cfg.fft_len + cfg.grid_len - 1) / cfg.grid_len);

  auto blocks = weight_tensors(model, nullptr);
  Tensor in({1, kNumInputs}, std::vector<double>(x.begin(), x.end()));
  Tensor grid = make_fno_grid_inputs(in, n_steps);
  Tensor out = fno_forward_blocks(cfg, blocks, grid, 1, n_steps, fft_len);

  std::array<std::vector<double>, kNumQois> series;
  for (std::size_t q = 0; q < kNumQois; ++q) {
    series[q].resize(n_steps);
    for (std::size_t j = 0; j < n_steps; ++j) series[q][j] = out[j * kNumQois + q];
  }
  return series;
}

/// Scalar readout of a series model: the per-QoI maximum over time.
inline std::array<double, kNumQois> scalar_heads(
    const std::array<std::vector<double>, kNumQois>& series) {
  std::array<double, kNumQois> out{};
  for (std::size_t q = 0; q < kNumQois; ++q) {
    if (series[q].empty()) throw std::invalid_argument("scalar_heads: empty series");
    out[q] = series_max(series[q]);
  }
  return out;
}

}  // namespace opforge
