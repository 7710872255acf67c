#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "opforge/model_io.hpp"
#include "opforge/rom.hpp"

using namespace opforge;

namespace {

RomModel make_model(RomConfig cfg, std::uint64_t seed) {
  RomModel m;
  m.config = std::move(cfg);
  m.scaling.output_scaler.mean = {0.0, 0.0};
  m.scaling.output_scaler.stddev = {1.0, 1.0};
  initialize_weights(m, seed);
  return m;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_in(rng, -1.0, 1.0);
  return v;
}

}  // namespace

// =============================================================================
// parameter-count formulas
// =============================================================================

TEST_CASE("dnn parameter count follows sum(w_i*w_{i+1} + w_{i+1})") {
  DnnConfig c;
  c.hidden_widths = {100, 150, 200, 150, 100};
  const std::vector<std::size_t> widths = {5, 100, 150, 200, 150, 100, 2};
  std::size_t expected = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    expected += widths[i] * widths[i + 1] + widths[i + 1];
  CHECK(param_count(RomConfig{c}) == expected);
  auto m = make_model(c, 1);
  CHECK(m.weights.size() == expected);
}

TEST_CASE("deeponet parameter count covers two independent head groups") {
  DeepOnetConfig c;
  c.branch_hidden = {130, 130, 130};
  c.trunk_hidden = {130, 130, 130};
  c.latent_dim = 130;
  auto mlp_params = [](std::vector<std::size_t> widths) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
      n += widths[i] * widths[i + 1] + widths[i + 1];
    return n;
  };
  const std::size_t branch = mlp_params({5, 130, 130, 130, 130});
  const std::size_t trunk = mlp_params({1, 130, 130, 130, 130});
  CHECK(param_count(RomConfig{c}) == 2 * (branch + trunk + 1));
}

TEST_CASE("fno parameter count covers lifting, layers and projection") {
  FnoConfig c;
  c.modes = 50;
  c.width = 16;
  c.n_layers = 3;
  c.projection_width = 32;
  const std::size_t expected = (6 * 16 + 16) +
                               3 * (2 * 16 * 16 * 50 + 16 * 16 + 16) +
                               (16 * 32 + 32) + (32 * 2 + 2);
  CHECK(param_count(RomConfig{c}) == expected);
}

TEST_CASE("model validation rejects a weight store of the wrong size") {
  auto m = make_model(DnnConfig{{4, 4}, "relu"}, 3);
  m.weights.pop_back();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

// =============================================================================
// dnn_forward
// =============================================================================

TEST_CASE("dnn with all-zero weights outputs (0,0)") {
  auto m = make_model(DnnConfig{{8, 8}, "relu"}, 4);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  auto out = dnn_forward(m, {0.1, 0.5, 0.9, 0.3, 0.7});
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
}

TEST_CASE("single-hidden-layer dnn matches hand-computed affine arithmetic") {
  // one hidden unit, identity-like wiring: h = relu(sum(x) + 1), out_q = q+1 scaled h
  DnnConfig c;
  c.hidden_widths = {1};
  RomModel m = make_model(c, 5);
  // layout: W1 [5x1], b1 [1], W2 [1x2], b2 [2]
  m.weights = {1, 1, 1, 1, 1, /*b1*/ 1.0, /*W2*/ 2.0, 3.0, /*b2*/ 0.25, -0.5};
  const std::array<double, 5> x{0.1, 0.2, 0.3, 0.4, 0.5};
  const double h = 0.1 + 0.2 + 0.3 + 0.4 + 0.5 + 1.0;
  auto out = dnn_forward(m, x);
  CHECK(out[0] == Catch::Approx(2.0 * h + 0.25).epsilon(1e-15));
  CHECK(out[1] == Catch::Approx(3.0 * h - 0.5).epsilon(1e-15));
}

TEST_CASE("dnn output is invariant under weight re-serialization") {
  auto m = make_model(DnnConfig{{16, 16}, "relu"}, 6);
  const std::array<double, 5> x{0.3, 0.8, 0.05, 0.61, 0.99};
  const auto before = dnn_forward(m, x);
  const auto path =
      (std::filesystem::temp_directory_path() / "opforge_model_rt.opfm").string();
  save_model(path, m);
  RomModel back = load_model(path);
  CHECK(back.weights == m.weights);  // bitwise
  const auto after = dnn_forward(back, x);
  CHECK(before == after);
  std::remove(path.c_str());
}

TEST_CASE("dnn rejects inputs outside the unit cube") {
  auto m = make_model(DnnConfig{{4}, "relu"}, 7);
  CHECK_THROWS_AS(dnn_forward(m, {1.5, 0.1, 0.1, 0.1, 0.1}), std::invalid_argument);
}

// =============================================================================
// deeponet_forward
// =============================================================================

TEST_CASE("deeponet dot product with a one-hot branch selects one trunk feature") {
  DeepOnetConfig c;
  c.branch_hidden = {3};
  c.trunk_hidden = {4};
  c.latent_dim = 3;
  RomModel m = make_model(c, 8);

  const auto layout = weight_layout(m.config);
  // Zero the first head's branch MLP entirely, then set its final bias to
  // the one-hot e_1: branch(x) == (0,1,0) for every x.
  std::fill(m.weights.begin(), m.weights.begin() + static_cast<long>(layout[4].offset),
            0.0);
  m.weights[layout[3].offset + 1] = 1.0;  // final branch bias -> e_1

  const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
  auto out = deeponet_forward(m, {0.2, 0.4, 0.6, 0.8, 1.0}, times);

  // trunk feature 1 evaluated by hand from the stored weights
  const auto& w = m.weights;
  const std::size_t w1 = layout[4].offset, b1 = layout[5].offset;
  const std::size_t w2 = layout[6].offset, b2 = layout[7].offset;
  const std::size_t fusion_bias = layout[8].offset;
  for (std::size_t j = 0; j < times.size(); ++j) {
    double hidden[4];
    for (int k = 0; k < 4; ++k)
      hidden[k] = std::max(0.0, times[j] * w[w1 + k] + w[b1 + k]);
    double feature = w[b2 + 1];
    for (int k = 0; k < 4; ++k) feature += hidden[k] * w[w2 + k * 3 + 1];
    CHECK(out[0][j] ==
          Catch::Approx(feature + w[fusion_bias]).margin(1e-14));
  }
}

TEST_CASE("deeponet with p=1, branch=2, trunk=3, bias 0 outputs 6") {
  DeepOnetConfig c;
  c.branch_hidden = {1};
  c.trunk_hidden = {1};
  c.latent_dim = 1;
  RomModel m = make_model(c, 9);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  const auto layout = weight_layout(m.config);
  m.weights[layout[3].offset] = 2.0;  // branch head bias -> branch == 2
  m.weights[layout[7].offset] = 3.0;  // trunk head bias  -> trunk == 3
  auto out = deeponet_forward(m, {0.5, 0.5, 0.5, 0.5, 0.5}, {0.1, 0.9});
  CHECK(out[0][0] == 6.0);
  CHECK(out[0][1] == 6.0);
  CHECK(out[1][0] == 0.0);  // second head untouched (all zero)
}

TEST_CASE("deeponet matches a naive dot-product oracle") {
  DeepOnetConfig c;
  c.branch_hidden = {6, 6};
  c.trunk_hidden = {5};
  c.latent_dim = 4;
  RomModel m = make_model(c, 10);
  const std::array<double, 5> x{0.15, 0.35, 0.55, 0.75, 0.95};
  const std::vector<double> times{0.0, 0.33, 0.66, 1.0};

  // oracle: run branch and trunk by explicit loops over the layout
  const auto layout = weight_layout(m.config);
  const auto& w = m.weights;
  auto run_mlp = [&](std::vector<double> in, std::size_t first_block,
                     std::size_t n_layers) {
    std::size_t blk = first_block;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto& wb = layout[blk];
      const auto& bb = layout[blk + 1];
      const std::size_t rows = wb.shape[0], cols = wb.shape[1];
      std::vector<double> out(cols, 0.0);
      for (std::size_t j = 0; j < cols; ++j) {
        double acc = w[bb.offset + j];
        for (std::size_t i = 0; i < rows; ++i)
          acc += in[i] * w[wb.offset + i * cols + j];
        out[j] = l + 1 < n_layers ? std::max(0.0, acc) : acc;
      }
      in = std::move(out);
      blk += 2;
    }
    return in;
  };

  auto out = deeponet_forward(m, x, times);
  for (std::size_t q = 0; q < 2; ++q) {
    // per head: 3 branch dense pairs (6 blocks) + 2 trunk pairs (4) + bias
    const std::size_t head_offset = q * 11;
    auto branch = run_mlp({x.begin(), x.end()}, head_offset, 3);
    for (std::size_t j = 0; j < times.size(); ++j) {
      auto trunk = run_mlp({times[j]}, head_offset + 6, 2);
      double dot = w[layout[head_offset + 10].offset];
      for (std::size_t k = 0; k < 4; ++k) dot += branch[k] * trunk[k];
      CHECK(std::abs(out[q][j] - dot) <= 1e-12 * std::max(1.0, std::abs(dot)));
    }
  }
}

TEST_CASE("deeponet output minus bias is exactly linear in the branch head") {
  DeepOnetConfig c;
  c.branch_hidden = {5};
  c.trunk_hidden = {5};
  c.latent_dim = 3;
  RomModel m = make_model(c, 11);
  const std::array<double, 5> x{0.1, 0.3, 0.5, 0.7, 0.9};
  const std::vector<double> times{0.2, 0.8};
  const auto base = deeponet_forward(m, x, times);

  // doubling the branch final layer (a power of two) scales the fused
  // output exactly; the fusion bias is zero after init
  const auto layout = weight_layout(m.config);
  RomModel scaled = m;
  for (std::size_t blk : {2, 3})  // final branch dense pair of head 0
    for (std::size_t i = 0; i < shape_numel(layout[blk].shape); ++i)
      scaled.weights[layout[blk].offset + i] *= 2.0;
  const auto twice = deeponet_forward(scaled, x, times);
  for (std::size_t j = 0; j < times.size(); ++j) {
    CHECK(twice[0][j] == 2.0 * base[0][j]);
    CHECK(twice[1][j] == base[1][j]);
  }
}

TEST_CASE("deeponet rejects empty time grids") {
  auto m = make_model(DeepOnetConfig{{4}, {4}, 2, "relu"}, 12);
  CHECK_THROWS_AS(deeponet_forward(m, {0.5, 0.5, 0.5, 0.5, 0.5}, {}),
                  std::invalid_argument);
}

// =============================================================================
// fno_forward
// =============================================================================

TEST_CASE("fno with zero spectral weights reduces to the pointwise path") {
  FnoConfig c;
  c.modes = 4;
  c.width = 3;
  c.n_layers = 2;
  c.grid_len = 10;
  c.fft_len = 16;
  c.projection_width = 2;
  RomModel m = make_model(c, 13);

  const auto layout = weight_layout(m.config);
  for (const auto& blk : layout)
    if (blk.role == BlockRole::spectral)
      std::fill(m.weights.begin() + static_cast<long>(blk.offset),
                m.weights.begin() + static_cast<long>(blk.offset + shape_numel(blk.shape)),
                0.0);

  const std::array<double, 5> x{0.2, 0.4, 0.6, 0.8, 1.0};
  auto out = fno_forward(m, x);

  // oracle: the same composition without any spectral term
  auto dense = [&](const std::vector<double>& in, const WeightBlock& wb,
                   const WeightBlock& bb) {
    const std::size_t rows = wb.shape[0], cols = wb.shape[1];
    std::vector<double> r(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = m.weights[bb.offset + j];
      for (std::size_t i = 0; i < rows; ++i)
        acc += in[i] * m.weights[wb.offset + i * cols + j];
      r[j] = acc;
    }
    return r;
  };
  auto gelu_scalar = [](double v) {
    return 0.5 * v * (1.0 + std::erf(v * 0.7071067811865475244));
  };

  for (std::size_t j = 0; j < c.grid_len; ++j) {
    std::vector<double> q{x[0], x[1], x[2], x[3], x[4],
                          (static_cast<double>(j) + 1.0) / static_cast<double>(c.grid_len)};
    q = dense(q, layout[0], layout[1]);  // lifting
    std::size_t blk = 2;
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      blk += 1;  // skip zeroed spectral block
      q = dense(q, layout[blk], layout[blk + 1]);
      blk += 2;
      for (auto& v : q) v = gelu_scalar(v);
    }
    q = dense(q, layout[blk], layout[blk + 1]);
    for (auto& v : q) v = gelu_scalar(v);
    q = dense(q, layout[blk + 2], layout[blk + 3]);
    CHECK(out[0][j] == Catch::Approx(q[0]).margin(1e-12));
    CHECK(out[1][j] == Catch::Approx(q[1]).margin(1e-12));
  }
}

TEST_CASE("fno batched forward equals per-sample forward") {
  FnoConfig c;
  c.modes = 6;
  c.width = 4;
  c.n_layers = 2;
  c.grid_len = 20;
  c.fft_len = 32;
  RomModel m = make_model(c, 14);

  std::vector<ProcessParams> samples;
  LhsDesign design;
  design.n_samples = 3;
  design.seed = 2;
  samples = lhs_sample(design);

  auto blocks = weight_tensors(m, nullptr);
  Tensor scaled = make_scaled_inputs(m.scaling.input_bounds, samples);
  Tensor grid = make_fno_grid_inputs(scaled, c.grid_len);
  Tensor batched = fno_forward_blocks(c, blocks, grid, 3, c.grid_len, c.fft_len);

  for (std::size_t b = 0; b < 3; ++b) {
    std::array<double, 5> x{};
    for (std::size_t i = 0; i < 5; ++i) x[i] = scaled[b * 5 + i];
    auto single = fno_forward(m, x);
    for (std::size_t j = 0; j < c.grid_len; ++j)
      for (std::size_t q = 0; q < 2; ++q)
        CHECK(std::abs(single[q][j] - batched[(b * c.grid_len + j) * 2 + q]) <= 1e-12);
  }
}

TEST_CASE("scalar heads take the per-QoI maximum") {
  std::array<std::vector<double>, 2> monotone{
      std::vector<double>{0.0, 0.5, 1.0, 2.0}, std::vector<double>{3.0, 3.0, 3.0, 3.0}};
  auto heads = scalar_heads(monotone);
  CHECK(heads[0] == 2.0);  // monotone series: last element
  CHECK(heads[1] == 3.0);  // constant series: the constant

  std::mt19937_64 rng(15);
  std::array<std::vector<double>, 2> random_series;
  for (auto& s : random_series)
    for (int i = 0; i < 50; ++i) s.push_back(uniform_in(rng, -5.0, 5.0));
  heads = scalar_heads(random_series);
  for (std::size_t q = 0; q < 2; ++q) {
    double best = random_series[q][0];
    for (double v : random_series[q]) best = std::max(best, v);  // linear scan
    CHECK(heads[q] == best);
  }
}

// =============================================================================
// differentiability of the full models
// =============================================================================

TEST_CASE("gradcheck: full dnn forward") {
  DnnConfig c;
  c.hidden_widths = {6, 5};
  RomModel m = make_model(c, 16);
  Tensor x({3, 5}, random_values(15, 17));
  // shift inputs into [0,1]
  std::vector<double> xv(x.values().begin(), x.values().end());
  for (auto& v : xv) v = 0.5 + 0.5 * v;
  Tensor xin({3, 5}, xv);

  std::vector<Shape> shapes;
  for (const auto& b : weight_layout(m.config)) shapes.push_back(b.shape);
  auto r = gradcheck::check(
      shapes,
      [&](const std::vector<Tensor>& blocks) {
        auto out = dnn_forward_blocks(c, blocks, xin);
        return mean(mul(out, out));
      },
      18, 1e-5);
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("gradcheck: full deeponet forward") {
  DeepOnetConfig c;
  c.branch_hidden = {5};
  c.trunk_hidden = {4};
  c.latent_dim = 3;
  Tensor xin({2, 5}, {0.1, 0.3, 0.5, 0.7, 0.9, 0.9, 0.7, 0.5, 0.3, 0.1});
  Tensor times({4, 1}, {0.1, 0.4, 0.7, 1.0});

  std::vector<Shape> shapes;
  for (const auto& b : weight_layout(RomConfig{c})) shapes.push_back(b.shape);
  auto r = gradcheck::check(
      shapes,
      [&](const std::vector<Tensor>& blocks) {
        auto out = deeponet_forward_blocks(c, blocks, xin, times);
        return add(mean(mul(out[0], out[0])), mean(mul(out[1], out[1])));
      },
      19, 1e-5);
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("gradcheck: full fno forward") {
  FnoConfig c;
  c.modes = 3;
  c.width = 3;
  c.n_layers = 2;
  c.grid_len = 8;
  c.fft_len = 8;
  c.projection_width = 3;
  Tensor xin({2, 5}, {0.1, 0.3, 0.5, 0.7, 0.9, 0.8, 0.6, 0.4, 0.2, 0.05});
  Tensor grid = make_fno_grid_inputs(xin, c.grid_len);

  std::vector<Shape> shapes;
  for (const auto& b : weight_layout(RomConfig{c})) shapes.push_back(b.shape);
  auto r = gradcheck::check(
      shapes,
      [&](const std::vector<Tensor>& blocks) {
        auto out = fno_forward_blocks(c, blocks, grid, 2, c.grid_len, c.fft_len);
        return mean(mul(out, out));
      },
      20, 1e-5);
  CHECK(r.max_rel_err <= 1e-4);
}

// =============================================================================
// persistence
// =============================================================================

TEST_CASE("save/load is the identity for every model kind") {
  const auto dir = std::filesystem::temp_directory_path();
  std::vector<RomModel> models;
  models.push_back(make_model(DnnConfig{{7, 9}, "relu"}, 21));
  models.push_back(make_model(DeepOnetConfig{{6, 6}, {5}, 4, "relu"}, 22));
  FnoConfig f;
  f.modes = 5;
  f.width = 4;
  f.n_layers = 2;
  models.push_back(make_model(f, 23));

  for (auto& m : models) {
    m.scaling.series_targets = m.kind() != RomKind::dnn;
    const auto path = (dir / ("opforge_rt_" +
                              std::string(rom_kind_name(m.kind())) + ".opfm"))
                          .string();
    save_model(path, m);
    RomModel back = load_model(path);
    CHECK(back.kind() == m.kind());
    CHECK(back.weights == m.weights);  // bitwise
    CHECK(back.scaling.series_targets == m.scaling.series_targets);
    CHECK(back.scaling.output_scaler.mean == m.scaling.output_scaler.mean);

    // save(load(x)) reproduces the bytes
    const auto path2 = path + ".2";
    save_model(path2, back);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)),
                   std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)),
                   std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    std::remove(path.c_str());
    std::remove(path2.c_str());
  }
}
