#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "opforge/rng.hpp"
#include "opforge/thermal_sim.hpp"

using namespace opforge;

namespace {

// Coarser grid for the randomized checks; keeps each run ~1 ms.
GridSpec fast_grid() {
  GridSpec g;
  g.nx = 48;
  g.nz = 12;
  g.dx = 0.1;
  g.dz = 0.1;
  g.scan_length = 2.0;
  return g;
}

ProcessParams random_params(std::mt19937_64& rng) {
  ProcessParams pp;
  pp.power = uniform_in(rng, 250.0, 400.0);
  pp.speed = uniform_in(rng, 0.004, 0.020);
  pp.radius = uniform_in(rng, 0.25, 0.40);
  pp.efficiency = uniform_in(rng, 0.3, 0.4);
  pp.scaling = uniform_in(rng, 1.0, 2.0);
  return pp;
}

}  // namespace

TEST_CASE("tiny laser power never melts and produces zero bead volume") {
  ProcessParams pp;
  pp.power = 1.0;  // far outside Table-1 range, test-only
  auto rec = run_simulation(pp, MaterialProps{}, fast_grid());
  CHECK_FALSE(rec.melted);
  for (double v : rec.v_bead) CHECK(v == 0.0);
  for (double t : rec.t_mp) CHECK(t >= MaterialProps{}.t_ambient);
}

TEST_CASE("bead volume is monotone non-decreasing on randomized runs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    auto rec = run_simulation(random_params(rng), MaterialProps{}, fast_grid());
    for (std::size_t i = 0; i + 1 < rec.v_bead.size(); ++i)
      REQUIRE(rec.v_bead[i + 1] >= rec.v_bead[i]);
    CHECK(rec.melted == (*std::max_element(rec.t_mp.begin(), rec.t_mp.end()) >=
                         MaterialProps{}.t_melt));
  }
}

TEST_CASE("bead volume matches a replay recount over stored snapshots") {
  SimOptions opts;
  opts.keep_snapshots = true;
  MaterialProps mat;
  GridSpec grid = fast_grid();
  auto detail = run_simulation_detailed(ProcessParams{}, mat, grid, opts);
  const auto& rec = detail.record;
  REQUIRE(detail.snapshots.size() == grid.n_output_steps);

  std::vector<char> melted(grid.nx * grid.nz, 0);
  for (std::size_t s = 0; s < detail.snapshots.size(); ++s) {
    for (std::size_t c = 0; c < melted.size(); ++c)
      if (detail.snapshots[s][c] >= mat.t_melt) melted[c] = 1;
    const auto count = static_cast<double>(
        std::count(melted.begin(), melted.end(), static_cast<char>(1)));
    REQUIRE(rec.v_bead[s] == count * grid.cell_volume());
  }
  CHECK(rec.v_bead.back() > 0.0);
}

TEST_CASE("stability bound scales inversely with conductivity") {
  MaterialProps mat;
  GridSpec grid;
  auto base = stability_substeps(mat, grid, 1.0);
  MaterialProps doubled = mat;
  doubled.conductivity *= 2.0;
  auto half = stability_substeps(doubled, grid, 1.0);
  CHECK(half.dt_limit == Catch::Approx(0.5 * base.dt_limit).epsilon(1e-14));
}

TEST_CASE("stability bound instantiates the explicit-diffusion formula") {
  MaterialProps mat;
  GridSpec grid;
  grid.dx = grid.dz = 0.08;
  auto plan = stability_substeps(mat, grid, 2.0);
  const double expected =
      0.25 * grid.dx * grid.dx * mat.volumetric_heat() / mat.conductivity_ms();
  CHECK(plan.dt_limit == expected);
  CHECK(plan.dt <= plan.dt_limit);
  CHECK(plan.dt * static_cast<double>(plan.count) == Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("zero-source run stays at ambient temperature exactly") {
  SimOptions opts;
  opts.zero_source = true;
  opts.keep_snapshots = true;
  MaterialProps mat;
  auto detail = run_simulation_detailed(ProcessParams{}, mat, fast_grid(), opts);
  for (double t : detail.record.t_mp) CHECK(t == mat.t_ambient);
  for (const auto& snap : detail.snapshots)
    for (double t : snap) REQUIRE(t == mat.t_ambient);
  for (double v : detail.record.v_bead) CHECK(v == 0.0);
}

TEST_CASE("recorded injected energy matches an independent source recount") {
  MaterialProps mat;
  GridSpec grid = fast_grid();
  ProcessParams pp;
  auto detail = run_simulation_detailed(pp, mat, grid);

  const double total_ms = grid.scan_length / pp.speed;
  const double out_dt = total_ms / static_cast<double>(grid.n_output_steps);
  const auto plan = stability_substeps(mat, grid, out_dt);
  const ScanPath path = scan_path_along_y(pp, detail.track_origin_y);
  const double cell_vol = grid.cell_volume();

  for (std::size_t s : {std::size_t{0}, std::size_t{40}, std::size_t{199}}) {
    double energy = 0.0;
    for (std::size_t sub = 0; sub < plan.count; ++sub) {
      const double t =
          (static_cast<double>(s) * static_cast<double>(plan.count) + sub) * plan.dt;
      for (std::size_t k = 0; k < 2; ++k) {
        const double z = -(static_cast<double>(k) + 0.5) * grid.dz;
        for (std::size_t i = 0; i < grid.nx; ++i) {
          const Vec3 pos{0.0, (static_cast<double>(i) + 0.5) * grid.dx, z};
          energy += hybrid_source(pos, t, plan.dt, pp, path) * 1e-3 * cell_vol * plan.dt;
        }
      }
    }
    CHECK(std::abs(detail.energy_in[s] - energy) <=
          1e-8 * std::max(1e-300, std::abs(energy)));
  }
}

TEST_CASE("raising the scaling factor never lowers the final QoIs") {
  ProcessParams low;
  low.scaling = 1.1;
  ProcessParams high;
  high.scaling = 1.7;
  auto g = fast_grid();
  auto a = run_simulation(low, MaterialProps{}, g);
  auto b = run_simulation(high, MaterialProps{}, g);
  CHECK(b.v_bead.back() >= a.v_bead.back());
  CHECK(*std::max_element(b.t_mp.begin(), b.t_mp.end()) >=
        *std::max_element(a.t_mp.begin(), a.t_mp.end()));
}

TEST_CASE("identical inputs give bitwise-identical records") {
  auto g = fast_grid();
  auto a = run_simulation(ProcessParams{}, MaterialProps{}, g);
  auto b = run_simulation(ProcessParams{}, MaterialProps{}, g);
  CHECK(a.time_grid == b.time_grid);
  CHECK(a.v_bead == b.v_bead);
  CHECK(a.t_mp == b.t_mp);
  CHECK(a.melted == b.melted);
}

TEST_CASE("configuration guards") {
  GridSpec bad;
  bad.scan_length = 10.0;  // longer than nx*dx
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  SimOptions opts;
  opts.substep_cap = 2;  // force the cap to trip
  ProcessParams slow;
  slow.speed = 0.004;
  CHECK_THROWS_AS(run_simulation_detailed(slow, MaterialProps{}, GridSpec{}, opts),
                  std::runtime_error);

  MaterialProps inverted;
  inverted.t_melt = 100.0;
  CHECK_THROWS_AS(inverted.validate(), std::invalid_argument);
}
