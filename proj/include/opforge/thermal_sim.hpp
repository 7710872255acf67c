#pragma once

// Desk-scale thermal solver: explicit finite differences on a fixed 2-D
// slab (scan direction x depth) with the moving hybrid heat source applied
// to the top two cell layers. Produces the two process QoIs per run: the
// cumulative ever-melted cell volume and the grid maximum temperature,
// sampled on a fixed 200-point output grid.
//
// Unit system: mm, ms, J, K. Material constants are stated in W-based units
// (J/s); the solver converts them to the per-ms time base once, up front.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "opforge/heat_source.hpp"

namespace opforge {

struct MaterialProps {
  double density = 7.95e-6;    // kg/mm^3
  double specific_heat = 500;  // J/(kg K)
  double conductivity = 0.015; // W/(mm K)
  double convection = 1e-5;    // W/(mm^2 K), top-surface film coefficient
  double t_ambient = 293.0;    // K
  double t_melt = 1700.0;      // K

  double volumetric_heat() const { return density * specific_heat; }  // J/(mm^3 K)
  double conductivity_ms() const { return conductivity * 1e-3; }      // J/(ms mm K)
  double convection_ms() const { return convection * 1e-3; }          // J/(ms mm^2 K)

  void validate() const {
    if (!(density > 0 && specific_heat > 0 && conductivity > 0 && convection > 0 &&
          t_ambient > 0 && t_melt > 0))
      throw std::invalid_argument("MaterialProps: all properties must be positive");
    if (!(t_melt > t_ambient))
      throw std::invalid_argument("MaterialProps: t_melt must exceed t_ambient");
  }
};

struct GridSpec {
  std::size_t nx = 96;             // cells along the scan direction
  std::size_t nz = 24;             // cells through the depth
  double dx = 0.05;                // mm
  double dz = 0.05;                // mm
  double scan_length = 2.0;        // mm
  std::size_t n_output_steps = 200;

  double cell_volume() const { return dx * dz * 1.0; }  // unit slab thickness, mm^3

  void validate() const {
    if (nx < 4 || nz < 3) throw std::invalid_argument("GridSpec: grid too small");
    if (!(dx > 0 && dz > 0 && scan_length > 0))
      throw std::invalid_argument("GridSpec: non-positive extent");
    if (static_cast<double>(nx) * dx < scan_length)
      throw std::invalid_argument("GridSpec: nx*dx must cover the scan length");
    if (n_output_steps < 1) throw std::invalid_argument("GridSpec: need output steps");
  }
};

/// One physics run: the parameter sample and the two 200-point QoI series.
struct SimulationRecord {
  ProcessParams params;
  std::vector<double> time_grid;  // ms
  std::vector<double> v_bead;     // mm^3, monotone non-decreasing
  std::vector<double> t_mp;       // K, grid maximum per output step
  bool melted = false;
};

struct SubstepPlan {
  double dt = 0.0;          // ms
  std::size_t count = 0;    // sub-steps per output step
  double dt_limit = 0.0;    // ms, stability bound
};

/// Explicit-diffusion stability bound with a 0.25 safety factor:
/// dt <= 0.25 * min(dx,dz)^2 * rho*c / k (per-ms conductivity), and the
/// even sub-step division of one output step that honors it.
inline SubstepPlan stability_substeps(const MaterialProps& mat, const GridSpec& grid,
                                      double output_dt) {
  mat.validate();
  grid.validate();
  if (!(output_dt > 0)) throw std::invalid_argument("stability_substeps: output_dt <= 0");
  const double h = std::min(grid.dx, grid.dz);
  const double limit = 0.25 * h * h * mat.volumetric_heat() / mat.conductivity_ms();
  SubstepPlan plan;
  plan.dt_limit = limit;
  plan.count = static_cast<std::size_t>(std::ceil(output_dt / limit));
  if (plan.count == 0) plan.count = 1;
  plan.dt = output_dt / static_cast<double>(plan.count);
  return plan;
}

struct SimOptions {
  bool keep_snapshots = false;  // store the T field at every output step
  bool zero_source = false;     // equilibrium checks: suppress the laser term
  std::size_t substep_cap = 200000;
};

struct SimulationDetail {
  SimulationRecord record;
  std::vector<std::vector<double>> snapshots;   // per output step when requested
  std::vector<double> energy_in;                // J injected per output step
  SubstepPlan plan;
  double track_origin_y = 0.0;
};

inline SimulationDetail run_simulation_detailed(const ProcessParams& pp,
                                                const MaterialProps& mat,
                                                const GridSpec& grid,
                                                const SimOptions& opts = {}) {
  pp.validate();
  mat.validate();
  grid.validate();

  const std::size_t nx = grid.nx, nz = grid.nz, steps = grid.n_output_steps;
  const double total_ms = grid.scan_length / pp.speed;
  const double out_dt = total_ms / static_cast<double>(steps);
  const SubstepPlan plan = stability_substeps(mat, grid, out_dt);
  if (plan.count > opts.substep_cap)
    throw std::runtime_error("run_simulation: stability sub-step cap exceeded; "
                             "grid or material configuration is unworkable");

  // Track centered inside the slab; beam travels along +y on the top surface.
  const double origin_y = 0.5 * (static_cast<double>(nx) * grid.dx - grid.scan_length);
  const ScanPath path = scan_path_along_y(pp, origin_y);

  const double rc = mat.volumetric_heat();
  const double alpha = mat.conductivity_ms() / rc;     // mm^2/ms
  const double ax = alpha / (grid.dx * grid.dx);
  const double az = alpha / (grid.dz * grid.dz);
  const double conv = mat.convection_ms() / (rc * grid.dz);
  const double cell_vol = grid.cell_volume();
  constexpr std::size_t kDepositRows = 2;  // top layers that absorb the laser

  std::vector<double> temp(nx * nz, mat.t_ambient);
  std::vector<double> next(nx * nz, mat.t_ambient);
  std::vector<double> source(nx * kDepositRows, 0.0);  // K/ms equivalent, row-major
  std::vector<char> ever_melted(nx * nz, 0);

  SimulationDetail detail;
  detail.plan = plan;
  detail.track_origin_y = origin_y;
  auto& rec = detail.record;
  rec.params = pp;
  rec.time_grid.resize(steps);
  rec.v_bead.resize(steps);
  rec.t_mp.resize(steps);
  detail.energy_in.assign(steps, 0.0);

  std::size_t melted_cells = 0;
  const double dt = plan.dt;

  for (std::size_t s = 0; s < steps; ++s) {
    double step_energy = 0.0;
    for (std::size_t sub = 0; sub < plan.count; ++sub) {
      const double t = (static_cast<double>(s) * static_cast<double>(plan.count) +
                        static_cast<double>(sub)) *
                       dt;

      if (!opts.zero_source) {
        for (std::size_t k = 0; k < kDepositRows; ++k) {
          const double z = -(static_cast<double>(k) + 0.5) * grid.dz;
          for (std::size_t i = 0; i < nx; ++i) {
            const Vec3 pos{0.0, (static_cast<double>(i) + 0.5) * grid.dx, z};
            const double q_wmm3 = hybrid_source(pos, t, dt, pp, path);
            const double q_ms = q_wmm3 * 1e-3;  // J/(ms mm^3)
            source[k * nx + i] = q_ms / rc;
            step_energy += q_ms * cell_vol * dt;
          }
        }
      }

      for (std::size_t k = 0; k + 1 < nz; ++k) {  // bottom row is Dirichlet
        for (std::size_t i = 0; i < nx; ++i) {
          const std::size_t c = k * nx + i;
          const double tc = temp[c];
          // adiabatic lateral boundaries: mirror the cell itself
          const double tl = i > 0 ? temp[c - 1] : tc;
          const double tr = i + 1 < nx ? temp[c + 1] : tc;
          const double tb = temp[c + nx];
          double dT = ax * (tl - 2.0 * tc + tr) + az * (tb - tc);
          if (k > 0)
            dT += az * (temp[c - nx] - tc);
          else
            dT += conv * (mat.t_ambient - tc);  // convective top face
          if (!opts.zero_source && k < kDepositRows) dT += source[k * nx + i];
          next[c] = tc + dt * dT;
        }
      }
      for (std::size_t i = 0; i < nx; ++i) next[(nz - 1) * nx + i] = mat.t_ambient;
      temp.swap(next);
    }

    double t_max = temp[0];
    for (std::size_t c = 0; c < nx * nz; ++c) {
      const double tc = temp[c];
      if (!std::isfinite(tc))
        throw std::runtime_error("run_simulation: non-finite temperature at output step " +
                                 std::to_string(s));
      if (tc > t_max) t_max = tc;
      if (!ever_melted[c] && tc >= mat.t_melt) {
        ever_melted[c] = 1;
        ++melted_cells;
      }
    }
    rec.time_grid[s] = (static_cast<double>(s) + 1.0) * out_dt;
    rec.t_mp[s] = t_max;
    rec.v_bead[s] = static_cast<double>(melted_cells) * cell_vol;
    if (t_max >= mat.t_melt) rec.melted = true;
    detail.energy_in[s] = step_energy;
    if (opts.keep_snapshots) detail.snapshots.push_back(temp);
  }

  return detail;
}

inline SimulationRecord run_simulation(const ProcessParams& pp, const MaterialProps& mat,
                                       const GridSpec& grid) {
  return run_simulation_detailed(pp, mat, grid).record;
}

}  // namespace opforge
