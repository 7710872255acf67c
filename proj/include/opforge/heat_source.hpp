#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace opforge {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double c) const { return {x * c, y * c, z * c}; }
  double norm2() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm2()); }
};

/// The five laser inputs of the thermal model. Units: W, mm/ms, mm, -, -.
struct ProcessParams {
  double power = 300.0;       // P
  double speed = 0.01058;     // scanning speed
  double radius = 0.3;        // effective beam radius
  double efficiency = 0.36;   // laser efficiency coefficient
  double scaling = 1.6;       // equipment-related scaling factor

  void validate() const {
    if (!(power > 0.0 && speed > 0.0 && radius > 0.0 && efficiency > 0.0 &&
          scaling > 0.0))
      throw std::invalid_argument("ProcessParams: all inputs must be strictly positive");
  }
};

/// Straight-line scan: position(t) = origin + direction * speed * t.
struct ScanPath {
  Vec3 origin{0.0, 0.0, 0.0};
  Vec3 direction{0.0, 1.0, 0.0};  // unit vector
  double speed = 0.01058;         // mm/ms

  Vec3 position(double t) const { return origin + direction * (speed * t); }

  void validate() const {
    if (std::abs(direction.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("ScanPath: direction must be a unit vector");
    if (speed < 0.0) throw std::invalid_argument("ScanPath: negative speed");
  }
};

inline ScanPath scan_path_along_y(const ProcessParams& pp, double origin_y = 0.0) {
  return ScanPath{{0.0, origin_y, 0.0}, {0.0, 1.0, 0.0}, pp.speed};
}

/// Gaussian point heat source, W/mm^3:
///   (2 a e P / (pi r^3)) * exp(-2 |x - p(t)|^2 / r^2)
inline double point_source(const Vec3& x, double t, const ProcessParams& pp,
                           const ScanPath& path) {
  const double r2 = pp.radius * pp.radius;
  const double d2 = (x - path.position(t)).norm2();
  const double peak =
      2.0 * pp.scaling * pp.efficiency * pp.power / (std::numbers::pi * r2 * pp.radius);
  return peak * std::exp(-2.0 * d2 / r2);
}

namespace quad_detail {

// 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<std::array<double, 2>, 16> kGauss16 = {{
    {-0.9894009349916499, 0.027152459411754037},
    {-0.9445750230732326, 0.062253523938647706},
    {-0.8656312023878318, 0.09515851168249259},
    {-0.755404408355003, 0.12462897125553403},
    {-0.6178762444026438, 0.14959598881657676},
    {-0.45801677765722737, 0.16915651939500262},
    {-0.2816035507792589, 0.1826034150449236},
    {-0.09501250983763745, 0.18945061045506859},
    {0.09501250983763745, 0.18945061045506859},
    {0.2816035507792589, 0.1826034150449236},
    {0.45801677765722737, 0.16915651939500262},
    {0.6178762444026438, 0.14959598881657676},
    {0.755404408355003, 0.12462897125553403},
    {0.8656312023878318, 0.09515851168249259},
    {0.9445750230732326, 0.062253523938647706},
    {0.9894009349916499, 0.027152459411754037},
}};

}  // namespace quad_detail

/// Gaussian line heat source, W/mm^3: the time average of the point source
/// over [t0, t0+dt], by 16-point Gauss-Legendre quadrature. A stationary
/// beam short-circuits to the (time-constant) point source.
inline double line_source(const Vec3& x, double t0, double dt, const ProcessParams& pp,
                          const ScanPath& path) {
  if (!(dt > 0.0)) throw std::invalid_argument("line_source: dt must be positive");
  if (path.speed == 0.0) return point_source(x, t0, pp, path);
  const double mid = t0 + 0.5 * dt;
  const double half = 0.5 * dt;
  double acc = 0.0;
  for (const auto& [node, weight] : quad_detail::kGauss16)
    acc += weight * point_source(x, mid + half * node, pp, path);
  return 0.5 * acc;  // (1/dt) * (dt/2) * sum w_i f_i
}

/// Hybrid switching rule: when the step would let the moving point source
/// skip material (dt > r/v) use the line source, otherwise the point source
/// evaluated at the midpoint of the step.
inline double hybrid_source(const Vec3& x, double t0, double dt, const ProcessParams& pp,
                            const ScanPath& path) {
  if (!(dt > 0.0)) throw std::invalid_argument("hybrid_source: dt must be positive");
  if (path.speed > 0.0 && dt > pp.radius / path.speed)
    return line_source(x, t0, dt, pp, path);
  return point_source(x, t0 + 0.5 * dt, pp, path);
}

}  // namespace opforge
