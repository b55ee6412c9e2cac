#include "ctsplat/phantom.hpp"

#include <cmath>

namespace ctsplat {

bool EllipsoidSpec::contains(const Vec3& p, double t) const {
  Vec3 axes = semi_axes;
  Vec3 c = center;
  if (has_motion()) {
    const double s = std::sin(2.0 * M_PI * t / period);
    axes = semi_axes.cwiseProduct(Vec3::Ones() + s * scale_amp);
    c = center + s * trans_amp;
  }
  // Rotate into the ellipsoid frame (rotation about z only).
  const double ca = std::cos(rot_z), sa = std::sin(rot_z);
  const Vec3 d = p - c;
  const Vec3 local(ca * d.x() + sa * d.y(), -sa * d.x() + ca * d.y(), d.z());
  const Vec3 q = local.cwiseQuotient(axes);
  return q.squaredNorm() <= 1.0;
}

void PhantomSpec::validate() const {
  for (const auto& e : ellipsoids) {
    if (!(e.semi_axes.x() > 0.0 && e.semi_axes.y() > 0.0 && e.semi_axes.z() > 0.0))
      throw ArgumentError("PhantomSpec: semi-axes must be > 0");
    if (e.density < 0.0) throw ArgumentError("PhantomSpec: densities must be >= 0");
    if (e.has_motion() && !(e.period > 0.0))
      throw ArgumentError("PhantomSpec: motion period must be > 0");
  }
}

bool PhantomSpec::has_motion() const {
  for (const auto& e : ellipsoids)
    if (e.has_motion()) return true;
  return false;
}

Volume make_phantom(const PhantomSpec& spec, const VolumeGrid& grid, double t) {
  spec.validate();
  grid.validate();
  Volume vol(grid);
  const int nx = grid.nx, ny = grid.ny, nz = grid.nz;
#pragma omp parallel for schedule(static)
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const Vec3 p = grid.voxel_center(ix, iy, iz);
        double v = 0.0;
        for (const auto& e : spec.ellipsoids)
          if (e.contains(p, t)) v += e.density;
        vol.at(ix, iy, iz) = v;
      }
    }
  }
  return vol;
}

namespace {
EllipsoidSpec ell(Vec3 c, Vec3 ax, double rot_deg, double den) {
  EllipsoidSpec e;
  e.center = c;
  e.semi_axes = ax;
  e.rot_z = rot_deg * M_PI / 180.0;
  e.density = den;
  return e;
}
}  // namespace

PhantomSpec phantom_head() {
  // Layered head-like phantom. All densities additive and nonnegative so the
  // per-voxel containment sum stays an exact oracle.
  PhantomSpec s;
  s.ellipsoids = {
      ell({0.0, 0.0, 0.0}, {0.69, 0.90, 0.82}, 0.0, 0.20),       // outer shell
      ell({0.0, -0.02, 0.0}, {0.62, 0.82, 0.75}, 0.0, 0.10),     // brain
      ell({-0.22, 0.0, -0.20}, {0.15, 0.30, 0.22}, -18.0, 0.12), // left lobe
      ell({0.22, 0.0, -0.20}, {0.13, 0.28, 0.22}, 18.0, 0.12),   // right lobe
      ell({0.0, 0.32, -0.12}, {0.20, 0.11, 0.16}, 0.0, 0.15),
      ell({0.0, 0.08, 0.22}, {0.045, 0.05, 0.05}, 0.0, 0.25),
      ell({0.0, -0.10, 0.28}, {0.045, 0.045, 0.045}, 0.0, 0.25),
      ell({-0.08, -0.55, 0.0}, {0.046, 0.025, 0.05}, 0.0, 0.30),
      ell({0.06, -0.55, 0.0}, {0.023, 0.035, 0.05}, -20.0, 0.30),
      ell({0.0, 0.10, -0.50}, {0.056, 0.04, 0.10}, 75.0, 0.22),
  };
  return s;
}

PhantomSpec phantom_breathing() {
  PhantomSpec s = phantom_head();
  EllipsoidSpec lung = ell({0.0, -0.30, -0.18}, {0.24, 0.17, 0.26}, 0.0, 0.28);
  lung.scale_amp = {0.22, 0.22, 0.34};
  lung.trans_amp = {0.0, 0.05, 0.09};
  lung.period = 1.0;
  s.ellipsoids.push_back(lung);
  return s;
}

}  // namespace ctsplat
