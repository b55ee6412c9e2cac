#pragma once

#include <vector>

#include "ctsplat/geometry.hpp"

namespace ctsplat {

// One additive ellipsoid. Motion (when any amplitude is nonzero) is a
// sinusoid in normalized time t in [0,1): semi-axes scale by
// 1 + scale_amp * sin(2*pi*t/period) and the center shifts by
// trans_amp * sin(2*pi*t/period).
struct EllipsoidSpec {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();
  double rot_z = 0.0;  // rotation about z, radians
  double density = 0.0;

  Vec3 scale_amp = Vec3::Zero();
  Vec3 trans_amp = Vec3::Zero();
  double period = 1.0;

  bool has_motion() const {
    return scale_amp.squaredNorm() > 0.0 || trans_amp.squaredNorm() > 0.0;
  }
  // Containment test against the ellipsoid deformed to time t.
  bool contains(const Vec3& p, double t) const;
};

struct PhantomSpec {
  std::vector<EllipsoidSpec> ellipsoids;

  void validate() const;
  bool has_motion() const;
};

// Voxel value = sum of densities of the ellipsoids (at time t) containing the
// voxel center. t is ignored by motionless specs.
Volume make_phantom(const PhantomSpec& spec, const VolumeGrid& grid, double t = 0.0);

// Ten-ellipsoid head phantom with nonnegative additive densities, scaled to
// fit in the unit ball.
PhantomSpec phantom_head();
// phantom_head plus a "breathing" ellipsoid whose semi-axes and position
// oscillate over the cycle.
PhantomSpec phantom_breathing();

}  // namespace ctsplat
