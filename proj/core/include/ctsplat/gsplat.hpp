#pragma once

#include <vector>

#include "ctsplat/geometry.hpp"

namespace ctsplat {

// One anisotropic kernel. quat is (w, x, y, z); covariance factors as
// Sigma = R * diag(exp(2*log_scale)) * R^T. rho_raw is the pre-activation
// density parameter; the rendered amplitude is softplus(rho_raw).
struct GaussianPrimitive {
  Vec3 mu = Vec3::Zero();
  Vec4 quat = Vec4(1.0, 0.0, 0.0, 0.0);
  Vec3 log_scale = Vec3::Zero();
  double rho_raw = 0.0;

  double rho() const { return softplus(rho_raw); }
};

struct GaussianSet {
  std::vector<GaussianPrimitive> prims;

  size_t size() const { return prims.size(); }
  bool empty() const { return prims.empty(); }
};

Mat3 quat_to_rotation(const Vec4& quat);
// Sigma = R * diag(exp(2*log_scale)) * R^T (quat renormalized defensively).
Mat3 covariance(const Vec4& quat, const Vec3& log_scale);

// Rays whose squared Mahalanobis distance from the primitive exceeds this
// are culled to zero (contribution < 1.2e-2 of peak).
inline constexpr double kCullMahalanobisSq = 9.0;
// Per-axis half-width, in standard deviations, of the voxelize evaluation
// box. 4 sigma keeps the truncated mass below 2e-4 of the total.
inline constexpr double kVoxelizeSigma = 4.0;

// Per-primitive quantities reused across many rays/voxels.
struct PrimitiveFactors {
  Mat3 R;
  Vec3 exp2s;    // e^{2 s_k}
  Mat3 M;        // Sigma^{-1}
  Vec4 q_unit;
  double q_norm = 1.0;
  double rho = 0.0;        // softplus(rho_raw)
  double sigmoid = 0.0;    // d rho / d rho_raw
  bool degenerate = false; // condition number above 1e12
};
PrimitiveFactors factor_primitive(const GaussianPrimitive& g);

struct PrimitiveGrad {
  Vec3 mu = Vec3::Zero();
  Vec4 quat = Vec4::Zero();
  Vec3 log_scale = Vec3::Zero();
  double rho_raw = 0.0;
};

// Closed form of the infinite-limit line integral
//   integral rho * exp(-0.5 (x-mu)^T Sigma^-1 (x-mu)) dt  along x = o + t d:
// with delta = o - mu, a = d^T M d, b = d^T M delta, c = delta^T M delta
// (M = Sigma^-1) the value is rho * sqrt(2 pi / a) * exp(-0.5 (c - b^2/a)).
// Culled or degenerate primitives contribute 0; degenerate ones bump the
// diagnostic counter.
double ray_integral(const GaussianPrimitive& g, const PrimitiveFactors& f, const Ray& ray);
double ray_integral(const GaussianPrimitive& g, const Ray& ray);

// Accumulates upstream * d(ray_integral)/d(param) into `grad`, chaining
// through Sigma = R S S^T R^T, softplus, and quaternion normalization.
// Returns the integral value.
double ray_integral_backward(const GaussianPrimitive& g, const PrimitiveFactors& f, const Ray& ray,
                             double upstream, PrimitiveGrad& grad);
double ray_integral_backward(const GaussianPrimitive& g, const Ray& ray, double upstream,
                             PrimitiveGrad& grad);

// One primitive evaluated at a point, and its parameter gradient (the
// voxelization kernel).
double gaussian_value(const GaussianPrimitive& g, const PrimitiveFactors& f, const Vec3& x);
double gaussian_value(const GaussianPrimitive& g, const Vec3& x);
double gaussian_value_backward(const GaussianPrimitive& g, const PrimitiveFactors& f, const Vec3& x,
                               double upstream, PrimitiveGrad& grad);

// Count of degenerate-covariance primitive evaluations since the last call.
uint64_t take_degenerate_count();

// Conservative detector-pixel rectangle (half-open) that contains every
// pixel whose ray survives the Mahalanobis cull for this primitive.
struct PixelRect {
  int u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  bool empty() const { return u0 >= u1 || v0 >= v1; }
};
PixelRect detector_footprint(const GaussianPrimitive& g, const ScanGeometry& geom, int view);

// Pixel (u,v) = sum_i ray_integral(g_i, ray_for_pixel(geom, view, u, v)).
// Uses per-view footprint bucketing; matches the no-acceleration sum
// bit-for-bit because the footprint is conservative w.r.t. the cull.
Image render_projection(const GaussianSet& set, const ScanGeometry& geom, int view);

// Voxel value = sum_i G_i(voxel center), each primitive evaluated inside its
// kVoxelizeSigma bounding box.
Volume voxelize(const GaussianSet& set, const VolumeGrid& grid);

}  // namespace ctsplat
