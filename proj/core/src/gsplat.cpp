#include "ctsplat/gsplat.hpp"

#include <atomic>
#include <cmath>

namespace ctsplat {

namespace {
std::atomic<uint64_t> g_degenerate{0};

constexpr double kTwoPi = 2.0 * M_PI;
// exp(2*(s_max - s_min)) > 1e12  <=>  s_max - s_min > 0.5*ln(1e12)
constexpr double kDegenerateLogSpread = 0.5 * 27.631021115928547;

// Accumulates the chain from dv/dM (M = Sigma^{-1}, entries treated
// independently) into log_scale and the raw quaternion.
void chain_sigma_inv(const Mat3& G_M, const PrimitiveFactors& f, PrimitiveGrad& grad) {
  const Mat3 G_sigma = -f.M * G_M * f.M;
  const Mat3 G_R = (G_sigma + G_sigma.transpose()) * f.R * f.exp2s.asDiagonal();
  for (int k = 0; k < 3; ++k) {
    const Vec3 rk = f.R.col(k);
    grad.log_scale[k] += 2.0 * f.exp2s[k] * rk.dot(G_sigma * rk);
  }

  const double w = f.q_unit[0], x = f.q_unit[1], y = f.q_unit[2], z = f.q_unit[3];
  Mat3 dR[4];
  dR[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  dR[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  dR[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  dR[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  Vec4 g_unit;
  for (int j = 0; j < 4; ++j) g_unit[j] = 2.0 * (G_R.array() * dR[j].array()).sum();
  // Through normalization: dq = (I - q q^T) g / |q|.
  grad.quat += (g_unit - f.q_unit * f.q_unit.dot(g_unit)) / f.q_norm;
}

bool mark_degenerate() {
  g_degenerate.fetch_add(1, std::memory_order_relaxed);
  return true;
}

}  // namespace

Mat3 quat_to_rotation(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Mat3 covariance(const Vec4& quat, const Vec3& log_scale) {
  const Vec4 q = quat.normalized();
  const Mat3 R = quat_to_rotation(q);
  Vec3 d;
  for (int k = 0; k < 3; ++k) d[k] = std::exp(2.0 * log_scale[k]);
  return R * d.asDiagonal() * R.transpose();
}

PrimitiveFactors factor_primitive(const GaussianPrimitive& g) {
  PrimitiveFactors f;
  f.q_norm = g.quat.norm();
  f.q_unit = g.quat / f.q_norm;
  f.R = quat_to_rotation(f.q_unit);
  Vec3 exp_m2s;
  for (int k = 0; k < 3; ++k) {
    f.exp2s[k] = std::exp(2.0 * g.log_scale[k]);
    exp_m2s[k] = 1.0 / f.exp2s[k];
  }
  f.M = f.R * exp_m2s.asDiagonal() * f.R.transpose();
  f.rho = softplus(g.rho_raw);
  f.sigmoid = logistic(g.rho_raw);
  const double spread = g.log_scale.maxCoeff() - g.log_scale.minCoeff();
  f.degenerate = !(spread < kDegenerateLogSpread) || !f.M.allFinite();
  return f;
}

uint64_t take_degenerate_count() { return g_degenerate.exchange(0); }

double ray_integral(const GaussianPrimitive& g, const PrimitiveFactors& f, const Ray& ray) {
  if (f.degenerate) return mark_degenerate(), 0.0;
  const Vec3 delta = ray.origin - g.mu;
  const Vec3 Md = f.M * ray.dir;
  const double a = ray.dir.dot(Md);
  const double b = Md.dot(delta);
  const double c = delta.dot(f.M * delta);
  const double mahal_sq = std::max(0.0, c - b * b / a);
  if (mahal_sq > kCullMahalanobisSq) return 0.0;
  return f.rho * std::sqrt(kTwoPi / a) * std::exp(-0.5 * mahal_sq);
}

double ray_integral(const GaussianPrimitive& g, const Ray& ray) {
  return ray_integral(g, factor_primitive(g), ray);
}

double ray_integral_backward(const GaussianPrimitive& g, const PrimitiveFactors& f, const Ray& ray,
                             double upstream, PrimitiveGrad& grad) {
  if (f.degenerate) return mark_degenerate(), 0.0;
  const Vec3 delta = ray.origin - g.mu;
  const Vec3 Md = f.M * ray.dir;
  const Vec3 Mdelta = f.M * delta;
  const double a = ray.dir.dot(Md);
  const double b = ray.dir.dot(Mdelta);
  const double c = delta.dot(Mdelta);
  const double mahal_sq = std::max(0.0, c - b * b / a);
  if (mahal_sq > kCullMahalanobisSq) return 0.0;

  const double kfac = std::sqrt(kTwoPi / a);
  const double efac = std::exp(-0.5 * mahal_sq);
  const double value = f.rho * kfac * efac;

  grad.rho_raw += upstream * kfac * efac * f.sigmoid;

  const double common = upstream * value;
  const double va = -0.5 * common * (1.0 / a + (b * b) / (a * a));
  const double vb = common * b / a;
  const double vc = -0.5 * common;

  grad.mu -= vb * Md + 2.0 * vc * Mdelta;

  const Mat3 G_M = va * ray.dir * ray.dir.transpose() + vb * ray.dir * delta.transpose() +
                   vc * delta * delta.transpose();
  chain_sigma_inv(G_M, f, grad);
  return value;
}

double ray_integral_backward(const GaussianPrimitive& g, const Ray& ray, double upstream,
                             PrimitiveGrad& grad) {
  return ray_integral_backward(g, factor_primitive(g), ray, upstream, grad);
}

double gaussian_value(const GaussianPrimitive& g, const PrimitiveFactors& f, const Vec3& x) {
  if (f.degenerate) return mark_degenerate(), 0.0;
  const Vec3 d = x - g.mu;
  return f.rho * std::exp(-0.5 * d.dot(f.M * d));
}

double gaussian_value(const GaussianPrimitive& g, const Vec3& x) {
  return gaussian_value(g, factor_primitive(g), x);
}

double gaussian_value_backward(const GaussianPrimitive& g, const PrimitiveFactors& f, const Vec3& x,
                               double upstream, PrimitiveGrad& grad) {
  if (f.degenerate) return mark_degenerate(), 0.0;
  const Vec3 d = x - g.mu;
  const Vec3 Mdl = f.M * d;
  const double efac = std::exp(-0.5 * d.dot(Mdl));
  const double value = f.rho * efac;

  grad.rho_raw += upstream * efac * f.sigmoid;
  grad.mu += upstream * value * Mdl;
  const Mat3 G_M = (-0.5 * upstream * value) * d * d.transpose();
  chain_sigma_inv(G_M, f, grad);
  return value;
}

PixelRect detector_footprint(const GaussianPrimitive& g, const ScanGeometry& geom, int view) {
  const PixelRect full{0, geom.nu, 0, geom.nv};
  const double sigma_max = std::exp(g.log_scale.maxCoeff());
  const double r3 = 3.0 * sigma_max;

  const Vec3 src = geom.source_position(view);
  const Vec3 axis = (geom.detector_center(view) - src).normalized();
  const Vec3 w = g.mu - src;
  const double d_axis = w.dot(axis);
  if (d_axis <= r3 + 1e-9) return full;  // near/behind the source: give up

  // Central projection of mu onto the detector plane.
  const double s_star = geom.sdd / d_axis;
  const Vec3 p = src + w * s_star;
  const Vec3 rel = p - geom.detector_center(view);
  const double u_real = rel.dot(geom.detector_u_axis(view)) / geom.du + 0.5 * geom.nu - 0.5;
  const double v_real = rel.dot(geom.detector_v_axis(view)) / geom.dv + 0.5 * geom.nv - 0.5;

  // Conservative plane radius of the projected 3-sigma sphere.
  const double rho_max = geom.sdd * r3 / (d_axis - r3) * (1.0 + w.norm() / d_axis);

  PixelRect rect;
  rect.u0 = std::max(0, static_cast<int>(std::floor(u_real - rho_max / geom.du)) - 1);
  rect.u1 = std::min(geom.nu, static_cast<int>(std::ceil(u_real + rho_max / geom.du)) + 2);
  rect.v0 = std::max(0, static_cast<int>(std::floor(v_real - rho_max / geom.dv)) - 1);
  rect.v1 = std::min(geom.nv, static_cast<int>(std::ceil(v_real + rho_max / geom.dv)) + 2);
  return rect;
}

Image render_projection(const GaussianSet& set, const ScanGeometry& geom, int view) {
  if (view < 0 || view >= geom.n_views())
    throw ArgumentError("render_projection: view out of range");
  Image out(geom.nu, geom.nv);

  constexpr int kTile = 16;
  const int tu = (geom.nu + kTile - 1) / kTile;
  const int tv = (geom.nv + kTile - 1) / kTile;
  std::vector<std::vector<int>> tile_prims(static_cast<size_t>(tu) * tv);
  std::vector<PrimitiveFactors> factors(set.size());
  for (int i = 0; i < static_cast<int>(set.size()); ++i) {
    factors[i] = factor_primitive(set.prims[i]);
    const PixelRect r = detector_footprint(set.prims[i], geom, view);
    if (r.empty()) continue;
    for (int ty = r.v0 / kTile; ty <= (r.v1 - 1) / kTile; ++ty)
      for (int tx = r.u0 / kTile; tx <= (r.u1 - 1) / kTile; ++tx)
        tile_prims[static_cast<size_t>(ty) * tu + tx].push_back(i);
  }

#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < tu * tv; ++t) {
    const auto& list = tile_prims[t];
    if (list.empty()) continue;
    const int v0 = (t / tu) * kTile, u0 = (t % tu) * kTile;
    for (int v = v0; v < std::min(geom.nv, v0 + kTile); ++v) {
      for (int u = u0; u < std::min(geom.nu, u0 + kTile); ++u) {
        const Ray ray = ray_for_pixel(geom, view, u, v);
        double acc = 0.0;
        for (int i : list) acc += ray_integral(set.prims[i], factors[i], ray);
        out.at(v, u) = acc;
      }
    }
  }
  return out;
}

Volume voxelize(const GaussianSet& set, const VolumeGrid& grid) {
  grid.validate();
  Volume out(grid);

  // Per-primitive voxel AABBs, bucketed into z-slabs; each slab is filled by
  // one worker in primitive-index order, so results do not depend on the
  // schedule.
  struct Box {
    int x0, x1, y0, y1, z0, z1;
  };
  std::vector<Box> boxes(set.size());
  std::vector<PrimitiveFactors> factors(set.size());
  const Vec3 org = grid.origin();
  for (size_t i = 0; i < set.size(); ++i) {
    const GaussianPrimitive& g = set.prims[i];
    factors[i] = factor_primitive(g);
    const Mat3 sigma = covariance(g.quat, g.log_scale);
    Box b;
    int* lo[3] = {&b.x0, &b.y0, &b.z0};
    int* hi[3] = {&b.x1, &b.y1, &b.z1};
    const int dims[3] = {grid.nx, grid.ny, grid.nz};
    for (int k = 0; k < 3; ++k) {
      const double h = kVoxelizeSigma * std::sqrt(std::max(0.0, sigma(k, k)));
      // Voxel centers sit at org + (i + 0.5) * spacing.
      *lo[k] = std::max(
          0, static_cast<int>(std::ceil((g.mu[k] - h - org[k]) / grid.spacing[k] - 0.5)));
      *hi[k] = std::min(dims[k] - 1, static_cast<int>(std::floor(
                                         (g.mu[k] + h - org[k]) / grid.spacing[k] - 0.5)));
    }
    boxes[i] = b;
  }

  constexpr int kSlab = 8;
  const int n_slabs = (grid.nz + kSlab - 1) / kSlab;
  std::vector<std::vector<int>> slab_prims(n_slabs);
  for (size_t i = 0; i < set.size(); ++i) {
    const Box& b = boxes[i];
    if (b.x0 > b.x1 || b.y0 > b.y1 || b.z0 > b.z1) continue;
    for (int s = b.z0 / kSlab; s <= b.z1 / kSlab; ++s) slab_prims[s].push_back(static_cast<int>(i));
  }

#pragma omp parallel for schedule(dynamic, 1)
  for (int s = 0; s < n_slabs; ++s) {
    const int z_lo = s * kSlab;
    const int z_hi = std::min(grid.nz, z_lo + kSlab);
    for (int i : slab_prims[s]) {
      const GaussianPrimitive& g = set.prims[i];
      const Box& b = boxes[i];
      for (int iz = std::max(b.z0, z_lo); iz <= std::min(b.z1, z_hi - 1); ++iz)
        for (int iy = b.y0; iy <= b.y1; ++iy)
          for (int ix = b.x0; ix <= b.x1; ++ix)
            out.at(ix, iy, iz) += gaussian_value(g, factors[i], grid.voxel_center(ix, iy, iz));
    }
  }
  return out;
}

}  // namespace ctsplat
