#include "ctsplat/classic_recon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctsplat {

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }
}  // namespace

CglsResult cgls_solve(const LinearOperator& A, const std::vector<double>& b,
                      const CglsConfig& cfg) {
  if (b.size() != A.rows()) throw ArgumentError("cgls: measurement size mismatch");
  const size_t n = A.cols(), m = A.rows();

  CglsResult res;
  res.x.assign(n, 0.0);
  std::vector<double> r = b;             // r = b - A x, x = 0
  std::vector<double> s(n, 0.0);         // s = A^T r
  A.apply_transpose(r.data(), s.data());
  double gamma = dot(s, s);
  const double gamma0 = std::sqrt(gamma);  // |A^T b|
  res.resid_norms.push_back(norm(r));
  if (gamma0 == 0.0) return res;  // zero measurements: zero volume

  std::vector<double> p = s, q(m, 0.0);
  for (int k = 0; k < cfg.max_iters; ++k) {
    A.apply(p.data(), q.data());
    const double qq = dot(q, q);
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    for (size_t i = 0; i < n; ++i) res.x[i] += alpha * p[i];
    for (size_t i = 0; i < m; ++i) r[i] -= alpha * q[i];
    res.resid_norms.push_back(norm(r));
    ++res.iters;

    A.apply_transpose(r.data(), s.data());
    const double gamma_new = dot(s, s);
    if (std::sqrt(gamma_new) / gamma0 <= cfg.tol) break;
    const double beta = gamma_new / gamma;
    gamma = gamma_new;
    for (size_t i = 0; i < n; ++i) p[i] = s[i] + beta * p[i];
  }

  if (cfg.nonneg_final)
    for (double& v : res.x) v = std::max(0.0, v);
  return res;
}

Volume cgls(const LinearProjector& p, const ProjectionSet& proj, const CglsConfig& cfg) {
  if (proj.data.size() != p.rows()) throw ArgumentError("cgls: projection size mismatch");
  CglsResult res = cgls_solve(p, proj.data, cfg);
  Volume out(p.grid());
  out.data = std::move(res.x);
  return out;
}

void sart_sweep(std::vector<double>& x, const LinearProjector& p, const ProjectionSet& proj,
                double relax, SartCache& cache) {
  const auto& views = p.views();
  const size_t n_vox = p.cols();
  if (x.size() != n_vox) throw ArgumentError("sart_sweep: volume size mismatch");
  if (proj.data.size() != p.rows()) throw ArgumentError("sart_sweep: projection size mismatch");

  if (cache.row_sums.size() != views.size()) {
    cache.row_sums.assign(views.size(), {});
    cache.col_sums.assign(views.size(), {});
    for (size_t k = 0; k < views.size(); ++k) {
      LinearProjector pv(p.geom(), p.grid(), std::vector<int>{views[k]});
      cache.row_sums[k] = pv.row_sums();
      cache.col_sums[k] = pv.col_sums();
    }
  }

  const size_t per_view = p.geom().pixels_per_view();
  std::vector<double> resid(per_view), update(n_vox);
  for (size_t k = 0; k < views.size(); ++k) {
    LinearProjector pv(p.geom(), p.grid(), std::vector<int>{views[k]});
    pv.apply(x.data(), resid.data());
    const double* b = proj.data.data() + k * per_view;
    const auto& rows = cache.row_sums[k];
    for (size_t i = 0; i < per_view; ++i)
      resid[i] = rows[i] > 0.0 ? (b[i] - resid[i]) / rows[i] : 0.0;
    pv.apply_transpose(resid.data(), update.data());
    const auto& cols = cache.col_sums[k];
    for (size_t j = 0; j < n_vox; ++j)
      if (cols[j] > 0.0) x[j] += relax * update[j] / cols[j];
  }
}

double smoothed_tv(const Volume& vol, double eps) {
  const int nx = vol.grid.nx, ny = vol.grid.ny, nz = vol.grid.nz;
  double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (int iz = 0; iz < nz; ++iz) {
    double local = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const double v = vol.at(ix, iy, iz);
        const double dx = ix + 1 < nx ? vol.at(ix + 1, iy, iz) - v : 0.0;
        const double dy = iy + 1 < ny ? vol.at(ix, iy + 1, iz) - v : 0.0;
        const double dz = iz + 1 < nz ? vol.at(ix, iy, iz + 1) - v : 0.0;
        local += std::sqrt(dx * dx + dy * dy + dz * dz + eps);
      }
    }
    total += local;
  }
  return total / static_cast<double>(vol.grid.voxel_count());
}

namespace {
// Gradient of voxel-summed smoothed TV (not the mean; the constant factor is
// irrelevant to a normalized descent direction).
void smoothed_tv_gradient(const Volume& vol, double eps, std::vector<double>& grad) {
  const int nx = vol.grid.nx, ny = vol.grid.ny, nz = vol.grid.nz;
  grad.assign(vol.data.size(), 0.0);
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const double v = vol.at(ix, iy, iz);
        const double dx = ix + 1 < nx ? vol.at(ix + 1, iy, iz) - v : 0.0;
        const double dy = iy + 1 < ny ? vol.at(ix, iy + 1, iz) - v : 0.0;
        const double dz = iz + 1 < nz ? vol.at(ix, iy, iz + 1) - v : 0.0;
        const double mag = std::sqrt(dx * dx + dy * dy + dz * dz + eps);
        const size_t j = vol.grid.index(ix, iy, iz);
        grad[j] += -(dx + dy + dz) / mag;
        if (ix + 1 < nx) grad[vol.grid.index(ix + 1, iy, iz)] += dx / mag;
        if (iy + 1 < ny) grad[vol.grid.index(ix, iy + 1, iz)] += dy / mag;
        if (iz + 1 < nz) grad[vol.grid.index(ix, iy, iz + 1)] += dz / mag;
      }
    }
  }
}
}  // namespace

Volume asd_pocs(const Volume& x0, const LinearProjector& p, const ProjectionSet& proj,
                const AsdPocsConfig& cfg, AsdPocsLog* log) {
  if (!(x0.grid == p.grid())) throw ArgumentError("asd_pocs: x0 grid mismatch");
  if (proj.data.size() != p.rows()) throw ArgumentError("asd_pocs: projection size mismatch");

  Volume x = x0;
  SartCache cache;
  double tv_step = cfg.tv_step_init > 0.0 ? cfg.tv_step_init : 0.2 * std::max(0.0, x0.max_value());
  if (tv_step <= 0.0) tv_step = 1.0;  // degenerate zero start

  std::vector<double> grad, prev(x.data.size());
  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    prev = x.data;
    sart_sweep(x.data, p, proj, cfg.art_relax, cache);
    for (double& v : x.data) v = std::max(0.0, v);

    double data_disp = 0.0;
    for (size_t j = 0; j < x.data.size(); ++j) {
      const double d = x.data[j] - prev[j];
      data_disp += d * d;
    }
    data_disp = std::sqrt(data_disp);

    if (cfg.tv_iters > 0) {
      // Per-step world displacement: capped so the whole phase stays within
      // alpha_ratio of the data step.
      double step = tv_step;
      if (data_disp > 0.0) step = std::min(step, cfg.alpha_ratio * data_disp / cfg.tv_iters);

      std::vector<double> tv_curve;
      double tv_cur = smoothed_tv(x);
      tv_curve.push_back(tv_cur);
      for (int it = 0; it < cfg.tv_iters; ++it) {
        smoothed_tv_gradient(x, 1e-8, grad);
        const double gnorm = norm(grad);
        if (!(gnorm > 1e-30)) {
          tv_curve.push_back(tv_cur);
          continue;  // flat field: no-op
        }
        double s = step;
        Volume cand = x;
        for (int tries = 0; tries < 24; ++tries) {
          for (size_t j = 0; j < x.data.size(); ++j)
            cand.data[j] = x.data[j] - s * grad[j] / gnorm;
          const double tv_new = smoothed_tv(cand);
          if (tv_new <= tv_cur) {
            x.data.swap(cand.data);
            tv_cur = tv_new;
            break;
          }
          s *= 0.5;
        }
        tv_curve.push_back(tv_cur);
      }
      if (log) log->tv_curves.push_back(std::move(tv_curve));
    }
    tv_step *= cfg.tv_step_decay;
  }
  return x;
}

GaussianSet volume_to_gaussians(const Volume& vol, const GaussianInitConfig& cfg) {
  if (!vol.all_finite()) throw DataError("volume_to_gaussians: non-finite volume");
  if (cfg.n_points < 1) throw ArgumentError("volume_to_gaussians: n_points must be >= 1");

  // Candidates above the threshold, weighted sampling without replacement via
  // exponential keys: take the n smallest -log(u)/w. Keys depend only on
  // (seed, voxel index), so the draw is deterministic.
  struct Cand {
    double key;
    size_t index;
  };
  std::vector<Cand> cands;
  cands.reserve(vol.data.size() / 8);
  for (size_t j = 0; j < vol.data.size(); ++j) {
    const double w = vol.data[j];
    if (w > cfg.density_threshold) {
      Rng rng(substream(cfg.seed, 0xA11CE, j));
      const double u = std::max(rng.next_double(), 1e-300);
      cands.push_back({-std::log(u) / w, j});
    }
  }
  if (cands.empty())
    throw InitializationError(
        "volume_to_gaussians: no voxel above density threshold " +
        std::to_string(cfg.density_threshold));

  const size_t take = std::min<size_t>(cfg.n_points, cands.size());
  std::nth_element(cands.begin(), cands.begin() + take - 1, cands.end(),
                   [](const Cand& a, const Cand& b) { return a.key < b.key; });
  cands.resize(take);
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.key < b.key; });

  const VolumeGrid& g = vol.grid;
  GaussianSet set;
  set.prims.reserve(take);
  for (const Cand& c : cands) {
    const size_t j = c.index;
    const int ix = static_cast<int>(j % g.nx);
    const int iy = static_cast<int>((j / g.nx) % g.ny);
    const int iz = static_cast<int>(j / (static_cast<size_t>(g.nx) * g.ny));
    Rng rng(substream(cfg.seed, 0x1177E2, j));
    GaussianPrimitive prim;
    prim.mu = g.voxel_center(ix, iy, iz) +
              Vec3(rng.uniform(-0.5, 0.5) * g.spacing.x(), rng.uniform(-0.5, 0.5) * g.spacing.y(),
                   rng.uniform(-0.5, 0.5) * g.spacing.z());
    prim.quat = Vec4(1.0, 0.0, 0.0, 0.0);
    for (int k = 0; k < 3; ++k)
      prim.log_scale[k] = std::log(cfg.init_scale_voxels * g.spacing[k]);
    prim.rho_raw = inv_softplus(vol.data[j]);
    set.prims.push_back(prim);
  }
  return set;
}

}  // namespace ctsplat
