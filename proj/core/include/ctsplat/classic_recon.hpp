#pragma once

#include <vector>

#include "ctsplat/gsplat.hpp"
#include "ctsplat/projector.hpp"

namespace ctsplat {

struct CglsConfig {
  int max_iters = 30;
  double tol = 1e-6;  // on |A^T(b - Ax)| / |A^T b|
  bool nonneg_final = false;
};

struct CglsResult {
  std::vector<double> x;
  // |b - A x_k| after each completed iteration, including the initial
  // residual at index 0. Non-increasing for a matched operator pair.
  std::vector<double> resid_norms;
  int iters = 0;
};

// Hestenes-Stiefel CGLS on min |Ax - b|^2 from a zero start.
CglsResult cgls_solve(const LinearOperator& A, const std::vector<double>& b,
                      const CglsConfig& cfg);
Volume cgls(const LinearProjector& p, const ProjectionSet& proj, const CglsConfig& cfg);

struct AsdPocsConfig {
  int outer_iters = 20;
  double art_relax = 1.0;      // lambda_ART in (0, 2)
  int tv_iters = 20;           // descent steps per outer iteration
  double tv_step_init = -1.0;  // <= 0: use 0.2 * max(x0)
  double tv_step_decay = 0.95;
  double alpha_ratio = 0.5;    // cap on TV displacement vs data displacement
};

struct AsdPocsLog {
  // tv_curves[k] = smoothed-TV values across descent phase k (the value
  // before the first step, then after each accepted step).
  std::vector<std::vector<double>> tv_curves;
};

// One relaxed SART sweep over the projector's views, in view order:
// x += relax * A_v^T((b_v - A_v x) / row_sums) / col_sums, per view.
// Caches may be reused across sweeps (built on first use).
struct SartCache {
  std::vector<std::vector<double>> row_sums;  // per view
  std::vector<std::vector<double>> col_sums;  // per view
};
void sart_sweep(std::vector<double>& x, const LinearProjector& p, const ProjectionSet& proj,
                double relax, SartCache& cache);

// Smoothed isotropic total variation: mean over voxels of
// sqrt(dx^2 + dy^2 + dz^2 + eps) with forward differences.
double smoothed_tv(const Volume& vol, double eps = 1e-8);

// ASD-POCS: per outer iteration one relaxed SART pass, a nonnegativity
// projection, then tv_iters steepest-descent steps on smoothed TV whose total
// displacement is capped at alpha_ratio times the data-step displacement.
// Steps that would raise TV are halved until they do not, so TV is
// non-increasing within every descent phase.
Volume asd_pocs(const Volume& x0, const LinearProjector& p, const ProjectionSet& proj,
                const AsdPocsConfig& cfg, AsdPocsLog* log = nullptr);

struct GaussianInitConfig {
  int n_points = 10000;
  double density_threshold = 0.0;
  double init_scale_voxels = 1.0;
  uint64_t seed = 0;
};

// Samples n_points voxel centers (without replacement, probability
// proportional to voxel value among voxels above the threshold), jitters each
// uniformly inside its voxel, and emits identity-rotation primitives with
// softplus(rho_raw) equal to the voxel value and log-scales at
// init_scale_voxels times the voxel spacing.
GaussianSet volume_to_gaussians(const Volume& vol, const GaussianInitConfig& cfg);

}  // namespace ctsplat
