#include "ctsplat/projector.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

namespace ctsplat {

LinearProjector::LinearProjector(const ScanGeometry& geom, const VolumeGrid& grid,
                                 std::optional<std::vector<int>> view_subset)
    : geom_(geom), grid_(grid) {
  geom_.validate();
  grid_.validate();
  if (view_subset) {
    views_ = std::move(*view_subset);
    for (int v : views_)
      if (v < 0 || v >= geom_.n_views())
        throw ArgumentError("LinearProjector: view subset index out of range");
  } else {
    views_.resize(geom_.n_views());
    std::iota(views_.begin(), views_.end(), 0);
  }
  // The source orbit must clear the volume, otherwise rays can start inside.
  const double half_diag = 0.5 * grid_.extent().norm();
  if (!(geom_.sad > half_diag))
    throw ArgumentError("LinearProjector: sad must exceed half the grid diagonal");
}

ScanGeometry LinearProjector::sub_geometry() const {
  ScanGeometry g = geom_;
  g.angles.clear();
  g.phases.clear();
  for (int v : views_) {
    g.angles.push_back(geom_.angles[v]);
    if (geom_.has_phases()) g.phases.push_back(geom_.phases[v]);
  }
  return g;
}

Ray LinearProjector::pixel_ray(size_t flat) const {
  const size_t per_view = geom_.pixels_per_view();
  const int view = views_[flat / per_view];
  const size_t rem = flat % per_view;
  const int v = static_cast<int>(rem / geom_.nu);
  const int u = static_cast<int>(rem % geom_.nu);
  return ray_for_pixel(geom_, view, u, v);
}

void LinearProjector::apply(const double* x, double* y) const {
  const int64_t n = static_cast<int64_t>(rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const Ray ray = pixel_ray(static_cast<size_t>(i));
    double acc = 0.0;
    siddon_traverse(grid_, ray, [&](int ix, int iy, int iz, double len) {
      acc += len * x[grid_.index(ix, iy, iz)];
    });
    y[i] = acc;
  }
}

void LinearProjector::apply_transpose(const double* y, double* x) const {
  const size_t n_rays = rows();
  const size_t n_vox = cols();
  const int workers = std::max(1, reduction_workers());
  std::vector<std::vector<double>> partial(workers);
  const size_t chunk = (n_rays + workers - 1) / workers;

#pragma omp parallel for num_threads(workers) schedule(static, 1)
  for (int w = 0; w < workers; ++w) {
    auto& buf = partial[w];
    buf.assign(n_vox, 0.0);
    const size_t begin = w * chunk;
    const size_t end = std::min(n_rays, begin + chunk);
    for (size_t i = begin; i < end; ++i) {
      const double val = y[i];
      if (val == 0.0) continue;
      const Ray ray = pixel_ray(i);
      siddon_traverse(grid_, ray, [&](int ix, int iy, int iz, double len) {
        buf[grid_.index(ix, iy, iz)] += len * val;
      });
    }
  }

  std::memset(x, 0, n_vox * sizeof(double));
  for (int w = 0; w < workers; ++w)  // fixed reduction order
    for (size_t j = 0; j < n_vox; ++j) x[j] += partial[w][j];
}

ProjectionSet LinearProjector::forward(const Volume& vol) const {
  if (!(vol.grid == grid_)) throw ArgumentError("forward: volume grid mismatch");
  ProjectionSet out(sub_geometry());
  apply(vol.data.data(), out.data.data());
  return out;
}

Volume LinearProjector::adjoint(const ProjectionSet& proj) const {
  if (proj.data.size() != rows()) throw ArgumentError("adjoint: projection size mismatch");
  Volume out(grid_);
  apply_transpose(proj.data.data(), out.data.data());
  return out;
}

std::vector<double> LinearProjector::row_sums() const {
  std::vector<double> sums(rows(), 0.0);
  const int64_t n = static_cast<int64_t>(rows());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    siddon_traverse(grid_, pixel_ray(static_cast<size_t>(i)),
                    [&](int, int, int, double len) { acc += len; });
    sums[i] = acc;
  }
  return sums;
}

std::vector<double> LinearProjector::col_sums() const {
  std::vector<double> ones(rows(), 1.0);
  std::vector<double> sums(cols(), 0.0);
  apply_transpose(ones.data(), sums.data());
  return sums;
}

}  // namespace ctsplat
