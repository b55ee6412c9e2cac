#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ctsplat/geometry.hpp"

namespace ctsplat {

// Matrix-free linear operator on flat vectors; CGLS runs against this.
struct LinearOperator {
  virtual ~LinearOperator() = default;
  virtual size_t rows() const = 0;  // measurement dimension
  virtual size_t cols() const = 0;  // volume dimension
  virtual void apply(const double* x, double* y) const = 0;            // y = A x
  virtual void apply_transpose(const double* y, double* x) const = 0;  // x = A^T y
};

// Visits every voxel crossed by the ray segment [t_in, t_out] with the exact
// intersection length (incremental Siddon traversal). `visit(ix, iy, iz, len)`.
template <typename F>
void siddon_traverse(const VolumeGrid& grid, const Ray& ray, F&& visit);

// Matched forward/adjoint cone-beam projector pair over a voxel grid. Pixel
// values are intersection-length-weighted sums, and the adjoint scatters with
// identical weights, so <Ax, y> == <x, A^T y> up to rounding.
class LinearProjector final : public LinearOperator {
 public:
  LinearProjector(const ScanGeometry& geom, const VolumeGrid& grid,
                  std::optional<std::vector<int>> view_subset = std::nullopt);

  const ScanGeometry& geom() const { return geom_; }
  const VolumeGrid& grid() const { return grid_; }
  const std::vector<int>& views() const { return views_; }
  // Geometry restricted to the view subset (angles/phases filtered).
  ScanGeometry sub_geometry() const;

  size_t rows() const override { return views_.size() * geom_.pixels_per_view(); }
  size_t cols() const override { return grid_.voxel_count(); }
  void apply(const double* x, double* y) const override;
  void apply_transpose(const double* y, double* x) const override;

  ProjectionSet forward(const Volume& vol) const;
  Volume adjoint(const ProjectionSet& proj) const;

  // Per-ray chord lengths through the grid (row sums of A) and per-voxel
  // accumulated lengths (column sums), used by SART-style updates.
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;

 private:
  Ray pixel_ray(size_t flat_index) const;

  ScanGeometry geom_;
  VolumeGrid grid_;
  std::vector<int> views_;
};

template <typename F>
void siddon_traverse(const VolumeGrid& grid, const Ray& ray, F&& visit) {
  const Aabb box = grid.bounds();
  Ray r = clip_to_box(ray, box);
  if (!(r.t_in < r.t_out)) return;
  const double t0 = r.t_in, t1 = r.t_out;

  const Vec3 origin = grid.origin();
  const Vec3 inv_sp(1.0 / grid.spacing.x(), 1.0 / grid.spacing.y(), 1.0 / grid.spacing.z());
  const int dims[3] = {grid.nx, grid.ny, grid.nz};

  // Voxel containing the entry point, nudged inside to dodge boundary ties.
  const double nudge = 1e-12 * (t1 - t0 + 1.0);
  const Vec3 p_in = r.point(t0 + nudge);
  int idx[3];
  double t_max[3], t_delta[3];
  int step[3];
  for (int k = 0; k < 3; ++k) {
    double g = (p_in[k] - origin[k]) * inv_sp[k];
    idx[k] = std::min(dims[k] - 1, std::max(0, static_cast<int>(std::floor(g))));
    const double d = r.dir[k];
    if (d > 0.0) {
      step[k] = 1;
      t_delta[k] = grid.spacing[k] / d;
      t_max[k] = ((idx[k] + 1) * grid.spacing[k] + origin[k] - r.origin[k]) / d;
    } else if (d < 0.0) {
      step[k] = -1;
      t_delta[k] = -grid.spacing[k] / d;
      t_max[k] = (idx[k] * grid.spacing[k] + origin[k] - r.origin[k]) / d;
    } else {
      step[k] = 0;
      t_delta[k] = std::numeric_limits<double>::infinity();
      t_max[k] = std::numeric_limits<double>::infinity();
    }
  }

  double t_cur = t0;
  while (t_cur < t1) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    const double t_next = std::min(t_max[axis], t1);
    const double len = t_next - t_cur;
    if (len > 0.0) visit(idx[0], idx[1], idx[2], len);
    if (t_next >= t1) break;
    t_cur = t_next;
    idx[axis] += step[axis];
    if (idx[axis] < 0 || idx[axis] >= dims[axis]) break;
    t_max[axis] += t_delta[axis];
  }
}

}  // namespace ctsplat
