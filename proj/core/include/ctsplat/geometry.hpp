#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "ctsplat/common.hpp"

namespace ctsplat {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

// Circular cone-beam acquisition. Convention: rotation axis = z, the source
// at angle 0 sits on the -x axis, the detector plane is perpendicular to the
// source-origin line. Detector u runs along the rotated +y axis, v along +z.
struct ScanGeometry {
  double sad = 0.0;  // source-to-axis distance
  double sdd = 0.0;  // source-to-detector distance
  int nu = 0, nv = 0;
  double du = 0.0, dv = 0.0;
  std::vector<double> angles;
  std::vector<int> phases;  // empty = static scan
  int n_phases = 1;

  bool has_phases() const { return !phases.empty(); }
  int n_views() const { return static_cast<int>(angles.size()); }
  size_t pixels_per_view() const { return static_cast<size_t>(nu) * nv; }

  void validate() const;

  // Equispaced angles over [0, 2*pi); with n_phases > 0 view k is assigned
  // phase k % n_phases (round-robin).
  static ScanGeometry circular(double sad, double sdd, int nu, int nv, double du, double dv,
                               int views, int n_phases = 0);

  Vec3 source_position(int view) const;
  Vec3 detector_center(int view) const;
  Vec3 detector_u_axis(int view) const;
  Vec3 detector_v_axis(int view) const;
  // World position of the center of detector pixel (u, v).
  Vec3 pixel_position(int view, int u, int v) const;
};

struct VolumeGrid {
  int nx = 0, ny = 0, nz = 0;
  Vec3 spacing = Vec3::Ones();
  Vec3 center = Vec3::Zero();

  void validate() const;
  size_t voxel_count() const { return static_cast<size_t>(nx) * ny * nz; }
  Vec3 extent() const { return Vec3(nx * spacing.x(), ny * spacing.y(), nz * spacing.z()); }
  // Minimum corner of the grid bounding box.
  Vec3 origin() const { return center - 0.5 * extent(); }
  Aabb bounds() const { return Aabb{origin(), origin() + extent()}; }
  Vec3 voxel_center(int ix, int iy, int iz) const {
    return origin() + Vec3((ix + 0.5) * spacing.x(), (iy + 0.5) * spacing.y(),
                           (iz + 0.5) * spacing.z());
  }
  size_t index(int ix, int iy, int iz) const {  // x-fastest
    return static_cast<size_t>(ix) + static_cast<size_t>(nx) * (iy + static_cast<size_t>(ny) * iz);
  }
  bool operator==(const VolumeGrid& o) const {
    return nx == o.nx && ny == o.ny && nz == o.nz && spacing == o.spacing && center == o.center;
  }
};

// Scalar density field on a voxel lattice, x-fastest ordering.
struct Volume {
  VolumeGrid grid;
  std::vector<double> data;

  Volume() = default;
  explicit Volume(const VolumeGrid& g) : grid(g), data(g.voxel_count(), 0.0) {}
  double& at(int ix, int iy, int iz) { return data[grid.index(ix, iy, iz)]; }
  double at(int ix, int iy, int iz) const { return data[grid.index(ix, iy, iz)]; }
  double max_value() const;
  bool all_finite() const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitX();  // unit length
  double t_in = 0.0;
  double t_out = std::numeric_limits<double>::infinity();

  bool hits_box() const { return t_in <= t_out; }
  Vec3 point(double t) const { return origin + t * dir; }
};

// Clips [ray.t_in, ray.t_out] against `box`; misses leave t_in > t_out.
Ray clip_to_box(Ray ray, const Aabb& box);

// Ray from the rotated source through the center of detector pixel (u, v).
Ray ray_for_pixel(const ScanGeometry& geom, int view, int u, int v);
Ray ray_for_pixel(const ScanGeometry& geom, int view, int u, int v, const Aabb& clip);

// Stack of per-view line-integral images. u-fastest, view-major:
// data[view * nv * nu + v * nu + u].
struct ProjectionSet {
  ScanGeometry geom;
  std::vector<double> data;

  ProjectionSet() = default;
  explicit ProjectionSet(const ScanGeometry& g)
      : geom(g), data(g.pixels_per_view() * g.n_views(), 0.0) {}
  double& at(int view, int v, int u) {
    return data[(static_cast<size_t>(view) * geom.nv + v) * geom.nu + u];
  }
  double at(int view, int v, int u) const {
    return data[(static_cast<size_t>(view) * geom.nv + v) * geom.nu + u];
  }
  Image view_image(int view) const;
};

}  // namespace ctsplat
