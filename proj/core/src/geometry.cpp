#include "ctsplat/geometry.hpp"

#include <cmath>

namespace ctsplat {

void ScanGeometry::validate() const {
  if (!(sad > 0.0)) throw ArgumentError("ScanGeometry: sad must be > 0");
  if (!(sdd > sad)) throw ArgumentError("ScanGeometry: sdd must be > sad");
  if (nu < 1 || nv < 1) throw ArgumentError("ScanGeometry: detector needs at least one pixel");
  if (!(du > 0.0) || !(dv > 0.0)) throw ArgumentError("ScanGeometry: pixel pitch must be > 0");
  if (!phases.empty()) {
    if (phases.size() != angles.size())
      throw ArgumentError("ScanGeometry: phases must match angles length");
    for (int p : phases)
      if (p < 0 || p >= n_phases) throw ArgumentError("ScanGeometry: phase index out of range");
  }
}

ScanGeometry ScanGeometry::circular(double sad, double sdd, int nu, int nv, double du, double dv,
                                    int views, int n_phases) {
  ScanGeometry g;
  g.sad = sad;
  g.sdd = sdd;
  g.nu = nu;
  g.nv = nv;
  g.du = du;
  g.dv = dv;
  g.angles.resize(views);
  for (int k = 0; k < views; ++k) g.angles[k] = 2.0 * M_PI * k / views;
  if (n_phases > 0) {
    g.n_phases = n_phases;
    g.phases.resize(views);
    for (int k = 0; k < views; ++k) g.phases[k] = k % n_phases;
  }
  g.validate();
  return g;
}

Vec3 ScanGeometry::source_position(int view) const {
  const double a = angles[view];
  return Vec3(-sad * std::cos(a), -sad * std::sin(a), 0.0);
}

Vec3 ScanGeometry::detector_center(int view) const {
  const double a = angles[view];
  return Vec3((sdd - sad) * std::cos(a), (sdd - sad) * std::sin(a), 0.0);
}

Vec3 ScanGeometry::detector_u_axis(int view) const {
  const double a = angles[view];
  return Vec3(-std::sin(a), std::cos(a), 0.0);
}

Vec3 ScanGeometry::detector_v_axis(int) const { return Vec3(0.0, 0.0, 1.0); }

Vec3 ScanGeometry::pixel_position(int view, int u, int v) const {
  const double ou = (u + 0.5 - 0.5 * nu) * du;
  const double ov = (v + 0.5 - 0.5 * nv) * dv;
  return detector_center(view) + ou * detector_u_axis(view) + ov * detector_v_axis(view);
}

void VolumeGrid::validate() const {
  if (nx < 1 || ny < 1 || nz < 1) throw ArgumentError("VolumeGrid: all counts must be >= 1");
  if (!(spacing.x() > 0.0 && spacing.y() > 0.0 && spacing.z() > 0.0))
    throw ArgumentError("VolumeGrid: spacing must be > 0");
}

double Volume::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : data) m = std::max(m, v);
  return data.empty() ? 0.0 : m;
}

bool Volume::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Ray clip_to_box(Ray ray, const Aabb& box) {
  double t0 = ray.t_in, t1 = ray.t_out;
  for (int k = 0; k < 3; ++k) {
    const double o = ray.origin[k], d = ray.dir[k];
    if (d == 0.0) {
      if (o < box.min[k] || o > box.max[k]) {
        ray.t_in = 1.0;
        ray.t_out = 0.0;
        return ray;
      }
      continue;
    }
    double ta = (box.min[k] - o) / d;
    double tb = (box.max[k] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  ray.t_in = t0;
  ray.t_out = t1;
  return ray;
}

Ray ray_for_pixel(const ScanGeometry& geom, int view, int u, int v) {
  if (view < 0 || view >= geom.n_views()) throw ArgumentError("ray_for_pixel: view out of range");
  if (u < 0 || u >= geom.nu || v < 0 || v >= geom.nv)
    throw ArgumentError("ray_for_pixel: pixel index out of range");
  Ray ray;
  ray.origin = geom.source_position(view);
  ray.dir = (geom.pixel_position(view, u, v) - ray.origin).normalized();
  ray.t_in = 0.0;
  ray.t_out = std::numeric_limits<double>::infinity();
  return ray;
}

Ray ray_for_pixel(const ScanGeometry& geom, int view, int u, int v, const Aabb& clip) {
  return clip_to_box(ray_for_pixel(geom, view, u, v), clip);
}

Image ProjectionSet::view_image(int view) const {
  Image img(geom.nu, geom.nv);
  const size_t off = static_cast<size_t>(view) * geom.pixels_per_view();
  std::copy(data.begin() + off, data.begin() + off + geom.pixels_per_view(), img.data.begin());
  return img;
}

}  // namespace ctsplat
