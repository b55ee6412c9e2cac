#include "ctsplat/simulate.hpp"

#include <cmath>

#include "ctsplat/projector.hpp"

namespace ctsplat {

ProjectionSet simulate_projections(const Volume& vol, const ScanGeometry& geom,
                                   std::optional<double> photons_i0, uint64_t seed) {
  if (!vol.all_finite()) throw DataError("simulate_projections: volume has non-finite values");
  if (photons_i0 && !(*photons_i0 > 0.0))
    throw ArgumentError("simulate_projections: photons_i0 must be > 0");

  LinearProjector proj(geom, vol.grid);
  ProjectionSet out = proj.forward(vol);
  if (!photons_i0) return out;

  const double i0 = *photons_i0;
  const int views = geom.n_views();
  const size_t per_view = geom.pixels_per_view();
#pragma omp parallel for schedule(static)
  for (int64_t k = 0; k < static_cast<int64_t>(views * per_view); ++k) {
    const int view = static_cast<int>(k / per_view);
    const size_t rem = k % per_view;
    const int v = static_cast<int>(rem / geom.nu);
    const int u = static_cast<int>(rem % geom.nu);
    Rng rng(substream(seed, view, u, v));
    const double mean = i0 * std::exp(-out.data[k]);
    const double photons = std::max<double>(1.0, static_cast<double>(rng.poisson(mean)));
    out.data[k] = std::log(i0 / photons);
  }
  return out;
}

}  // namespace ctsplat
