#pragma once

#include <optional>

#include "ctsplat/geometry.hpp"

namespace ctsplat {

// Simulates log-domain projection acquisition. Noiseless pixels are exact
// Siddon line integrals of `vol`. With photons_i0 set, the intensity-domain
// signal I0*exp(-I) is Poisson sampled (clamped to >= 1 photon) and mapped
// back to the log domain. Per-pixel RNG streams derive from
// (seed, view, u, v), so results are identical however the loop is split.
ProjectionSet simulate_projections(const Volume& vol, const ScanGeometry& geom,
                                   std::optional<double> photons_i0, uint64_t seed);

}  // namespace ctsplat
