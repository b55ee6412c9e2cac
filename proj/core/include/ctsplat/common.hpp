#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctsplat {

// Error taxonomy; the CLI maps these to exit codes (argument/data -> 2,
// divergence -> 3).
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InitializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Process-wide execution settings. `threads` bounds OpenMP parallelism,
// `deterministic` forces single-worker floating-point reductions so results
// do not depend on the thread count.
void set_max_threads(int threads);
int max_threads();
void set_deterministic(bool on);
bool deterministic_mode();
// Worker count to use for reductions that sum per-worker buffers.
int reduction_workers();

// Counter-based RNG (splitmix64). Cheap to fork into independent streams so
// per-pixel / per-voxel draws are identical no matter how loops are split
// across threads.
uint64_t mix64(uint64_t x);

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix64(seed + 0x9e3779b97f4a7c15ull)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }
  // Uniform in [0,1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }
  // Poisson sample; exact product method for small means, Hormann's PTRD
  // transformed rejection for large ones.
  uint64_t poisson(double mean);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Derives an independent stream from a base seed and up to three indices.
uint64_t substream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0);

// Row-major 2D image, `data[y * width + x]`.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
};

double softplus(double x);
double inv_softplus(double y);
double logistic(double x);

}  // namespace ctsplat
