#include "ctsplat/common.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>

namespace ctsplat {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = library default
std::atomic<bool> g_deterministic{false};
}  // namespace

void set_max_threads(int threads) {
  g_max_threads.store(std::max(0, threads));
  if (threads > 0) omp_set_num_threads(threads);
}

int max_threads() {
  int t = g_max_threads.load();
  return t > 0 ? t : omp_get_max_threads();
}

void set_deterministic(bool on) { g_deterministic.store(on); }
bool deterministic_mode() { return g_deterministic.load(); }

int reduction_workers() { return deterministic_mode() ? 1 : max_threads(); }

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

uint64_t substream(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  uint64_t h = mix64(seed ^ 0x51'7c'c1'b7'27'22'0a'95ull);
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x9e3779b97f4a7c15ull));
  h = mix64(h ^ (c + 0xd1b54a32d192ed03ull));
  return h;
}

uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  if (mean < 30.0) {
    // Knuth's product method.
    const double limit = std::exp(-mean);
    uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_double();
    } while (p > limit);
    return k - 1;
  }
  // PTRD: Hormann, "The transformed rejection method for generating Poisson
  // random variables" (1993).
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = next_double() - 0.5;
    double v = next_double();
    double us = 0.5 - std::fabs(u);
    double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (kd < 0.0) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<uint64_t>(kd);
    if (us < 0.013 && v > us) continue;
    double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    double rhs = -mean + kd * std::log(mean) - std::lgamma(kd + 1.0);
    if (lhs <= rhs) return static_cast<uint64_t>(kd);
  }
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double inv_softplus(double y) {
  if (y > 30.0) return y;
  // log(exp(y) - 1)
  return std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace ctsplat
