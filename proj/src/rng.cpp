#include "elda/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace elda {

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

static uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t global_seed, std::string_view doc_id, uint64_t iteration,
                     uint64_t salt) {
  uint64_t h = splitmix64(global_seed ^ salt);
  h = splitmix64(h ^ fnv1a64(doc_id));
  h = splitmix64(h ^ iteration);
  return h;
}

uint32_t Rng::uniform_below(uint32_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  // multiply-shift; bias is < 2^-32 and irrelevant here, determinism is not
  return static_cast<uint32_t>((static_cast<unsigned __int128>(eng_()) * n) >> 64);
}

double Rng::normal01() {
  // Box-Muller, cosine branch only; u1 in (0, 1]
  double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0)) throw std::invalid_argument("gamma: shape must be positive");
  if (shape < 1.0) {
    double u = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal01();
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    double u = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

uint32_t Rng::poisson(double lambda) {
  if (lambda < 0) throw std::invalid_argument("poisson: lambda must be >= 0");
  if (lambda == 0) return 0;
  // inversion; fine for the small lambdas used here
  double p = std::exp(-lambda);
  double f = p;
  double u = uniform01();
  uint32_t k = 0;
  while (u > f && k < 100000) {
    ++k;
    p *= lambda / k;
    f += p;
  }
  return k;
}

std::vector<double> Rng::dirichlet_symmetric(double alpha, size_t n) {
  std::vector<double> x(n);
  double s = 0;
  for (size_t i = 0; i < n; ++i) {
    x[i] = gamma(alpha);
    s += x[i];
  }
  if (s <= 0) {
    // all-zero draw is possible for tiny alpha once doubles underflow;
    // fall back to a single spike, matching the alpha -> 0 limit
    size_t j = uniform_below(static_cast<uint32_t>(n));
    for (size_t i = 0; i < n; ++i) x[i] = (i == j) ? 1.0 : 0.0;
    return x;
  }
  for (size_t i = 0; i < n; ++i) x[i] /= s;
  return x;
}

}  // namespace elda
