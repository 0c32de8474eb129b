#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace elda {

uint64_t fnv1a64(std::string_view bytes);

// Stable per-document stream seeds: mixes (global seed, doc id, iteration)
// plus a purpose salt so training and likelihood streams never collide.
uint64_t derive_seed(uint64_t global_seed, std::string_view doc_id, uint64_t iteration,
                     uint64_t salt = 0);

constexpr uint64_t kSaltTrain = 0x7261696e00000001ull;
constexpr uint64_t kSaltInit = 0x696e697400000002ull;
constexpr uint64_t kSaltLikelihood = 0x6c696b6500000003ull;

// Deterministic generator. All variate code is hand-rolled on top of the
// mt19937_64 stream because std::*_distribution output is implementation
// defined; byte-identical reruns are part of the contract here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // uniform on [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n), n > 0
  uint32_t uniform_below(uint32_t n);

  double normal01();
  double gamma(double shape);  // unit scale, shape > 0
  uint32_t poisson(double lambda);
  std::vector<double> dirichlet_symmetric(double alpha, size_t n);

 private:
  std::mt19937_64 eng_;
};

}  // namespace elda
