#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace sgdvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Flat parameter vector theta of dimension D.
using ParamVector = Eigen::VectorXd;

/// Every random stream in the library is a seeded 64-bit Mersenne twister.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds from
/// (seed, salt) pairs without sharing generator state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Fills a vector with i.i.d. N(0, 1) draws.
inline Vector standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(rng);
  return out;
}

}  // namespace sgdvi
