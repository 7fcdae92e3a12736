#pragma once

// Deterministic random ensembles.  Every experiment seeds one generator per
// trial from (master_seed, trial_index) so results are independent of
// scheduling and reproducible byte-for-byte.

#include <cstdint>
#include <random>

#include "paraprod/dyadic.hpp"

namespace paraprod {

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  static Rng for_trial(uint64_t master_seed, uint64_t trial) {
    // splitmix-style stream separation
    uint64_t z = master_seed + 0x9e3779b97f4a7c15ull * (trial + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

  double gaussian() { return normal_(eng_); }
  double uniform() { return unif_(eng_); }
  // uniform integer in [0, n)
  uint64_t below(uint64_t n) {
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(eng_);
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

inline Signal random_signal(int dim, int J, Rng& rng) {
  Signal f = Signal::zeros(dim, J);
  for (double& v : f.values) v = rng.gaussian();
  return f;
}

// Haar coefficients iid standard normal, thinned to `density`.
inline HaarSpectrum random_spectrum(int dim, int J, double density, Rng& rng,
                                    bool zero_mean = true) {
  HaarSpectrum s;
  s.dim = dim;
  s.max_level = J;
  s.mean = zero_mean ? 0.0 : rng.gaussian();
  const auto orientations = all_orientations(dim);
  for (const DyadicCube& q : all_cubes(dim, J - 1))
    for (const Orientation& i : orientations)
      if (rng.uniform() < density) s.coeffs[HaarKey{q, i}] = rng.gaussian();
  return s;
}

// Nonnegative cube weights |N(0,1)| thinned to `density`, optionally
// restricted to cubes inside `support`.
inline CubeMap random_cube_weights(int dim, int J, double density, Rng& rng,
                                   const DyadicCube* support = nullptr) {
  CubeMap g;
  for (const DyadicCube& q : all_cubes(dim, J)) {
    if (support && !support->contains(q)) continue;
    if (rng.uniform() < density) g[q] = std::fabs(rng.gaussian());
  }
  return g;
}

}  // namespace paraprod
