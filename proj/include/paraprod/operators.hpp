#pragma once

// Dyadic operators: square function S_d, maximal function M_d, the
// paraproduct pi_g with its formal adjoint, and the pointwise Hedberg bound.

#include <cmath>
#include <optional>
#include <vector>

#include "paraprod/dyadic.hpp"

namespace paraprod {

// Exponent bookkeeping for the two mapping regimes:
//   (i)  1/q = 1/p + 1/r
//   (ii) 1/p* = 1/p - alpha/n with 0 <= alpha*p < n
struct ExponentTriple {
  double p = 2.0;
  double q = 1.0;
  double r = 2.0;
  std::optional<double> alpha;
  std::optional<double> p_star;

  static ExponentTriple holder(double p, double q, double r) {
    ExponentTriple t;
    t.p = p;
    t.q = q;
    t.r = r;
    require(std::fabs(1.0 / q - 1.0 / p - 1.0 / r) <= 1e-12,
            "exponents must satisfy 1/q = 1/p + 1/r");
    return t;
  }

  static ExponentTriple lipschitz(double p, double alpha, int dim) {
    ExponentTriple t;
    t.p = p;
    t.alpha = alpha;
    require(alpha >= 0.0 && alpha * p < double(dim),
            "lipschitz regime needs 0 <= alpha*p < n");
    const double inv = 1.0 / p - alpha / double(dim);
    t.p_star = 1.0 / inv;
    t.q = *t.p_star;
    t.r = std::numeric_limits<double>::infinity();
    return t;
  }
};

// S_d(g)(x) = ( sum_{Q,i} <g,h^i_Q>^2 chi_Q(x) / |Q| )^{1/2}, exact per cell.
inline Signal square_function(const HaarSpectrum& g) {
  const int n = g.dim, J = g.max_level;
  std::vector<std::vector<double>> w(static_cast<size_t>(J) + 1);
  for (const auto& [key, c] : g.coeffs) {
    const int k = key.cube.level;
    auto& lvl = w[static_cast<size_t>(k)];
    if (lvl.empty()) lvl.assign(cell_count(n, k), 0.0);
    lvl[cube_linear_index(key.cube)] += c * c * std::ldexp(1.0, k * n);
  }
  Signal sq = accumulate_levels(n, J, w);
  for (double& v : sq.values) v = std::sqrt(v);
  return sq;
}

// M_d(f)(x) = max over dyadic Q containing x (within the root) of |<f>_Q|.
inline Signal maximal_function(const Signal& f) {
  const auto avg = level_averages(f);
  const int n = f.dim, J = f.resolution;
  std::vector<double> best{std::fabs(avg[0][0])};
  for (int k = 1; k <= J; ++k) {
    std::vector<double> next(cell_count(n, k));
    for (size_t p = 0; p < next.size(); ++p) {
      DyadicCube q = cube_from_linear(n, k, p);
      next[p] = std::max(best[cube_linear_index(q.parent())],
                         std::fabs(avg[k][p]));
    }
    best = std::move(next);
  }
  Signal out = Signal::zeros(n, J);
  out.values = std::move(best);
  return out;
}

// pi_g(f): coeffs [Q,i] = <f>_Q <g, h^i_Q>, mean 0.
inline HaarSpectrum paraproduct(const HaarSpectrum& g, const Signal& f) {
  require(f.dim == g.dim, "paraproduct dimension mismatch");
  require(f.resolution >= g.max_level,
          "paraproduct needs f.resolution >= g.max_level");
  const auto avg = level_averages(f);
  HaarSpectrum out;
  out.dim = g.dim;
  out.max_level = g.max_level;
  out.mean = 0.0;
  for (const auto& [key, c] : g.coeffs) {
    const double a = avg[static_cast<size_t>(key.cube.level)]
                        [cube_linear_index(key.cube)];
    const double v = a * c;
    if (v != 0.0) out.coeffs[key] = v;
  }
  return out;
}

// pi_g^t(f) = sum_{Q,i} <f,h^i_Q> <g,h^i_Q> chi_Q / |Q| as an exact Signal.
inline Signal adjoint_paraproduct(const HaarSpectrum& g, const Signal& f) {
  require(f.dim == g.dim, "adjoint paraproduct dimension mismatch");
  require(f.resolution >= g.max_level,
          "adjoint paraproduct needs f.resolution >= g.max_level");
  const int n = f.dim, J = f.resolution;
  HaarSpectrum fs = analyze(f);
  std::vector<std::vector<double>> w(static_cast<size_t>(J) + 1);
  for (const auto& [key, c] : g.coeffs) {
    auto it = fs.coeffs.find(key);
    if (it == fs.coeffs.end()) continue;
    const int k = key.cube.level;
    auto& lvl = w[static_cast<size_t>(k)];
    if (lvl.empty()) lvl.assign(cell_count(n, k), 0.0);
    lvl[cube_linear_index(key.cube)] +=
        c * it->second * std::ldexp(1.0, k * n);
  }
  return accumulate_levels(n, J, w);
}

// g = sum_{|I| = 2^-l} |I|^{1/2} h_I on the unit interval: the symbol whose
// square function is exactly chi_{[0,1)} at every exponent.
inline HaarSpectrum flat_square_symbol(int level, int J) {
  require(level < J, "flat_square_symbol needs level < J");
  HaarSpectrum g;
  g.dim = 1;
  g.max_level = J;
  const double coeff = std::pow(2.0, -0.5 * level);  // |I|^{1/2}
  Orientation i{{1}};
  for (int pos = 0; pos < (1 << level); ++pos)
    g.coeffs[HaarKey{DyadicCube{level, {pos}}, i}] = coeff;
  return g;
}

struct HedbergRatio {
  Signal ratio;                      // per-cell certified quotient; 0/0 -> 0
  std::vector<size_t> flagged_cells; // cells with zero denominator but nonzero numerator
  double max_ratio = 0.0;
};

// Per-cell ratio  S_d(pi_g f) / ( ||g||_Lambda * ||f||_{H^p}^{alpha p/n} * M_d(f)^{p/p*} ).
// The norms are passed in so callers control how they were produced.
inline HedbergRatio hedberg_ratio(const HaarSpectrum& g, const Signal& f,
                                  const ExponentTriple& t,
                                  double lambda_norm_g, double hp_norm_f) {
  require(t.alpha.has_value() && t.p_star.has_value(),
          "hedberg_ratio needs the lipschitz regime exponents");
  const int n = f.dim;
  require(*t.alpha * t.p < double(n) && *t.alpha * t.p > 0.0,
          "hedberg_ratio needs 0 < alpha*p < n");
  bool zero_signal = true;
  for (double v : f.values)
    if (v != 0.0) zero_signal = false;
  require(!zero_signal, "hedberg_ratio needs f not identically zero");

  const Signal num = square_function(paraproduct(g, f));
  const Signal md = maximal_function(f);
  const double scale =
      lambda_norm_g * std::pow(hp_norm_f, *t.alpha * t.p / double(n));
  const double exponent = t.p / *t.p_star;

  HedbergRatio out;
  out.ratio = Signal::zeros(f.dim, f.resolution);
  for (size_t c = 0; c < num.values.size(); ++c) {
    const double denom = scale * std::pow(md.values[c], exponent);
    if (denom == 0.0) {
      if (num.values[c] != 0.0) out.flagged_cells.push_back(c);
      continue;
    }
    out.ratio.values[c] = num.values[c] / denom;
    out.max_ratio = std::max(out.max_ratio, out.ratio.values[c]);
  }
  return out;
}

}  // namespace paraprod
