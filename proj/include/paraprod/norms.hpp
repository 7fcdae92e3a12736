#pragma once

// Exact evaluation of the dyadic (quasi-)norms: L^p, H^p_d (maximal), and
// dot-H^p_d (square function), the homogeneous Lipschitz / BMO scale, and the
// maximal-vs-square comparability quotient.

#include <cmath>
#include <optional>
#include <string>

#include "paraprod/operators.hpp"

namespace paraprod {

enum class NormKind { Lp, Hp_d, dotHp_d, Lambda_d, BMO_d };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::Lp: return "Lp";
    case NormKind::Hp_d: return "Hp_d";
    case NormKind::dotHp_d: return "dotHp_d";
    case NormKind::Lambda_d: return "Lambda_d";
    case NormKind::BMO_d: return "BMO_d";
  }
  return "?";
}

struct NormReport {
  NormKind kind = NormKind::Lp;
  double p = 1.0;
  double alpha = 0.0;               // Lambda_d only
  double value = 0.0;
  std::optional<DyadicCube> witness;  // cube attaining a sup, when one exists
};

// (2^{-nJ} sum |v|^p)^{1/p}, exact.
inline double lp_norm(const Signal& f, double p) {
  require(p > 0.0, "lp_norm needs p > 0");
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::fabs(v), p);
  return std::pow(s * f.cell_measure(), 1.0 / p);
}

inline double linf_norm(const Signal& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::fabs(v));
  return m;
}

// ||f||_{H^p_d} = ||M_d f||_{L^p}
inline NormReport hp_d_norm(const Signal& f, double p) {
  NormReport r;
  r.kind = NormKind::Hp_d;
  r.p = p;
  r.value = lp_norm(maximal_function(f), p);
  return r;
}

// ||g||_{dot H^p_d} = ||S_d g||_{L^p}
inline NormReport dot_hp_d_norm(const HaarSpectrum& g, double p) {
  NormReport r;
  r.kind = NormKind::dotHp_d;
  r.p = p;
  r.value = lp_norm(square_function(g), p);
  return r;
}

// ||f||_{Lambda^alpha_d} = sup_Q l(Q)^{-alpha} osc_p(f, Q); p defaults to 1,
// alpha = 0 is BMO_d.  The witness cube attains the sup.
inline NormReport lambda_d_norm(const Signal& f, double alpha, double p = 1.0) {
  require(alpha >= 0.0, "lambda_d_norm needs alpha >= 0");
  NormReport r;
  r.kind = alpha == 0.0 ? NormKind::BMO_d : NormKind::Lambda_d;
  r.p = p;
  r.alpha = alpha;
  for (const DyadicCube& q : all_cubes(f.dim, f.resolution)) {
    const double v =
        std::pow(q.side(), -alpha) * oscillation(f, q, p);
    if (v > r.value) {
      r.value = v;
      r.witness = q;
    }
  }
  return r;
}

inline NormReport bmo_d_norm(const Signal& f, double p = 1.0) {
  return lambda_d_norm(f, 0.0, p);
}

// Convenience overload computing the two norms the bound normalizes by.
inline HedbergRatio hedberg_ratio(const HaarSpectrum& g, const Signal& f,
                                  const ExponentTriple& t) {
  const double lambda = lambda_d_norm(synthesize(g), *t.alpha).value;
  const double hp = hp_d_norm(f, t.p).value;
  return hedberg_ratio(g, f, t, lambda, hp);
}

struct EquivalenceQuotient {
  double ratio = 1.0;     // ||g||_{dot H^p_d} / inf_c ||synthesize(g) - c||_{H^p_d}
  double dot_norm = 0.0;
  double inf_norm = 0.0;
  double best_c = 0.0;
};

// Two-sided comparability quotient of the square-function norm against the
// maximal norm modulo constants.  The inf over c is located by a dense scan
// followed by golden-section refinement (p < 1 breaks convexity guarantees,
// so the scan does the global work).
inline EquivalenceQuotient maximal_vs_square_equivalence(const HaarSpectrum& g,
                                                         double p) {
  require(g.mean == 0.0, "equivalence quotient needs a mean-free symbol");
  EquivalenceQuotient out;
  out.dot_norm = dot_hp_d_norm(g, p).value;
  if (g.coeffs.empty() || out.dot_norm == 0.0) {
    out.ratio = 1.0;  // 0/0 sentinel for the degenerate symbol
    return out;
  }
  const Signal f = synthesize(g);
  const double lo0 = *std::min_element(f.values.begin(), f.values.end());
  const double hi0 = *std::max_element(f.values.begin(), f.values.end());
  auto cost = [&](double c) {
    Signal shifted = f;
    for (double& v : shifted.values) v -= c;
    return hp_d_norm(shifted, p).value;
  };
  const int kScan = 256;
  double best_c = lo0, best = cost(lo0);
  for (int i = 1; i <= kScan; ++i) {
    const double c = lo0 + (hi0 - lo0) * double(i) / kScan;
    const double v = cost(c);
    if (v < best) {
      best = v;
      best_c = c;
    }
  }
  // golden-section refinement inside the winning bracket
  const double step = (hi0 - lo0) / kScan;
  double a = best_c - step, b = best_c + step;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  while (b - a > 1e-10 * std::max(1.0, hi0 - lo0)) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = cost(x2);
    }
  }
  const double c_final = (a + b) / 2;
  const double v_final = cost(c_final);
  if (v_final < best) {
    best = v_final;
    best_c = c_final;
  }
  out.inf_norm = best;
  out.best_c = best_c;
  out.ratio = out.dot_norm / out.inf_norm;
  return out;
}

}  // namespace paraprod
