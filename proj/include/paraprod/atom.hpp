#pragma once

// Constructive moment-cancellation atoms: a bounded, compactly supported
// function chi-tilde = chi_{B_{alpha M}} + P chi_{B'} whose polynomial moments
// vanish up to degree N while |phi_t * chi-tilde| stays above 1/3 on the unit
// ball for every scale t <= alpha.  The far ball B' carrying the balancing
// polynomial is pushed out by doubling D until its contribution near the
// origin is provably small; both properties are certified numerically.

#include <array>
#include <cmath>
#include <vector>

#include "paraprod/dyadic.hpp"

namespace paraprod {

// ---------------------------------------------------------------------------
// Kernel: normalized rational profile c (1 + |x|^2)^{-nu}, integral 1.
// Closed-form tails and (in 1-d) antiderivative make the ball convolution
// exact; the profile decays like |x|^{-2 nu}.
// ---------------------------------------------------------------------------

class AtomKernel {
 public:
  explicit AtomKernel(int dim = 1, int nu = 4, double complex_tilt = 0.0)
      : dim_(dim), nu_(nu), tilt_(complex_tilt) {
    require(dim == 1 || dim == 2, "AtomKernel supports dim 1 or 2");
    require(nu >= 2, "AtomKernel needs nu >= 2");
    if (dim_ == 1) {
      norm_ = 1.0 / (2.0 * antiderivative_raw_inf());
    } else {
      norm_ = double(nu_ - 1) / M_PI;
    }
  }

  int dim() const { return dim_; }
  double decay_exponent() const { return 2.0 * nu_; }
  double complex_tilt() const { return tilt_; }

  // real part of the kernel (the part the construction uses; its integral is 1)
  double operator()(double r) const {
    return norm_ * std::pow(1.0 + r * r, -double(nu_));
  }
  // imaginary part: tilt * (2^n phi(2x) - phi(x)), integral zero
  double imag_part(double r) const {
    return tilt_ * (std::ldexp((*this)(2.0 * r), dim_) - (*this)(r));
  }

  // integral of |phi| outside the ball of radius R
  double tail(double R) const {
    if (dim_ == 1) return 2.0 * norm_ * (antiderivative_raw_inf() - antiderivative_raw(R));
    return norm_ * M_PI * std::pow(1.0 + R * R, 1.0 - double(nu_)) /
           double(nu_ - 1);
  }

  // 1-d: integral of phi over [lo, hi]
  double integral_1d(double lo, double hi) const {
    require(dim_ == 1, "integral_1d is a 1-d facility");
    return norm_ * (antiderivative_raw(hi) - antiderivative_raw(lo));
  }

 private:
  // I_nu(x) = int_0^x (1+t^2)^{-nu} dt by the standard reduction formula
  double antiderivative_raw(double x) const {
    double val = std::atan(x);
    for (int k = 2; k <= nu_; ++k)
      val = x / (2.0 * (k - 1) * std::pow(1.0 + x * x, double(k - 1))) +
            (2.0 * k - 3.0) / (2.0 * (k - 1)) * val;
    return val;
  }
  double antiderivative_raw_inf() const {
    double val = M_PI / 2.0;
    for (int k = 2; k <= nu_; ++k) val *= (2.0 * k - 3.0) / (2.0 * (k - 1));
    return val;
  }

  int dim_;
  int nu_;
  double tilt_;
  double norm_ = 1.0;
};

// ---------------------------------------------------------------------------
// Small polynomial utilities (multi-index coefficients, quadrature Gram)
// ---------------------------------------------------------------------------

inline std::vector<std::vector<int>> multi_indices(int dim, int max_degree) {
  std::vector<std::vector<int>> out;
  if (dim == 1) {
    for (int d = 0; d <= max_degree; ++d) out.push_back({d});
  } else {
    for (int d = 0; d <= max_degree; ++d)
      for (int i = 0; i <= d; ++i) out.push_back({i, d - i});
  }
  return out;
}

struct Poly {
  int dim = 1;
  std::vector<std::vector<int>> exponents;
  std::vector<double> coeffs;

  double eval(const std::array<double, 2>& x) const {
    double s = 0.0;
    for (size_t i = 0; i < coeffs.size(); ++i) {
      double term = coeffs[i];
      for (int a = 0; a < dim; ++a)
        for (int e = 0; e < exponents[i][size_t(a)]; ++e) term *= x[size_t(a)];
      s += term;
    }
    return s;
  }
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] (Newton on Legendre polynomials).
inline void gauss_legendre(int n, std::vector<double>& x,
                           std::vector<double>& w) {
  x.resize(size_t(n));
  w.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    x[size_t(i)] = t;
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (t * p1 - p0) / (t * t - 1.0);
    w[size_t(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

// Central monomial moment int_{B_R(0)} u0^a u1^b du in long double; zero for
// odd exponents, closed form otherwise.
inline long double central_ball_moment(int dim, long double R, int a, int b) {
  if (a % 2 || (dim == 2 && b % 2)) return 0.0L;
  if (dim == 1) return 2.0L * powl(R, a + 1) / (long double)(a + 1);
  auto dfact = [](int k) {
    long double v = 1.0L;
    for (; k > 1; k -= 2) v *= k;
    return v;
  };
  const long double angular =
      2.0L * (long double)(M_PI) * dfact(a - 1) * dfact(b - 1) / dfact(a + b);
  return powl(R, a + b + 2) / (long double)(a + b + 2) * angular;
}

inline long double binomial(int n, int k) {
  long double v = 1.0L;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

// int over the ball B_R(0) in x of x0^{g0} x1^{g1} * prod (x - z)^{m}, where
// the polynomial factor is given by monomial data in u = x - z and z lies on
// axis 0.  Exact (binomial expansion into central moments).
inline long double shifted_poly_ball_moment(
    int dim, long double R, long double z,
    const std::vector<std::vector<int>>& exps,
    const std::vector<long double>& coeffs, int g0, int g1) {
  long double total = 0.0L;
  for (size_t m = 0; m < coeffs.size(); ++m) {
    if (coeffs[m] == 0.0L) continue;
    const int m0 = exps[m][0];
    const int m1 = dim == 2 ? exps[m][1] : 0;
    // (x0 - z)^{m0} = sum_i binom(m0, i) x0^i (-z)^{m0 - i}
    for (int i = 0; i <= m0; ++i) {
      const long double w =
          coeffs[m] * binomial(m0, i) * powl(-z, m0 - i);
      total += w * central_ball_moment(dim, R, i + g0, m1 + g1);
    }
  }
  return total;
}

// int over the ball B_R(z) in x of x0^{g0} x1^{g1} * P(x - z) with P given by
// monomial data in u = x - z.  Exact.
inline long double poly_times_monomial_far_ball(
    int dim, long double R, long double z,
    const std::vector<std::vector<int>>& exps,
    const std::vector<long double>& coeffs, int g0, int g1) {
  long double total = 0.0L;
  for (size_t m = 0; m < coeffs.size(); ++m) {
    if (coeffs[m] == 0.0L) continue;
    const int m0 = exps[m][0];
    const int m1 = dim == 2 ? exps[m][1] : 0;
    // x0^{g0} = (u0 + z)^{g0} expanded into u powers
    for (int i = 0; i <= g0; ++i) {
      const long double w = coeffs[m] * binomial(g0, i) * powl(z, g0 - i);
      total += w * central_ball_moment(dim, R, m0 + i, m1 + g1);
    }
  }
  return total;
}

// Quadrature over the ball of radius R centered at c for the smooth
// (non-polynomial) kernel integrands.
template <class F>
double ball_quadrature(int dim, double R, const std::array<double, 2>& c,
                       F&& f, int radial_nodes = 24, int angular_nodes = 32) {
  std::vector<double> gx, gw;
  gauss_legendre(radial_nodes, gx, gw);
  if (dim == 1) {
    double s = 0.0;
    for (size_t i = 0; i < gx.size(); ++i)
      s += gw[i] * f({c[0] + R * gx[i], 0.0});
    return s * R;
  }
  double s = 0.0;
  for (size_t i = 0; i < gx.size(); ++i) {
    const double r = R * 0.5 * (gx[i] + 1.0);
    double ring = 0.0;
    for (int a = 0; a < angular_nodes; ++a) {
      const double th = 2.0 * M_PI * double(a) / double(angular_nodes);
      ring += f({c[0] + r * std::cos(th), c[1] + r * std::sin(th)});
    }
    ring *= 2.0 * M_PI / double(angular_nodes);
    s += gw[i] * ring * r;
  }
  return s * R * 0.5;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Atom construction
// ---------------------------------------------------------------------------

struct Atom {
  int dim = 1;
  double big_radius = 0.0;           // alpha M
  double far_center_distance = 0.0;  // D; the far ball is B_1(2 D e_1)
  int poly_degree = 0;               // N
  Poly poly;                         // P in coordinates centered at 2 D e_1

  double evaluate(const std::array<double, 2>& x) const {
    double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
    double value = 0.0;
    if (r2 <= big_radius * big_radius) value += 1.0;
    const std::array<double, 2> u{x[0] - 2.0 * far_center_distance,
                                  dim == 2 ? x[1] : 0.0};
    if (u[0] * u[0] + u[1] * u[1] <= 1.0) value += poly.eval(u);
    return value;
  }
};

struct AtomCertificates {
  double max_moment = 0.0;     // max_{|beta| <= N} |int chi-tilde x^beta|
  double min_conv = 0.0;       // min over sampled t <= alpha, x in B_1 of |phi_t * chi-tilde|
  double far_ball_peak = 0.0;  // max over the same samples of |phi_t * (P chi_{B'})|
  int doublings = 0;
  bool pass = false;
};

struct AtomResult {
  Atom atom;
  AtomCertificates certificates;
};

// phi_t * chi_{B_R}(x), exact in 1-d, quadrature in 2-d.
inline double kernel_ball_convolution(const AtomKernel& k, double R, double t,
                                      const std::array<double, 2>& x) {
  if (k.dim() == 1) return k.integral_1d((x[0] - R) / t, (x[0] + R) / t);
  const double scale = 1.0 / (t * t);
  return detail::ball_quadrature(
      2, R, {0.0, 0.0},
      [&](const std::array<double, 2>& y) {
        const double dx = (x[0] - y[0]) / t, dy = (x[1] - y[1]) / t;
        return scale * k(std::hypot(dx, dy));
      },
      48, 64);
}

inline AtomResult build_atom(const AtomKernel& kernel, double alpha, double p) {
  require(alpha >= 2.0, "build_atom needs alpha >= 2");
  require(p > 0.0, "build_atom needs p > 0");
  const int n = kernel.dim();

  // tail cutoff: int_{|x| >= M} |phi| <= 1/3 with M > alpha/2; the extra unit
  // absorbs the |x| <= 1 offset of the evaluation points
  double M = std::max(1.0, alpha / 2.0 + 1.0);
  while (kernel.tail(M - 0.5) > 1.0 / 3.0) M *= 2.0;
  const double big_radius = alpha * M;

  const int N = std::max(
      0, static_cast<int>(std::floor(double(n) * (1.0 / p - 1.0)))) + 1;
  const auto exps = multi_indices(n, N);
  const size_t dim_p = exps.size();

  AtomResult out;
  out.atom.dim = n;
  out.atom.big_radius = big_radius;
  out.atom.poly_degree = N;

  double D = big_radius / 2.0 + 1.0;
  for (int doubling = 0; doubling < 22; ++doubling, D *= 2.0) {
    const std::array<double, 2> z0{2.0 * D, 0.0};

    // Gram matrix of monomials u^beta over the unit ball (u = x - z0); exact
    std::vector<long double> gram(dim_p * dim_p, 0.0L);
    for (size_t i = 0; i < dim_p; ++i)
      for (size_t j = 0; j <= i; ++j) {
        const int a0 = exps[i][0] + exps[j][0];
        const int a1 = n == 2 ? exps[i][1] + exps[j][1] : 0;
        gram[i * dim_p + j] = gram[j * dim_p + i] =
            detail::central_ball_moment(n, 1.0L, a0, a1);
      }
    // Cholesky gram = L L^T
    std::vector<long double> L(dim_p * dim_p, 0.0L);
    for (size_t i = 0; i < dim_p; ++i)
      for (size_t j = 0; j <= i; ++j) {
        long double s = gram[i * dim_p + j];
        for (size_t k2 = 0; k2 < j; ++k2) s -= L[i * dim_p + k2] * L[j * dim_p + k2];
        if (i == j) {
          require(s > 0.0L, "monomial Gram matrix lost positivity");
          L[i * dim_p + i] = sqrtl(s);
        } else {
          L[i * dim_p + j] = s / L[j * dim_p + j];
        }
      }
    // orthonormal basis Q_beta = sum_m B[beta][m] u^{exps[m]} from L^{-1}
    std::vector<long double> B(dim_p * dim_p, 0.0L);
    for (size_t i = 0; i < dim_p; ++i) {
      B[i * dim_p + i] = 1.0L / L[i * dim_p + i];
      for (size_t j2 = i + 1; j2 < dim_p; ++j2) {
        long double s = 0.0L;
        for (size_t k2 = i; k2 < j2; ++k2)
          s -= L[j2 * dim_p + k2] * B[k2 * dim_p + i];
        B[j2 * dim_p + i] = s / L[j2 * dim_p + j2];
      }
    }

    // c_beta = -int_{B_{alpha M}} Q_beta(x - z0) dx, exact
    std::vector<long double> cbeta(dim_p, 0.0L);
    for (size_t bidx = 0; bidx < dim_p; ++bidx) {
      std::vector<long double> qcoeffs(dim_p, 0.0L);
      for (size_t m2 = 0; m2 <= bidx; ++m2)
        qcoeffs[m2] = B[bidx * dim_p + m2];
      cbeta[bidx] = -detail::shifted_poly_ball_moment(
          n, big_radius, z0[0], exps, qcoeffs, 0, 0);
    }
    // P(u) = sum_beta c_beta Q_beta(u), expanded to monomial coefficients
    Poly P;
    P.dim = n;
    P.exponents = exps;
    P.coeffs.assign(dim_p, 0.0);
    for (size_t bidx = 0; bidx < dim_p; ++bidx)
      for (size_t m2 = 0; m2 <= bidx; ++m2)
        P.coeffs[m2] += double(cbeta[bidx] * B[bidx * dim_p + m2]);

    out.atom.far_center_distance = D;
    out.atom.poly = P;
    out.certificates.doublings = doubling;

    // far-ball contribution near the origin, sampled over t and x in B_1
    double far_peak = 0.0, min_conv = 1e300;
    bool conv_ok = true;
    const int x_samples = n == 1 ? 81 : 25;
    for (double t = alpha; t > alpha / 64.0; t /= 2.0) {
      for (int xi = 0; xi < x_samples; ++xi) {
        std::array<double, 2> x{0.0, 0.0};
        if (n == 1) {
          x[0] = -1.0 + 2.0 * double(xi) / double(x_samples - 1);
        } else {
          const double rr = double(xi % 5) / 4.0;
          const double th = 2.0 * M_PI * double(xi / 5) / 5.0;
          x = {rr * std::cos(th), rr * std::sin(th)};
        }
        const double scale = n == 1 ? 1.0 / t : 1.0 / (t * t);
        const double far = detail::ball_quadrature(
            n, 1.0, z0,
            [&](const std::array<double, 2>& y) {
              const std::array<double, 2> u{y[0] - z0[0],
                                            n == 2 ? y[1] - z0[1] : 0.0};
              const double dx = (x[0] - y[0]) / t,
                           dy = n == 2 ? (x[1] - y[1]) / t : 0.0;
              return scale * kernel(std::hypot(dx, dy)) * P.eval(u);
            },
            48, 64);
        far_peak = std::max(far_peak, std::fabs(far));
        const double near = kernel_ball_convolution(kernel, big_radius, t, x);
        min_conv = std::min(min_conv, std::fabs(near + far));
      }
    }
    out.certificates.far_ball_peak = far_peak;
    out.certificates.min_conv = min_conv;
    conv_ok = far_peak <= 1.0 / 3.0 && min_conv >= 1.0 / 3.0;

    if (conv_ok) {
      // moment certificate: max |int chi-tilde x^gamma| for |gamma| <= N,
      // both pieces integrated exactly in long double
      std::vector<long double> pc(dim_p);
      for (size_t m2 = 0; m2 < dim_p; ++m2) pc[m2] = P.coeffs[m2];
      double max_moment = 0.0;
      for (const auto& gamma : exps) {
        const int g0 = gamma[0];
        const int g1 = n == 2 ? gamma[1] : 0;
        const long double ball_part =
            detail::central_ball_moment(n, big_radius, g0, g1);
        const long double far_part = detail::poly_times_monomial_far_ball(
            n, 1.0L, z0[0], exps, pc, g0, g1);
        max_moment =
            std::max(max_moment, double(fabsl(ball_part + far_part)));
      }
      out.certificates.max_moment = max_moment;
      out.certificates.pass = max_moment <= 1e-10;
      if (out.certificates.pass) return out;
    }
  }
  require(false, "atom builder: D-doubling failed to converge (kernel decay too weak)");
  return out;
}

}  // namespace paraprod
