#pragma once

// Periodic Littlewood-Paley calculus on the torus [0,1): band-limited
// signals at N = 2^J samples, a smooth dyadic partition of unity built from
// a mollified cutoff, Fourier paraproducts, the sublinear square operator,
// and the scale-window sparse domination of the square function.
//
// Convolution is exact frequency multiplication throughout; f_t acts as the
// multiplier phi_hat(t k) on integer frequencies k in (-N/2, N/2].

#include <complex>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "paraprod/rng.hpp"
#include "paraprod/sparse.hpp"

namespace paraprod {

// ---------------------------------------------------------------------------
// Samples and FFT
// ---------------------------------------------------------------------------

using cdouble = std::complex<double>;

struct PeriodicSignal {
  std::vector<cdouble> v;  // samples at x = m/N, N a power of two

  size_t size() const { return v.size(); }
  int log2_size() const {
    int j = 0;
    while ((size_t(1) << j) < v.size()) ++j;
    return j;
  }
  static PeriodicSignal zeros(size_t n) {
    PeriodicSignal f;
    f.v.assign(n, cdouble(0.0, 0.0));
    return f;
  }
  static PeriodicSignal constant(size_t n, cdouble c) {
    PeriodicSignal f;
    f.v.assign(n, c);
    return f;
  }
};

namespace detail {

inline void fft_inplace(std::vector<cdouble>& a, bool inverse) {
  const size_t n = a.size();
  require((n & (n - 1)) == 0 && n > 0, "fft needs a power-of-two size");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / double(len) * (inverse ? 1.0 : -1.0);
    const cdouble wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cdouble u = a[i + k], t = a[i + k + len / 2] * w;
        a[i + k] = u + t;
        a[i + k + len / 2] = u - t;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (cdouble& x : a) x /= double(n);
}

}  // namespace detail

// Fourier coefficients f_hat(k), index k in [0, N) with physical frequency
// k <= N/2 ? k : k - N.
inline std::vector<cdouble> dft(const PeriodicSignal& f) {
  std::vector<cdouble> a = f.v;
  detail::fft_inplace(a, false);
  for (cdouble& x : a) x /= double(f.size());
  return a;
}

inline PeriodicSignal idft(std::vector<cdouble> coeffs) {
  for (cdouble& x : coeffs) x *= double(coeffs.size());
  detail::fft_inplace(coeffs, true);
  PeriodicSignal f;
  f.v = std::move(coeffs);
  return f;
}

inline long physical_frequency(size_t idx, size_t n) {
  return idx <= n / 2 ? long(idx) : long(idx) - long(n);
}

// ---------------------------------------------------------------------------
// Smooth cutoff profile
// ---------------------------------------------------------------------------

// Radial profile equal to 1 on |xi| <= plateau and 0 on |xi| >= support,
// interpolating with the normalized tail integral of exp(-1/(1-s^2)).
class SmoothCutoff {
 public:
  SmoothCutoff() : SmoothCutoff(1.0, 2.0) {}
  SmoothCutoff(double plateau, double support)
      : plateau_(plateau), support_(support) {
    require(plateau > 0.0 && support > plateau,
            "cutoff needs 0 < plateau < support");
  }

  double plateau() const { return plateau_; }
  double support() const { return support_; }

  double operator()(double xi) const {
    const double r = std::fabs(xi);
    if (r <= plateau_) return 1.0;
    if (r >= support_) return 0.0;
    return shape((r - plateau_) / (support_ - plateau_));
  }

  // shape(0) = 1, shape(1) = 0, C-infinity in between
  static double shape(double u) {
    const std::vector<double>& tab = table();
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    const double x = u * double(tab.size() - 1);
    const auto i = static_cast<size_t>(x);
    const double frac = x - double(i);
    if (i + 1 >= tab.size()) return tab.back();
    return tab[i] * (1.0 - frac) + tab[i + 1] * frac;
  }

 private:
  static const std::vector<double>& table() {
    static const std::vector<double> tab = [] {
      auto bump = [](double s) {
        const double z = 1.0 - s * s;
        return z > 0.0 ? std::exp(-1.0 / z) : 0.0;
      };
      const size_t m = 1 << 14;  // Simpson panels
      std::vector<double> density(m + 1);
      for (size_t i = 0; i <= m; ++i)
        density[i] = bump(2.0 * double(i) / double(m) - 1.0);
      std::vector<double> prefix(m + 1, 0.0);
      for (size_t i = 2; i <= m; i += 2)
        prefix[i] = prefix[i - 2] +
                    (density[i - 2] + 4.0 * density[i - 1] + density[i]) / 3.0;
      for (size_t i = 1; i <= m; i += 2)
        prefix[i] = 0.5 * (prefix[i - 1] + prefix[std::min(i + 1, m)]);
      const double total = prefix[m];
      std::vector<double> tab(m + 1);
      for (size_t i = 0; i <= m; ++i) tab[i] = 1.0 - prefix[i] / total;
      return tab;
    }();
    return tab;
  }

  double plateau_;
  double support_;
};

// ---------------------------------------------------------------------------
// Littlewood-Paley family
// ---------------------------------------------------------------------------

struct PartitionCertificate {
  double residual = 0.0;       // sup over covered band of |1 - sum psi|
  bool support_ok = false;     // psi(j,k) = 0 outside a 2^j <= |k| <= b 2^j
  bool nonnegative_ok = false; // telescoped pieces stay in [0, 1]
  long band_lo = 0, band_hi = 0;
};

struct LPFamily {
  int log2_n = 10;
  double a = 1.0, b = 4.0, a_prime = 0.5;
  double plateau_c = 0.25;  // radius where phi_hat == 1
  int j_min = 0, j_max = 7;
  int m = 4;  // residue-class spacing
  SmoothCutoff big_phi;   // plateau 2a, support b; psi telescopes from it
  SmoothCutoff phi_low;   // plateau c, support a'
  SmoothCutoff theta_lo;  // rises from 0 to 1 across [(a-a')/w, a-a']
  SmoothCutoff theta_hi;  // falls from 1 to 0 across [b+a', (b+a')w]
  std::vector<std::vector<double>> psi;  // [j - j_min][frequency index]
  PartitionCertificate certificate;

  size_t samples() const { return size_t(1) << log2_n; }
  int scales() const { return j_max - j_min + 1; }

  double psi_hat(int j, long k) const {
    require(j >= j_min && j <= j_max, "scale out of covered range");
    const double r = std::ldexp(std::fabs(double(k)), -j);
    return big_phi(r) - big_phi(2.0 * r);
  }
  double phi_hat_at_scale(int j, long k) const {
    return phi_low(std::ldexp(std::fabs(double(k)), -j));
  }
  double theta_hat(double xi) const {
    const double r = std::fabs(xi);
    return (1.0 - theta_lo(r)) * theta_hi(r);
  }
};

inline LPFamily build_lp_family(int log2_n, double a = 1.0, double b = 4.0,
                                double a_prime = 0.5,
                                std::optional<double> plateau_c = {}) {
  require(0.0 < a_prime && a_prime < a && a < b, "need 0 < a' < a < b");
  require(b > 2.0 * a, "telescoped profile needs b > 2a");
  LPFamily fam;
  fam.log2_n = log2_n;
  fam.a = a;
  fam.b = b;
  fam.a_prime = a_prime;
  fam.plateau_c = plateau_c.value_or(a_prime / 2.0);
  require(fam.plateau_c < a_prime, "phi plateau must sit inside its support");
  fam.big_phi = SmoothCutoff(2.0 * a, b);
  fam.phi_low = SmoothCutoff(fam.plateau_c, a_prime);

  const size_t n = size_t(1) << log2_n;
  fam.j_min = 0;
  fam.j_max = 0;
  while (b * std::ldexp(1.0, fam.j_max + 1) <= double(n) / 2.0) ++fam.j_max;
  require(fam.j_max >= fam.j_min, "grid too small for one annulus");

  // residue spacing: smallest m with 2^m (a - a') > b + a'
  fam.m = 1;
  while (std::ldexp(a - a_prime, fam.m) <= b + a_prime) ++fam.m;

  // theta profile: 1 on [a-a', b+a'] with skins thin enough that pieces at
  // scales m apart stay disjoint
  const double margin = std::ldexp(a - a_prime, fam.m) / (b + a_prime);
  require(margin > 1.0, "infeasible residue spacing");
  const double w = std::min(1.25, std::sqrt(margin) * 0.98);
  require(w > 1.0, "infeasible theta skin");
  fam.theta_lo = SmoothCutoff((a - a_prime) / w, a - a_prime);
  fam.theta_hi = SmoothCutoff(b + a_prime, (b + a_prime) * w);

  fam.psi.assign(size_t(fam.scales()), std::vector<double>(n, 0.0));
  for (int j = fam.j_min; j <= fam.j_max; ++j)
    for (size_t idx = 0; idx < n; ++idx) {
      const long k = physical_frequency(idx, n);
      fam.psi[size_t(j - fam.j_min)][idx] = fam.psi_hat(j, k);
    }

  // certification: telescoping partition on the covered band, support, range
  PartitionCertificate& cert = fam.certificate;
  cert.band_lo = long(std::ceil(b * std::ldexp(1.0, fam.j_min - 1)));
  cert.band_hi = long(std::floor(2.0 * a * std::ldexp(1.0, fam.j_max)));
  cert.residual = 0.0;
  cert.support_ok = true;
  cert.nonnegative_ok = true;
  for (size_t idx = 0; idx < n; ++idx) {
    const long k = physical_frequency(idx, n);
    double sum = 0.0;
    for (int j = fam.j_min; j <= fam.j_max; ++j) {
      const double v = fam.psi[size_t(j - fam.j_min)][idx];
      sum += v;
      if (v < 0.0 || v > 1.0) cert.nonnegative_ok = false;
      const double absk = std::fabs(double(k));
      if (v != 0.0 && (absk < a * std::ldexp(1.0, j) - 1e-12 ||
                       absk > b * std::ldexp(1.0, j) + 1e-12))
        cert.support_ok = false;
    }
    if (std::labs(k) >= cert.band_lo && std::labs(k) <= cert.band_hi)
      cert.residual = std::max(cert.residual, std::fabs(1.0 - sum));
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Multiplier operators
// ---------------------------------------------------------------------------

inline PeriodicSignal apply_multiplier(
    const std::vector<cdouble>& coeffs,
    const std::function<double(long)>& mult) {
  const size_t n = coeffs.size();
  std::vector<cdouble> out(n);
  for (size_t idx = 0; idx < n; ++idx)
    out[idx] = coeffs[idx] * mult(physical_frequency(idx, n));
  return idft(std::move(out));
}

inline PeriodicSignal delta_j(const LPFamily& fam, const PeriodicSignal& f,
                              int j) {
  auto coeffs = dft(f);
  const auto& tab = fam.psi[size_t(j - fam.j_min)];
  for (size_t idx = 0; idx < coeffs.size(); ++idx) coeffs[idx] *= tab[idx];
  return idft(std::move(coeffs));
}

// phi_{2^{-j}} * f, the low-pass companion at scale j
inline PeriodicSignal low_pass(const LPFamily& fam, const PeriodicSignal& f,
                               int j) {
  auto coeffs = dft(f);
  const size_t n = coeffs.size();
  for (size_t idx = 0; idx < n; ++idx)
    coeffs[idx] *= fam.phi_hat_at_scale(j, physical_frequency(idx, n));
  return idft(std::move(coeffs));
}

// phi_t * f for arbitrary t > 0
inline PeriodicSignal mollify(const LPFamily& fam, const PeriodicSignal& f,
                              double t) {
  auto coeffs = dft(f);
  const size_t n = coeffs.size();
  for (size_t idx = 0; idx < n; ++idx)
    coeffs[idx] *= fam.phi_low(t * std::fabs(double(physical_frequency(idx, n))));
  return idft(std::move(coeffs));
}

inline std::vector<PeriodicSignal> lp_pieces(const LPFamily& fam,
                                             const PeriodicSignal& f) {
  std::vector<PeriodicSignal> out;
  auto coeffs = dft(f);
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    auto c = coeffs;
    const auto& tab = fam.psi[size_t(j - fam.j_min)];
    for (size_t idx = 0; idx < c.size(); ++idx) c[idx] *= tab[idx];
    out.push_back(idft(std::move(c)));
  }
  return out;
}

// square function S_psi(f) per sample
inline std::vector<double> s_psi(const LPFamily& fam,
                                 const PeriodicSignal& f) {
  std::vector<double> out(f.size(), 0.0);
  for (const PeriodicSignal& piece : lp_pieces(fam, f))
    for (size_t i = 0; i < out.size(); ++i) out[i] += std::norm(piece.v[i]);
  for (double& v : out) v = std::sqrt(v);
  return out;
}

// ---------------------------------------------------------------------------
// Torus norms
// ---------------------------------------------------------------------------

inline double lp_norm(const std::vector<double>& samples, double p) {
  require(p > 0.0, "lp_norm needs p > 0");
  double s = 0.0;
  for (double v : samples) s += std::pow(std::fabs(v), p);
  return std::pow(s / double(samples.size()), 1.0 / p);
}

inline double lp_norm(const PeriodicSignal& f, double p) {
  std::vector<double> mag(f.size());
  for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(f.v[i]);
  return lp_norm(mag, p);
}

inline double linf_norm(const PeriodicSignal& f) {
  double m = 0.0;
  for (const cdouble& v : f.v) m = std::max(m, std::abs(v));
  return m;
}

// grand maximal H^p norm: sup over dyadic t = 2^{-j}, 0 <= j <= J, of
// |phi_t * f| per sample, then L^p
inline double hp_norm(const LPFamily& fam, const PeriodicSignal& f, double p) {
  std::vector<double> peak(f.size(), 0.0);
  for (int j = 0; j <= fam.log2_n; ++j) {
    PeriodicSignal m = low_pass(fam, f, j);
    for (size_t i = 0; i < peak.size(); ++i)
      peak[i] = std::max(peak[i], std::abs(m.v[i]));
  }
  return lp_norm(peak, p);
}

inline double dot_hr_norm(const LPFamily& fam, const PeriodicSignal& g,
                          double r) {
  return lp_norm(s_psi(fam, g), r);
}

// BMO on the torus: sup of osc_1 over intervals of dyadic length at every
// translation (wrapping), lengths 2^{-l} for 0 <= l <= J.
inline double bmo_norm(const PeriodicSignal& g) {
  const size_t n = g.size();
  double best = 0.0;
  for (size_t len = n; len >= 1; len >>= 1) {
    for (size_t start = 0; start < n; ++start) {
      cdouble mean(0.0, 0.0);
      for (size_t i = 0; i < len; ++i) mean += g.v[(start + i) & (n - 1)];
      mean /= double(len);
      double osc = 0.0;
      for (size_t i = 0; i < len; ++i)
        osc += std::abs(g.v[(start + i) & (n - 1)] - mean);
      best = std::max(best, osc / double(len));
      if (len == n) break;  // all translations of the full torus agree
    }
  }
  return best;
}

// Lipschitz scale via Littlewood-Paley pieces: sup_j 2^{j alpha} ||Delta_j g||_inf
inline double lambda_ddot_norm(const LPFamily& fam, const PeriodicSignal& g,
                               double alpha) {
  double best = 0.0;
  for (int j = fam.j_min; j <= fam.j_max; ++j)
    best = std::max(best,
                    std::pow(2.0, alpha * double(j)) * linf_norm(delta_j(fam, g, j)));
  return best;
}

// ---------------------------------------------------------------------------
// Paraproducts and the sublinear square operator
// ---------------------------------------------------------------------------

// Pi_{g,phi}(f) = sum_j (phi_{2^{-j}} * f) Delta_j g over all scales or a
// residue class j = i (mod m).
inline PeriodicSignal fourier_paraproduct(const LPFamily& fam,
                                          const PeriodicSignal& g,
                                          const PeriodicSignal& f,
                                          std::optional<int> residue = {}) {
  PeriodicSignal out = PeriodicSignal::zeros(f.size());
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    if (residue && ((j % fam.m) + fam.m) % fam.m != *residue) continue;
    PeriodicSignal lo = low_pass(fam, f, j);
    PeriodicSignal hi = delta_j(fam, g, j);
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += lo.v[i] * hi.v[i];
  }
  return out;
}

// S_{g,phi}(f) = ( sum_j |phi_{2^{-j}}*f . Delta_j g|^2 )^{1/2} per sample
inline std::vector<double> sublinear_square(const LPFamily& fam,
                                            const PeriodicSignal& g,
                                            const PeriodicSignal& f) {
  std::vector<double> out(f.size(), 0.0);
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    PeriodicSignal lo = low_pass(fam, f, j);
    PeriodicSignal hi = delta_j(fam, g, j);
    for (size_t i = 0; i < out.size(); ++i)
      out[i] += std::norm(lo.v[i] * hi.v[i]);
  }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

// square function of a residue-class paraproduct taken with the theta family
// (theta_hat == 1 on each widened product support)
inline std::vector<double> s_theta_residue(const LPFamily& fam,
                                           const PeriodicSignal& ff,
                                           int residue) {
  std::vector<double> out(ff.size(), 0.0);
  auto coeffs = dft(ff);
  const size_t n = coeffs.size();
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    if (((j % fam.m) + fam.m) % fam.m != residue) continue;
    std::vector<cdouble> c(n);
    for (size_t idx = 0; idx < n; ++idx) {
      const double r =
          std::ldexp(std::fabs(double(physical_frequency(idx, n))), -j);
      c[idx] = coeffs[idx] * fam.theta_hat(r);
    }
    PeriodicSignal piece = idft(std::move(c));
    for (size_t i = 0; i < n; ++i) out[i] += std::norm(piece.v[i]);
  }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

// Frequency supports of the residue-class terms, for the exact disjointness
// certificate.
inline std::vector<std::vector<char>> residue_term_supports(
    const LPFamily& fam, const PeriodicSignal& g, const PeriodicSignal& f,
    int residue) {
  std::vector<std::vector<char>> out;
  const size_t n = f.size();
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    if (((j % fam.m) + fam.m) % fam.m != residue) continue;
    PeriodicSignal lo = low_pass(fam, f, j);
    PeriodicSignal hi = delta_j(fam, g, j);
    PeriodicSignal term = PeriodicSignal::zeros(n);
    for (size_t i = 0; i < n; ++i) term.v[i] = lo.v[i] * hi.v[i];
    auto coeffs = dft(term);
    std::vector<char> support(n, 0);
    for (size_t idx = 0; idx < n; ++idx)
      support[idx] = std::abs(coeffs[idx]) > 1e-12 ? 1 : 0;
    out.push_back(std::move(support));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modulated bumps and the pointwise Lipschitz lower bound
// ---------------------------------------------------------------------------

// f_j with f_hat supported in c 2^{j-1} < |k| <= c 2^j and f(0) = 1,
// translated to x0 = idx0/N.
inline PeriodicSignal modulated_bump(const LPFamily& fam, int j, size_t idx0) {
  const size_t n = fam.samples();
  const double c = fam.plateau_c;
  std::vector<cdouble> coeffs(n, cdouble(0, 0));
  size_t count = 0;
  for (size_t idx = 0; idx < n; ++idx) {
    const double k = std::fabs(double(physical_frequency(idx, n)));
    if (k > c * std::ldexp(1.0, j - 1) && k <= c * std::ldexp(1.0, j) + 1e-12)
      ++count;
  }
  require(count > 0, "scale out of covered range: annulus holds no frequency");
  const double w = 1.0 / double(count);
  for (size_t idx = 0; idx < n; ++idx) {
    const long kk = physical_frequency(idx, n);
    const double k = std::fabs(double(kk));
    if (k > c * std::ldexp(1.0, j - 1) && k <= c * std::ldexp(1.0, j) + 1e-12) {
      // translation by x0: multiply by e^{-2 pi i k x0}
      const double ang = -2.0 * M_PI * double(kk) * double(idx0) / double(n);
      coeffs[idx] = w * cdouble(std::cos(ang), std::sin(ang));
    }
  }
  return idft(std::move(coeffs));
}

struct ModulatedBumpReport {
  double a_emp = 0.0;           // max ||S_{g,phi}(f)||_{p*} / ||f||_{H^p}
  double lipschitz_norm = 0.0;  // sup_j 2^{j alpha} ||Delta_j g||_inf
  double ratio = 0.0;           // lipschitz_norm / a_emp
  double ppn_constant = 0.0;    // recorded constant in the pointwise chain
  std::vector<double> per_scale_ratio;
};

inline ModulatedBumpReport modulated_bump_test(const LPFamily& fam,
                                               const PeriodicSignal& g,
                                               double p, double alpha,
                                               int trials, uint64_t seed) {
  ModulatedBumpReport rep;
  const double pstar = 1.0 / (1.0 / p - alpha);
  require(pstar > 0.0, "modulated_bump_test needs 1/p - alpha > 0");
  Rng rng(seed);
  const size_t n = fam.samples();

  // scales whose bump annulus contains at least one integer frequency
  std::vector<int> usable;
  for (int j = fam.j_min; j <= fam.j_max; ++j)
    if (fam.plateau_c * std::ldexp(1.0, j) >= 1.0) usable.push_back(j);
  require(!usable.empty(), "scale out of covered range");

  for (int j : usable) {
    for (int trial = 0; trial < std::max(1, trials); ++trial) {
      const size_t idx0 = rng.below(n);
      PeriodicSignal f = modulated_bump(fam, j, idx0);
      // phi_{2^{-j}} * f = f exactly: the annulus sits inside the plateau
      const auto s = sublinear_square(fam, g, f);
      const double num = lp_norm(s, pstar);
      const double den = hp_norm(fam, f, p);
      if (den > 0.0) rep.a_emp = std::max(rep.a_emp, num / den);
    }
  }

  rep.per_scale_ratio.assign(size_t(fam.scales()), 0.0);
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    const double v =
        std::pow(2.0, alpha * double(j)) * linf_norm(delta_j(fam, g, j));
    rep.per_scale_ratio[size_t(j - fam.j_min)] = v;
    rep.lipschitz_norm = std::max(rep.lipschitz_norm, v);
  }
  rep.ratio = rep.a_emp > 0.0 ? rep.lipschitz_norm / rep.a_emp
                              : std::numeric_limits<double>::infinity();

  // pointwise chain |Delta_j g(x0)| <= C 2^{j/p*} ||f_{j,x0} Delta_j g||_{p*}
  double cmax = 0.0;
  for (int j : usable) {
    PeriodicSignal f = modulated_bump(fam, j, 0);
    PeriodicSignal dg = delta_j(fam, g, j);
    PeriodicSignal prod = PeriodicSignal::zeros(n);
    for (size_t i = 0; i < n; ++i) prod.v[i] = f.v[i] * dg.v[i];
    const double rhs = std::pow(2.0, double(j) / pstar) * lp_norm(prod, pstar);
    if (rhs > 0.0) cmax = std::max(cmax, std::abs(dg.v[0]) / rhs);
  }
  rep.ppn_constant = cmax;
  return rep;
}

// ---------------------------------------------------------------------------
// Plancherel-Polya-Nikolskij checks
// ---------------------------------------------------------------------------

struct PpnReport {
  double norm_ratio = 0.0;    // ||f||_q / (t^{1/p - 1/q} ||f||_p)
  double lattice_lo = 0.0;    // min over trials of sampled/continuous
  double lattice_hi = 0.0;    // max over trials
  double spacing = 0.0;       // h used for the lattice check
};

inline PpnReport ppn_check(const PeriodicSignal& f, double t, double p,
                           double q, uint64_t seed = 1, int trials = 8) {
  require(p <= q, "ppn_check needs p <= q");
  const size_t n = f.size();
  {
    auto coeffs = dft(f);
    const double scale = 1.0 + lp_norm(f, 2.0);
    for (size_t idx = 0; idx < n; ++idx)
      if (std::fabs(double(physical_frequency(idx, n))) > t + 1e-9)
        require(std::abs(coeffs[idx]) < 1e-10 * scale,
                "ppn_check needs f band-limited to |k| <= t");
  }
  PpnReport rep;
  rep.norm_ratio =
      lp_norm(f, q) / (std::pow(t, 1.0 / p - 1.0 / q) * lp_norm(f, p));

  // lattice sampling at spacing h <= c/t with c = 1/4
  int l = 0;
  while (std::ldexp(1.0, -l) > 0.25 / t) ++l;
  const size_t cells = size_t(1) << l;
  require(cells <= n, "grid too coarse for the lattice spacing");
  const size_t per_cell = n / cells;
  rep.spacing = 1.0 / double(cells);
  const double continuous = std::pow(rep.spacing, -1.0 / p) * lp_norm(f, p);
  Rng rng(seed);
  rep.lattice_lo = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < trials; ++trial) {
    double s = 0.0;
    for (size_t cell = 0; cell < cells; ++cell) {
      const size_t pick = cell * per_cell + rng.below(per_cell);
      s += std::pow(std::abs(f.v[pick]), p);
    }
    const double sampled = std::pow(s, 1.0 / p);
    const double ratio = sampled / continuous;
    rep.lattice_lo = std::min(rep.lattice_lo, ratio);
    rep.lattice_hi = std::max(rep.lattice_hi, ratio);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Oscillation bound for mollified BMO functions
// ---------------------------------------------------------------------------

// sup_Q |phi_t * (g - <g>_Q)| / ( (1 + |log(t / l(Q))|) ||g||_BMO )
inline double bmo_convolution_bound(const LPFamily& fam,
                                    const PeriodicSignal& g,
                                    int interval_level, size_t interval_pos,
                                    double t) {
  const size_t n = g.size();
  const size_t len = n >> interval_level;
  require(len >= 1, "interval finer than the sample grid");
  const double lq = 1.0 / double(size_t(1) << interval_level);
  require(t > lq, "bmo_convolution_bound needs t > l(Q)");
  cdouble mean(0, 0);
  for (size_t i = 0; i < len; ++i) mean += g.v[interval_pos * len + i];
  mean /= double(len);
  PeriodicSignal shifted = g;
  for (cdouble& v : shifted.v) v -= mean;
  PeriodicSignal conv = mollify(fam, shifted, t);
  double sup = 0.0;
  for (size_t i = 0; i < len; ++i)
    sup = std::max(sup, std::abs(conv.v[interval_pos * len + i]));
  if (sup == 0.0) return 0.0;
  const double bmo = bmo_norm(g);
  require(bmo > 0.0, "bmo_convolution_bound needs a non-constant g");
  return sup / ((1.0 + std::fabs(std::log(t / lq))) * bmo);
}

// ---------------------------------------------------------------------------
// Non-tangential maximal function and the scale-window sparse domination
// ---------------------------------------------------------------------------

// M*_{grad psi}(g)(x) = sup_j sup_{|x-y| <= 2^{-j}} |(grad psi)_{2^{-j}} * g(y)|
inline std::vector<double> nontangential_max_gradient(const LPFamily& fam,
                                                      const PeriodicSignal& g) {
  const size_t n = g.size();
  std::vector<double> out(n, 0.0);
  auto coeffs = dft(g);
  for (int j = fam.j_min; j <= fam.j_max; ++j) {
    std::vector<cdouble> c(n);
    for (size_t idx = 0; idx < n; ++idx) {
      const long k = physical_frequency(idx, n);
      const double scaled = std::ldexp(double(k), -j);
      // (grad psi)_t has multiplier 2 pi i (t k) psi_hat(t k)
      c[idx] = coeffs[idx] * cdouble(0.0, 2.0 * M_PI * scaled) *
               fam.psi[size_t(j - fam.j_min)][idx];
    }
    PeriodicSignal w = idft(std::move(c));
    const auto radius = static_cast<size_t>(
        std::min(double(n), std::floor(std::ldexp(double(n), -j))));
    for (size_t x = 0; x < n; ++x) {
      double peak = 0.0;
      for (size_t d = 0; d <= radius; ++d) {
        peak = std::max(peak, std::abs(w.v[(x + d) & (n - 1)]));
        peak = std::max(peak, std::abs(w.v[(x + n - d) & (n - 1)]));
      }
      out[x] = std::max(out[x], peak);
    }
  }
  return out;
}

struct ContinuousSparseResult {
  LLOResult llo;
  double remainder_norm_r = 0.0;  // || alpha^{-1} sum <M*^s>^{1/s} chi_Q ||_r
};

// Scale-window localization S_alpha(g|Q) fed to the generic engine, with the
// non-tangential remainder as the second dominator term.
inline ContinuousSparseResult continuous_sparse_square(
    const LPFamily& fam, const PeriodicSignal& g, double alpha,
    const DyadicCube& top, double s, double eta = 0.5,
    std::optional<double> r_for_norm = {}) {
  require(alpha > 1.0, "continuous_sparse_square needs alpha > sqrt(n) = 1");
  const int J = fam.log2_n;
  const size_t n = fam.samples();
  const double log2_alpha = std::log2(alpha);

  // suffix[j - j_min][x] = sum_{j' >= j} |Delta_{j'} g(x)|^2
  std::vector<std::vector<double>> suffix(size_t(fam.scales()) + 1,
                                          std::vector<double>(n, 0.0));
  {
    auto pieces = lp_pieces(fam, g);
    for (int j = fam.j_max; j >= fam.j_min; --j) {
      const size_t row = size_t(j - fam.j_min);
      for (size_t x = 0; x < n; ++x)
        suffix[row][x] =
            suffix[row + 1][x] + std::norm(pieces[size_t(j - fam.j_min)].v[x]);
    }
  }
  // window floor for a cube at `level`: smallest j with 2^{-j} <= alpha l(Q)
  auto window_floor = [&](int level) {
    return static_cast<int>(std::ceil(double(level) - log2_alpha - 1e-12));
  };
  require(window_floor(top.level) >= fam.j_min,
          "insufficient scale coverage for alpha l(top)");

  auto window_field = [&](int j_from) {
    // sqrt of suffix starting at max(j_from, j_min); empty window -> zero
    std::vector<double> out(n, 0.0);
    const int j0 = std::max(j_from, fam.j_min);
    if (j0 > fam.j_max) return out;
    const size_t row = size_t(j0 - fam.j_min);
    for (size_t x = 0; x < n; ++x) out[x] = std::sqrt(suffix[row][x]);
    return out;
  };

  const auto mstar = nontangential_max_gradient(fam, g);

  Localization loc;
  loc.name = "scale-window-square";
  loc.dim = 1;
  loc.resolution = J;
  loc.f_Q = [&, window_floor, window_field](const DyadicCube& q) {
    Signal f = Signal::zeros(1, J);
    const auto field = window_field(window_floor(q.level));
    for_each_cell(q, J, [&](size_t cell) { f.values[cell] = field[cell]; });
    return f;
  };
  loc.f_PQ = [&, window_floor](const DyadicCube& p, const DyadicCube& q) {
    Signal f = Signal::zeros(1, J);
    const int jq = std::max(window_floor(q.level), fam.j_min);
    const int jp = std::max(window_floor(p.level), fam.j_min);
    if (jq > fam.j_max) return f;
    const size_t row_q = size_t(jq - fam.j_min);
    const size_t row_p =
        size_t(std::min(jp, fam.j_max + 1) - fam.j_min);
    for_each_cell(q, J, [&](size_t cell) {
      const double d = suffix[row_q][cell] - suffix[row_p][cell];
      f.values[cell] = d > 0.0 ? std::sqrt(d) : 0.0;
    });
    return f;
  };
  loc.f_pq_level_only = true;
  loc.remainder = [&, alpha, s](const DyadicCube& q) {
    double sum = 0.0;
    size_t cnt = 0;
    for_each_cell(q, J, [&](size_t cell) {
      sum += std::pow(mstar[cell], s);
      ++cnt;
    });
    return std::pow(sum / double(cnt), 1.0 / s) / alpha;
  };

  SparseConfig cfg;
  cfg.eta = eta;
  cfg.dim = 1;
  cfg.s = s;
  cfg.t = 1.0;

  ContinuousSparseResult out;
  out.llo = llo_dominate(loc, top, cfg);
  if (r_for_norm) {
    Signal rem = out.llo.remainder_field;
    out.remainder_norm_r = lp_norm(rem, *r_for_norm);
  }
  return out;
}

}  // namespace paraprod
