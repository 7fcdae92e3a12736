#pragma once

// Finite dyadic calculus on the unit cube [0,1)^n: dyadic cubes, the Haar
// system, and piecewise-constant signals at resolution J.  Every operation
// here is an exact finite sum; there is no quadrature anywhere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace paraprod {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------------------
// Dyadic geometry
// ---------------------------------------------------------------------------

// Cube 2^{-level}(index + [0,1)^n) inside the unit cube.
struct DyadicCube {
  int level = 0;
  std::vector<int> index;  // per-axis position, each in [0, 2^level)

  int dim() const { return static_cast<int>(index.size()); }
  double side() const { return std::ldexp(1.0, -level); }
  double measure() const { return std::ldexp(1.0, -level * dim()); }

  DyadicCube parent() const {
    require(level > 0, "root cube has no parent");
    DyadicCube p;
    p.level = level - 1;
    p.index.resize(index.size());
    for (size_t a = 0; a < index.size(); ++a) p.index[a] = index[a] >> 1;
    return p;
  }

  std::vector<DyadicCube> children() const {
    const int n = dim();
    std::vector<DyadicCube> out;
    out.reserve(size_t(1) << n);
    for (int mask = 0; mask < (1 << n); ++mask) {
      DyadicCube c;
      c.level = level + 1;
      c.index.resize(n);
      for (int a = 0; a < n; ++a) c.index[a] = 2 * index[a] + ((mask >> a) & 1);
      out.push_back(std::move(c));
    }
    return out;
  }

  // True iff `other` is contained in this cube (as a subset; equality counts).
  bool contains(const DyadicCube& other) const {
    if (other.level < level || other.dim() != dim()) return false;
    const int shift = other.level - level;
    for (int a = 0; a < dim(); ++a)
      if ((other.index[a] >> shift) != index[a]) return false;
    return true;
  }

  bool operator==(const DyadicCube& o) const {
    return level == o.level && index == o.index;
  }
};

struct CubeLess {
  bool operator()(const DyadicCube& a, const DyadicCube& b) const {
    if (a.level != b.level) return a.level < b.level;
    return a.index < b.index;
  }
};

inline DyadicCube root_cube(int dim) {
  DyadicCube q;
  q.level = 0;
  q.index.assign(static_cast<size_t>(dim), 0);
  return q;
}

inline void validate(const DyadicCube& q) {
  require(q.level >= 0, "cube level must be >= 0");
  require(!q.index.empty(), "cube needs at least one axis");
  for (int v : q.index)
    require(v >= 0 && v < (1 << q.level), "cube index out of range");
}

// All dyadic cubes of the unit cube with level in [0, max_level].
inline std::vector<DyadicCube> all_cubes(int dim, int max_level) {
  std::vector<DyadicCube> out;
  for (int k = 0; k <= max_level; ++k) {
    const long per_axis = 1L << k;
    long total = 1;
    for (int a = 0; a < dim; ++a) total *= per_axis;
    std::vector<int> idx(static_cast<size_t>(dim), 0);
    for (long t = 0; t < total; ++t) {
      DyadicCube q;
      q.level = k;
      q.index = idx;
      out.push_back(std::move(q));
      for (int a = 0; a < dim; ++a) {
        if (++idx[a] < per_axis) break;
        idx[a] = 0;
      }
    }
  }
  return out;
}

// Linear index of a cube among the 2^{n*level} cubes of its level
// (axis 0 fastest, matching the cell layout of Signal).
inline size_t cube_linear_index(const DyadicCube& q) {
  size_t idx = 0;
  for (int a = q.dim() - 1; a >= 0; --a)
    idx = (idx << q.level) | static_cast<size_t>(q.index[a]);
  return idx;
}

inline DyadicCube cube_from_linear(int dim, int level, size_t linear) {
  DyadicCube q;
  q.level = level;
  q.index.resize(static_cast<size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    q.index[a] = static_cast<int>(linear & ((size_t(1) << level) - 1));
    linear >>= level;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Orientation (Haar multi-index i != 0)
// ---------------------------------------------------------------------------

struct Orientation {
  std::vector<int> bits;  // one per axis, each in {0,1}, not all zero

  int dim() const { return static_cast<int>(bits.size()); }
  bool operator==(const Orientation& o) const { return bits == o.bits; }
};

inline void validate(const Orientation& i) {
  bool any = false;
  for (int b : i.bits) {
    require(b == 0 || b == 1, "orientation bits must be 0/1");
    any = any || (b == 1);
  }
  require(any, "orientation must have at least one oscillating axis");
}

// The 2^n - 1 admissible orientations in lexicographic order of the bit vector.
inline std::vector<Orientation> all_orientations(int dim) {
  std::vector<Orientation> out;
  out.reserve((size_t(1) << dim) - 1);
  for (int v = 1; v < (1 << dim); ++v) {
    Orientation i;
    i.bits.resize(static_cast<size_t>(dim));
    for (int a = 0; a < dim; ++a) i.bits[a] = (v >> (dim - 1 - a)) & 1;
    out.push_back(std::move(i));
  }
  std::sort(out.begin(), out.end(),
            [](const Orientation& x, const Orientation& y) { return x.bits < y.bits; });
  return out;
}

// Sign of h^i_Q on the child selected by per-axis halves (0 = lower half).
inline int haar_sign(const Orientation& i, int child_mask) {
  int s = 1;
  for (int a = 0; a < i.dim(); ++a)
    if (i.bits[a] == 1 && ((child_mask >> a) & 1)) s = -s;
  return s;
}

// ---------------------------------------------------------------------------
// Signal: piecewise-constant function on [0,1)^n at resolution J
// ---------------------------------------------------------------------------

struct Signal {
  int dim = 1;
  int resolution = 0;  // J
  std::vector<double> values;  // 2^{n J} cells, axis 0 fastest

  size_t size() const { return values.size(); }
  double cell_measure() const { return std::ldexp(1.0, -dim * resolution); }

  static Signal zeros(int dim, int J) {
    Signal f;
    f.dim = dim;
    f.resolution = J;
    f.values.assign(size_t(1) << (size_t(dim) * J), 0.0);
    return f;
  }
  static Signal constant(int dim, int J, double c) {
    Signal f = zeros(dim, J);
    std::fill(f.values.begin(), f.values.end(), c);
    return f;
  }
};

inline size_t cell_count(int dim, int J) { return size_t(1) << (size_t(dim) * J); }

// Visit the linear cell indices covered by cube `q` on the resolution-J grid.
template <class F>
inline void for_each_cell(const DyadicCube& q, int J, F&& f) {
  const int n = q.dim();
  const int shift = J - q.level;
  const size_t extent = size_t(1) << shift;
  std::vector<size_t> base(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) base[a] = size_t(q.index[a]) << shift;
  std::vector<size_t> c(static_cast<size_t>(n), 0);
  for (;;) {
    size_t lin = 0;
    for (int a = n - 1; a >= 0; --a) lin = (lin << J) | (base[a] + c[a]);
    f(lin);
    int a = 0;
    for (; a < n; ++a) {
      if (++c[a] < extent) break;
      c[a] = 0;
    }
    if (a == n) break;
  }
}

// averages[k][cube_linear] = <f>_Q for every level-k cube, k = 0..J.
inline std::vector<std::vector<double>> level_averages(const Signal& f) {
  const int n = f.dim, J = f.resolution;
  std::vector<std::vector<double>> avg(static_cast<size_t>(J) + 1);
  avg[J] = f.values;
  for (int k = J - 1; k >= 0; --k) {
    const size_t count = cell_count(n, k);
    avg[k].assign(count, 0.0);
    const double scale = 1.0 / double(size_t(1) << n);
    for (size_t p = 0; p < count; ++p) {
      DyadicCube q = cube_from_linear(n, k, p);
      double s = 0.0;
      for (int mask = 0; mask < (1 << n); ++mask) {
        DyadicCube c;
        c.level = k + 1;
        c.index.resize(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) c.index[a] = 2 * q.index[a] + ((mask >> a) & 1);
        s += avg[k + 1][cube_linear_index(c)];
      }
      avg[k][p] = s * scale;
    }
  }
  return avg;
}

// Signal with G(x) = sum_k w[k][cube_at_level_k(x)]; w may be shorter than J+1.
inline Signal accumulate_levels(int dim, int J,
                                const std::vector<std::vector<double>>& w) {
  Signal out = Signal::zeros(dim, J);
  std::vector<double> cur(1, 0.0);
  const int kmax = static_cast<int>(w.size()) - 1;
  for (int k = 0; k <= J; ++k) {
    if (k > 0) {
      std::vector<double> next(cell_count(dim, k));
      for (size_t p = 0; p < next.size(); ++p) {
        DyadicCube q = cube_from_linear(dim, k, p);
        next[p] = cur[cube_linear_index(q.parent())];
      }
      cur = std::move(next);
    }
    if (k <= kmax && !w[k].empty())
      for (size_t p = 0; p < cur.size(); ++p) cur[p] += w[k][p];
  }
  out.values = std::move(cur);
  return out;
}

// ---------------------------------------------------------------------------
// HaarSpectrum: finitely supported coefficient family (dyadic distribution)
// ---------------------------------------------------------------------------

struct HaarKey {
  DyadicCube cube;
  Orientation orient;
};

struct HaarKeyLess {
  bool operator()(const HaarKey& a, const HaarKey& b) const {
    if (a.cube.level != b.cube.level) return a.cube.level < b.cube.level;
    if (a.cube.index != b.cube.index) return a.cube.index < b.cube.index;
    return a.orient.bits < b.orient.bits;
  }
};

using CoeffMap = std::map<HaarKey, double, HaarKeyLess>;
using CubeMap = std::map<DyadicCube, double, CubeLess>;

struct HaarSpectrum {
  int dim = 1;
  int max_level = 0;  // synthesis resolution; keyed cubes have level < max_level
  double mean = 0.0;  // <f>_{[0,1)^n} component; 0 for genuine dyadic distributions
  CoeffMap coeffs;

  void set(const DyadicCube& q, const Orientation& i, double c) {
    require(q.level < max_level, "coefficient cube must have level < max_level");
    coeffs[HaarKey{q, i}] = c;
  }
  double get(const DyadicCube& q, const Orientation& i) const {
    auto it = coeffs.find(HaarKey{q, i});
    return it == coeffs.end() ? 0.0 : it->second;
  }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// h^i_Q sampled exactly on the resolution-J grid.  L^2 norm 1, integral 0.
inline Signal haar_function(const DyadicCube& q, const Orientation& i, int J) {
  validate(q);
  validate(i);
  require(i.dim() == q.dim(), "orientation/cube dimension mismatch");
  require(q.level < J, "haar_function needs cube level < resolution");
  const int n = q.dim();
  Signal f = Signal::zeros(n, J);
  const double amp = std::ldexp(1.0, q.level * n / 2) *
                     ((q.level * n) % 2 ? std::sqrt(2.0) : 1.0);
  for (const DyadicCube& child : q.children()) {
    int mask = 0;
    for (int a = 0; a < n; ++a) mask |= (child.index[a] & 1) << a;
    const double v = amp * haar_sign(i, mask);
    for_each_cell(child, J, [&](size_t cell) { f.values[cell] = v; });
  }
  return f;
}

// Exact arithmetic mean of f over the cells of Q.
inline double average(const Signal& f, const DyadicCube& q) {
  require(q.dim() == f.dim, "cube/signal dimension mismatch");
  require(q.level <= f.resolution, "cube finer than signal resolution");
  double s = 0.0;
  size_t cnt = 0;
  for_each_cell(q, f.resolution, [&](size_t cell) {
    s += f.values[cell];
    ++cnt;
  });
  return s / double(cnt);
}

// Haar analysis: coeffs[Q,i] = <f, h^i_Q> exactly, mean = <f>_{root}.
inline HaarSpectrum analyze(const Signal& f) {
  const int n = f.dim, J = f.resolution;
  HaarSpectrum s;
  s.dim = n;
  s.max_level = J;
  require(n <= 8, "analyze supports dim <= 8");
  const auto avg = level_averages(f);
  s.mean = avg[0][0];
  const auto orientations = all_orientations(n);
  for (int k = 0; k < J; ++k) {
    const size_t count = cell_count(n, k);
    const double child_measure = std::ldexp(1.0, -(k + 1) * n);
    const double amp = std::ldexp(1.0, k * n / 2) *
                       ((k * n) % 2 ? std::sqrt(2.0) : 1.0);
    for (size_t p = 0; p < count; ++p) {
      DyadicCube q = cube_from_linear(n, k, p);
      // child averages, indexed by per-axis half mask
      double child_avg[1 << 8];
      for (int mask = 0; mask < (1 << n); ++mask) {
        DyadicCube c;
        c.level = k + 1;
        c.index.resize(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) c.index[a] = 2 * q.index[a] + ((mask >> a) & 1);
        child_avg[mask] = avg[k + 1][cube_linear_index(c)];
      }
      for (const Orientation& i : orientations) {
        double c = 0.0;
        for (int mask = 0; mask < (1 << n); ++mask)
          c += haar_sign(i, mask) * child_avg[mask];
        c *= amp * child_measure;
        if (c != 0.0) s.coeffs[HaarKey{q, i}] = c;
      }
    }
  }
  return s;
}

// Haar synthesis; exact inverse of analyze when the mean is included.
inline Signal synthesize(const HaarSpectrum& s) {
  const int n = s.dim, J = s.max_level;
  std::vector<std::vector<double>> w(static_cast<size_t>(J) + 1);
  for (size_t k = 0; k <= static_cast<size_t>(J); ++k)
    w[k].assign(cell_count(n, static_cast<int>(k)), 0.0);
  w[0][0] = s.mean;
  for (const auto& [key, c] : s.coeffs) {
    const int k = key.cube.level;
    require(k < J, "spectrum contains coefficients at or below cell level");
    const double amp = std::ldexp(1.0, k * n / 2) *
                       ((k * n) % 2 ? std::sqrt(2.0) : 1.0);
    for (const DyadicCube& child : key.cube.children()) {
      int mask = 0;
      for (int a = 0; a < n; ++a) mask |= (child.index[a] & 1) << a;
      w[size_t(k) + 1][cube_linear_index(child)] +=
          c * amp * haar_sign(key.orient, mask);
    }
  }
  return accumulate_levels(n, J, w);
}

// Non-increasing rearrangement f^*(t) = inf{ s : |{|f|>s}| <= t }.
inline double rearrangement(const Signal& f, double t) {
  require(t > 0.0 && t <= 1.0, "rearrangement needs t in (0,1]");
  std::vector<double> mags(f.values.size());
  for (size_t i = 0; i < mags.size(); ++i) mags[i] = std::fabs(f.values[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  const double m = double(mags.size());
  const auto idx = static_cast<size_t>(std::floor(t * m));
  if (idx >= mags.size()) return 0.0;
  return mags[idx];
}

// Rearrangement of |f| restricted to a cube, with t an absolute measure in
// (0, |Q|]; exact on the grid.
inline double rearrangement_on_cube(const Signal& f, const DyadicCube& q, double t) {
  require(t > 0.0 && t <= q.measure() + 1e-15, "measure argument out of range");
  std::vector<double> mags;
  for_each_cell(q, f.resolution, [&](size_t cell) {
    mags.push_back(std::fabs(f.values[cell]));
  });
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  const double cell_measure = std::ldexp(1.0, -f.dim * f.resolution);
  const auto idx = static_cast<size_t>(std::floor(t / cell_measure));
  if (idx >= mags.size()) return 0.0;
  return mags[idx];
}

constexpr double kPointwiseOscillation = std::numeric_limits<double>::infinity();

// osc_p(f,Q); p = infinity gives the pointwise oscillation max - min.
inline double oscillation(const Signal& f, const DyadicCube& q, double p) {
  require(q.level <= f.resolution, "cube finer than signal resolution");
  require(p > 0.0, "oscillation exponent must be positive");
  if (p == kPointwiseOscillation) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for_each_cell(q, f.resolution, [&](size_t cell) {
      lo = std::min(lo, f.values[cell]);
      hi = std::max(hi, f.values[cell]);
    });
    return hi - lo;
  }
  const double mean = average(f, q);
  double s = 0.0;
  size_t cnt = 0;
  for_each_cell(q, f.resolution, [&](size_t cell) {
    s += std::pow(std::fabs(f.values[cell] - mean), p);
    ++cnt;
  });
  return std::pow(s / double(cnt), 1.0 / p);
}

// L^2(dx) pairing of two signals at equal resolution.
inline double inner(const Signal& a, const Signal& b) {
  require(a.dim == b.dim && a.resolution == b.resolution,
          "inner product needs matching grids");
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s * a.cell_measure();
}

// Coefficient-space pairing <s, f> = sum coeff * <f,h> + mean * <f>_root.
inline double inner(const HaarSpectrum& s, const Signal& f) {
  HaarSpectrum fs = analyze(f);
  double out = s.mean * fs.mean;
  for (const auto& [key, c] : s.coeffs) {
    auto it = fs.coeffs.find(key);
    if (it != fs.coeffs.end()) out += c * it->second;
  }
  return out;
}

inline double l2_norm_squared(const Signal& f) { return inner(f, f); }

}  // namespace paraprod
