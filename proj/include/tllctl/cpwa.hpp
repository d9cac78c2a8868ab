#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "tllctl/core.hpp"

namespace tllctl::cpwa {

/** Regular grid over a box.  Per-axis cell counts are chosen so the cells
 *  tile the box exactly; the per-axis pitch is shrunk (never enlarged) from
 *  the requested one, which preserves any pitch-derived guarantee.  Each cell
 *  carries a constant plateau of half-width rho*pitch/2 around its center. */
struct Partition {
  DomainBox domain;
  double eta = 0.0;  // requested pitch
  double rho = 0.5;
  std::vector<int> counts;  // cells per axis
  Vec pitch;                // adjusted pitch per axis

  int dim() const { return domain.dim(); }

  std::int64_t num_centers() const {
    std::int64_t n = 1;
    for (int c : counts) n *= c;
    return n;
  }

  double center_coord(int axis, int cell) const {
    return domain.lower[axis] + (cell + 0.5) * pitch[axis];
  }

  Vec center(const std::vector<int>& idx) const {
    Vec x(dim());
    for (int k = 0; k < dim(); ++k) x[k] = center_coord(k, idx[k]);
    return x;
  }

  // row-major flattening, axis 0 slowest
  std::int64_t flat_index(const std::vector<int>& idx) const {
    std::int64_t f = 0;
    for (int k = 0; k < dim(); ++k) f = f * counts[k] + idx[k];
    return f;
  }

  std::vector<int> multi_index(std::int64_t flat) const {
    std::vector<int> idx(dim());
    for (int k = dim() - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(flat % counts[k]);
      flat /= counts[k];
    }
    return idx;
  }

  // centers whose cells share a face of any dimension with idx's cell
  std::vector<std::vector<int>> neighbors(const std::vector<int>& idx) const {
    std::vector<std::vector<int>> out;
    std::vector<int> off(dim(), -1);
    while (true) {
      bool self = true, ok = true;
      std::vector<int> cand(dim());
      for (int k = 0; k < dim(); ++k) {
        cand[k] = idx[k] + off[k];
        if (off[k] != 0) self = false;
        if (cand[k] < 0 || cand[k] >= counts[k]) ok = false;
      }
      if (ok && !self) out.push_back(cand);
      int k = 0;
      while (k < dim() && off[k] == 1) off[k++] = -1;
      if (k == dim()) break;
      ++off[k];
    }
    return out;
  }
};

inline Partition make_partition(const DomainBox& domain, double eta, double rho) {
  domain.validate();
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw InvalidPitchError("make_partition: eta must be strictly positive");
  if (!(rho > 0.0) || !(rho < 1.0))
    throw InvalidPitchError("make_partition: rho must lie in (0,1)");
  if (eta > domain.extent() * (1.0 + 1e-12))
    throw InvalidPitchError("make_partition: eta exceeds the box extent");

  Partition p;
  p.domain = domain;
  p.eta = eta;
  p.rho = rho;
  for (int k = 0; k < domain.dim(); ++k) {
    const double w = domain.width(k);
    int c = static_cast<int>(std::ceil(w / eta - 1e-12));
    c = std::max(c, 1);
    p.counts.push_back(c);
    p.pitch.push_back(w / c);
  }
  return p;
}

/** Canonical region address of a point: the reference grid center and the
 *  per-axis offset index iota in {-1,0,+1}.  iota == 0 on every axis means
 *  the plateau of that center; nonzero entries select the gap regions.  Ties
 *  on shared boundaries resolve to the smallest (center_index, iota) in
 *  lexicographic order. */
struct GapIndex {
  std::vector<int> center_index;
  std::vector<int> iota;
  int dim = 0;  // number of nonzero iota entries
};

namespace detail {

struct AxisPlacement {
  int cell = 0;      // plateau cell, or low corner cell of the gap (may be -1 / count-1 at the box edge)
  int dir = 0;       // 0 plateau, +1 gap above `cell`
  double t = 0.0;    // position inside the gap, in [0,1]
};

// Per-axis placement with the lexicographic tie rule: a point exactly on a
// plateau edge belongs to the gap below (smaller reference center wins).
inline AxisPlacement axis_place(const Partition& p, int axis, double x) {
  const int count = p.counts[axis];
  const double u = (x - p.domain.lower[axis]) / p.pitch[axis];
  int i = static_cast<int>(std::floor(u));
  i = std::clamp(i, 0, count - 1);
  const double f = u - i;
  const double lo_edge = 0.5 - p.rho * 0.5;
  const double hi_edge = 0.5 + p.rho * 0.5;
  const double gap = 1.0 - p.rho;

  AxisPlacement a;
  if (f <= lo_edge) {
    a.dir = 1;
    a.cell = i - 1;
    a.t = (f + 0.5 - p.rho * 0.5) / gap;
  } else if (f > hi_edge) {
    a.dir = 1;
    a.cell = i;
    a.t = (f - hi_edge) / gap;
  } else {
    a.dir = 0;
    a.cell = i;
  }
  if (a.dir != 0) a.t = std::clamp(a.t, 0.0, 1.0);
  return a;
}

}  // namespace detail

inline GapIndex classify(const Partition& p, const Vec& x, bool clamp = true) {
  if (static_cast<int>(x.size()) != p.dim())
    throw std::invalid_argument("classify: dimension mismatch");
  Vec q = x;
  if (clamp) {
    q = p.domain.clamp(q);
  } else if (!p.domain.contains(q)) {
    throw OutOfDomainError("classify: point outside the box and clamping disabled");
  }
  GapIndex g;
  g.center_index.resize(p.dim());
  g.iota.resize(p.dim());
  for (int k = 0; k < p.dim(); ++k) {
    const auto a = detail::axis_place(p, k, q[k]);
    if (a.dir == 0) {
      g.center_index[k] = a.cell;
      g.iota[k] = 0;
    } else if (a.cell < 0) {
      g.center_index[k] = 0;  // truncated outer gap below the first cell
      g.iota[k] = -1;
      ++g.dim;
    } else {
      g.center_index[k] = std::min(a.cell, p.counts[k] - 1);
      g.iota[k] = 1;
      ++g.dim;
    }
  }
  return g;
}

/** Corner-value interpolation over the unit cube [0,1]^k.  corner_values is
 *  indexed by bitmask: bit b gives coordinate b of the corner. */
struct GammaFunction {
  int dim = 0;
  std::vector<double> corner_values;  // size 2^dim

  void validate() const {
    if (dim < 0 || dim > 20) throw std::invalid_argument("GammaFunction: dim out of range");
    if (corner_values.size() != (std::size_t{1} << dim))
      throw std::invalid_argument("GammaFunction: need 2^dim corner values");
  }
};

namespace detail {

inline double gamma_eval_impl(const double* v, int k, const double* x) {
  if (k == 0) return v[0];
  if (k == 1) return (1.0 - x[0]) * v[0] + x[0] * v[1];

  const std::size_t corners = std::size_t{1} << k;
  double lo = v[0], hi = v[0], sum = 0.0;
  for (std::size_t c = 0; c < corners; ++c) {
    lo = std::min(lo, v[c]);
    hi = std::max(hi, v[c]);
    sum += v[c];
  }
  const double avg = sum / static_cast<double>(corners);

  // radial decomposition: blend the midpoint value with the boundary point
  // hit by the ray from the midpoint through x (sup-norm geometry)
  double r = 0.0;
  int jmax = 0;
  for (int j = 0; j < k; ++j) {
    const double d = std::abs(x[j] - 0.5);
    if (d > r) {
      r = d;
      jmax = j;
    }
  }
  if (r == 0.0) return avg;

  const double scale = 0.5 / r;
  const double lambda = std::clamp(1.0 - 2.0 * r, 0.0, 1.0);
  const int side = x[jmax] > 0.5 ? 1 : 0;

  std::array<double, 20> bx;
  std::vector<double> bv(corners >> 1);
  int jj = 0;
  for (int j = 0; j < k; ++j) {
    if (j == jmax) continue;
    bx[jj++] = std::clamp(0.5 + (x[j] - 0.5) * scale, 0.0, 1.0);
  }
  const std::size_t bit = std::size_t{1} << jmax;
  const std::size_t low_mask = bit - 1;
  for (std::size_t c = 0; c < (corners >> 1); ++c) {
    const std::size_t full = (c & low_mask) | ((c & ~low_mask) << 1) | (side ? bit : 0);
    bv[c] = v[full];
  }
  const double boundary = gamma_eval_impl(bv.data(), k - 1, bx.data());
  return std::clamp(lambda * avg + (1.0 - lambda) * boundary, lo, hi);
}

}  // namespace detail

inline double gamma_eval(const GammaFunction& g, Vec x) {
  g.validate();
  if (static_cast<int>(x.size()) != g.dim)
    throw std::invalid_argument("gamma_eval: dimension mismatch");
  for (double& c : x) c = std::clamp(c, 0.0, 1.0);
  return detail::gamma_eval_impl(g.corner_values.data(), g.dim, x.data());
}

/** Grid CPWA: constant plateau per grid center, corner interpolation across
 *  the gaps, each output coordinate independent.  Immutable after
 *  construction; eval is reentrant. */
struct GridCPWA {
  Partition part;
  int m = 0;
  Vec values;  // center-major: values[center*m + j]
  DomainBox control;
  bool clamp_domain = true;
  std::int64_t clamped_samples = 0;  // oracle samples that fell outside the control box

  int n() const { return part.dim(); }

  double value_at(std::int64_t center, int j) const { return values[center * m + j]; }

  Vec eval(const Vec& x) const {
    if (static_cast<int>(x.size()) != n())
      throw std::invalid_argument("GridCPWA::eval: dimension mismatch");
    Vec q = x;
    if (clamp_domain) {
      q = part.domain.clamp(q);
    } else if (!part.domain.contains(q)) {
      throw OutOfDomainError("GridCPWA::eval: point outside the box and clamping disabled");
    }

    std::vector<detail::AxisPlacement> place(n());
    std::vector<int> gap_axes;
    for (int k = 0; k < n(); ++k) {
      place[k] = detail::axis_place(part, k, q[k]);
      if (place[k].dir != 0) gap_axes.push_back(k);
    }

    if (gap_axes.empty()) {
      std::vector<int> idx(n());
      for (int k = 0; k < n(); ++k) idx[k] = place[k].cell;
      const std::int64_t c = part.flat_index(idx);
      return Vec(values.begin() + c * m, values.begin() + (c + 1) * m);
    }

    const int d = static_cast<int>(gap_axes.size());
    Vec t(d);
    for (int b = 0; b < d; ++b) t[b] = place[gap_axes[b]].t;

    // plateau centers at the 2^d corners of the gap cube; indices clamp at
    // the box edge, which realizes the constant extension of outer gaps
    const std::size_t corners = std::size_t{1} << d;
    std::vector<std::int64_t> corner_center(corners);
    std::vector<int> idx(n());
    for (std::size_t c = 0; c < corners; ++c) {
      for (int k = 0; k < n(); ++k) idx[k] = place[k].cell;
      for (int b = 0; b < d; ++b) {
        const int k = gap_axes[b];
        const int low = place[k].cell;
        idx[k] = std::clamp(low + static_cast<int>((c >> b) & 1), 0, part.counts[k] - 1);
      }
      corner_center[c] = part.flat_index(idx);
    }

    Vec out(m);
    std::vector<double> cv(corners);
    for (int j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < corners; ++c) cv[c] = value_at(corner_center[c], j);
      out[j] = detail::gamma_eval_impl(cv.data(), d, t.data());
    }
    return out;
  }
};

using Oracle = std::function<Vec(const Vec&)>;

/** Sample the oracle at every grid center.  Values outside the control box
 *  are clamped into it and counted in clamped_samples. */
inline GridCPWA build_grid_cpwa(const Oracle& oracle, const Partition& part,
                                const DomainBox& control) {
  control.validate();
  GridCPWA c;
  c.part = part;
  c.m = control.dim();
  c.control = control;
  c.values.resize(part.num_centers() * c.m);
  for (std::int64_t i = 0; i < part.num_centers(); ++i) {
    const Vec x = part.center(part.multi_index(i));
    Vec u = oracle(x);
    if (static_cast<int>(u.size()) != c.m)
      throw std::invalid_argument("build_grid_cpwa: oracle output dimension mismatch");
    for (int j = 0; j < c.m; ++j) {
      if (!std::isfinite(u[j])) throw NonFiniteError("build_grid_cpwa: oracle returned non-finite value");
      const double clamped = std::clamp(u[j], control.lower[j], control.upper[j]);
      if (clamped != u[j]) ++c.clamped_samples;
      c.values[i * c.m + j] = clamped;
    }
  }
  return c;
}

/** One maximal linear piece: its vertex polytope and the affine map
 *  u = W x + b restricted to it (W is m x n, row-major per output). */
struct Piece {
  std::vector<Vec> vertices;
  std::vector<Vec> w;  // m rows of length n
  Vec b;               // m
};

namespace detail {

inline Piece fit_piece(const GridCPWA& c, std::vector<Vec> vertices) {
  const int n = c.n(), m = c.m;
  Piece p;
  p.vertices = std::move(vertices);
  p.w.assign(m, Vec(n, 0.0));
  p.b.assign(m, 0.0);
  const Vec f0 = c.eval(p.vertices[0]);
  if (n == 1) {
    const Vec f1 = c.eval(p.vertices[1]);
    const double dx = p.vertices[1][0] - p.vertices[0][0];
    for (int j = 0; j < m; ++j) {
      p.w[j][0] = (f1[j] - f0[j]) / dx;
      p.b[j] = f0[j] - p.w[j][0] * p.vertices[0][0];
    }
    return p;
  }
  // n == 2: solve from vertices 0,1,2 (never collinear for our pieces)
  const Vec f1 = c.eval(p.vertices[1]);
  const Vec f2 = c.eval(p.vertices[2]);
  const double a11 = p.vertices[1][0] - p.vertices[0][0];
  const double a12 = p.vertices[1][1] - p.vertices[0][1];
  const double a21 = p.vertices[2][0] - p.vertices[0][0];
  const double a22 = p.vertices[2][1] - p.vertices[0][1];
  const double det = a11 * a22 - a12 * a21;
  for (int j = 0; j < m; ++j) {
    const double r1 = f1[j] - f0[j], r2 = f2[j] - f0[j];
    p.w[j][0] = (r1 * a22 - r2 * a12) / det;
    p.w[j][1] = (a11 * r2 - a21 * r1) / det;
    p.b[j] = f0[j] - p.w[j][0] * p.vertices[0][0] - p.w[j][1] * p.vertices[0][1];
  }
  return p;
}

struct AxisInterval {
  double a, b;
  bool is_gap;
};

// plateau intervals absorb the outer margins of boundary cells (the outer
// gaps evaluate to the plateau constant, so the merged piece stays affine)
inline std::vector<AxisInterval> axis_intervals(const Partition& p, int axis) {
  std::vector<AxisInterval> iv;
  const int count = p.counts[axis];
  const double half = p.rho * p.pitch[axis] * 0.5;
  for (int i = 0; i < count; ++i) {
    const double c = p.center_coord(axis, i);
    const double a = (i == 0) ? p.domain.lower[axis] : c - half;
    const double b = (i == count - 1) ? p.domain.upper[axis] : c + half;
    iv.push_back({a, b, false});
    if (i + 1 < count) iv.push_back({b, p.center_coord(axis, i + 1) - half, true});
  }
  return iv;
}

}  // namespace detail

/** Exact maximal-piece inventory for n <= 2: plateau rectangles (absorbing
 *  box-edge margins), one rectangle per plateau-to-plateau gap, and four
 *  triangles per interior corner gap. */
inline std::vector<Piece> enumerate_pieces(const GridCPWA& c) {
  const int n = c.n();
  if (n > 2) throw UnsupportedDimensionError("enumerate_pieces: supported for n <= 2 only");

  std::vector<Piece> out;
  if (n == 1) {
    for (const auto& iv : detail::axis_intervals(c.part, 0))
      out.push_back(detail::fit_piece(c, {{iv.a}, {iv.b}}));
    return out;
  }

  const auto ix = detail::axis_intervals(c.part, 0);
  const auto iy = detail::axis_intervals(c.part, 1);
  for (const auto& vx : ix) {
    for (const auto& vy : iy) {
      if (!vx.is_gap && !vy.is_gap) {
        out.push_back(detail::fit_piece(
            c, {{vx.a, vy.a}, {vx.b, vy.a}, {vx.b, vy.b}, {vx.a, vy.b}}));
      } else if (vx.is_gap != vy.is_gap) {
        out.push_back(detail::fit_piece(
            c, {{vx.a, vy.a}, {vx.b, vy.a}, {vx.b, vy.b}, {vx.a, vy.b}}));
      } else {
        // interior corner gap: four triangles meeting at the midpoint
        const Vec mid{0.5 * (vx.a + vx.b), 0.5 * (vy.a + vy.b)};
        const Vec c00{vx.a, vy.a}, c10{vx.b, vy.a}, c11{vx.b, vy.b}, c01{vx.a, vy.b};
        out.push_back(detail::fit_piece(c, {c00, c10, mid}));
        out.push_back(detail::fit_piece(c, {c10, c11, mid}));
        out.push_back(detail::fit_piece(c, {c11, c01, mid}));
        out.push_back(detail::fit_piece(c, {c01, c00, mid}));
      }
    }
  }
  return out;
}

/** Seeded low-discrepancy estimate of sup |cpwa - oracle| over the box.
 *  Deterministic for a fixed seed; the oracle must be reentrant. */
inline double sup_error(const GridCPWA& c, const Oracle& oracle, std::int64_t num_samples,
                        std::uint64_t seed) {
  if (num_samples < 1) throw std::invalid_argument("sup_error: need at least one sample");
  const HaltonSampler sampler(c.n(), seed);
  return parallel_max(num_samples, [&](std::int64_t i) {
    const Vec x = sampler.box_point(static_cast<std::uint64_t>(i), c.part.domain);
    const Vec a = c.eval(x);
    const Vec b = oracle(x);
    double d = 0.0;
    for (int j = 0; j < c.m; ++j) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
  });
}

}  // namespace tllctl::cpwa
