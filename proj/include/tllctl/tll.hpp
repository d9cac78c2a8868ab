#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tllctl/arch.hpp"
#include "tllctl/core.hpp"
#include "tllctl/cpwa.hpp"

namespace tllctl::tll {

struct AffineFn {
  Vec w;
  double b = 0.0;

  double eval(const Vec& x) const {
    double v = b;
    for (std::size_t k = 0; k < w.size(); ++k) v += w[k] * x[k];
    return v;
  }
};

struct ScalarTLL {
  std::vector<AffineFn> fns;
  std::vector<std::vector<int>> groups;  // sorted index sets into fns
};

/** Lattice network: per output coordinate, the minimum over selector groups
 *  of the maximum of the selected affine functions.  Immutable value object;
 *  eval is reentrant. */
struct TLLNetwork {
  int n = 0;
  int m = 0;
  std::vector<ScalarTLL> outputs;

  void validate() const {
    if (n < 1 || m < 1 || static_cast<int>(outputs.size()) != m)
      throw std::invalid_argument("TLLNetwork: bad dimensions");
    for (const auto& o : outputs) {
      if (o.fns.empty() || o.groups.empty())
        throw std::invalid_argument("TLLNetwork: empty function or group list");
      for (const auto& g : o.groups) {
        if (g.empty()) throw std::invalid_argument("TLLNetwork: empty selector group");
        for (int i : g)
          if (i < 0 || i >= static_cast<int>(o.fns.size()))
            throw std::invalid_argument("TLLNetwork: selector index out of range");
      }
    }
  }

  Vec eval(const Vec& x) const {
    Vec out(m);
    std::vector<double> vals;
    for (int j = 0; j < m; ++j) {
      const auto& o = outputs[j];
      vals.resize(o.fns.size());
      for (std::size_t i = 0; i < o.fns.size(); ++i) vals[i] = o.fns[i].eval(x);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& g : o.groups) {
        double gm = -std::numeric_limits<double>::infinity();
        for (int i : g) {
          gm = std::max(gm, vals[i]);
          if (gm >= best) break;  // this group cannot lower the minimum
        }
        best = std::min(best, gm);
      }
      out[j] = best;
    }
    return out;
  }
};

struct FromPiecesOptions {
  int verify_samples = 10000;
  double verify_tol = 1e-8;
  std::uint64_t seed = 20240817;
  bool prune = true;
};

namespace detail {

inline bool same_fn(const AffineFn& a, const AffineFn& b, double tol) {
  if (std::abs(a.b - b.b) > tol) return false;
  for (std::size_t k = 0; k < a.w.size(); ++k)
    if (std::abs(a.w[k] - b.w[k]) > tol) return false;
  return true;
}

inline std::vector<Vec> box_corners(const DomainBox& box) {
  const int n = box.dim();
  std::vector<Vec> corners;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = (mask >> k & 1) ? box.upper[k] : box.lower[k];
    corners.push_back(std::move(v));
  }
  return corners;
}

}  // namespace detail

/** Realize a continuous PWA given by `pieces` (a convex-piece cover of the
 *  box with per-piece affine maps, as produced by cpwa::enumerate_pieces) as
 *  a min-of-max lattice network.
 *
 *  Selector rule: group j collects the functions lying at or below piece j's
 *  map at every vertex of piece j (affine-vs-affine on a convex piece, so
 *  the vertex test is exact).  With these dominated sets the min-of-max
 *  reproduces the function on the whole box.  Pruning removes members
 *  dominated on the box by another member and groups whose set contains
 *  another group's set; both leave the evaluation unchanged.
 *
 *  Throws InconsistentError if verification sampling disagrees beyond
 *  verify_tol, which signals a violated continuity/convexity precondition. */
inline TLLNetwork from_pieces(const std::vector<cpwa::Piece>& pieces, const DomainBox& box,
                              const FromPiecesOptions& opts = {}) {
  if (pieces.empty()) throw std::invalid_argument("from_pieces: no pieces");
  const int n = box.dim();
  const int m = static_cast<int>(pieces.front().b.size());

  TLLNetwork net;
  net.n = n;
  net.m = m;
  net.outputs.resize(m);
  const auto corners = detail::box_corners(box);

  for (int j = 0; j < m; ++j) {
    auto& o = net.outputs[j];

    // deduplicate affine maps
    std::vector<int> piece_fn(pieces.size());
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      AffineFn f{pieces[p].w[j], pieces[p].b[j]};
      int found = -1;
      for (std::size_t i = 0; i < o.fns.size(); ++i)
        if (detail::same_fn(o.fns[i], f, 1e-12)) { found = static_cast<int>(i); break; }
      if (found < 0) {
        found = static_cast<int>(o.fns.size());
        o.fns.push_back(std::move(f));
      }
      piece_fn[p] = found;
    }
    const int N = static_cast<int>(o.fns.size());

    // dominated selector set per piece, vertex test with an inclusive margin
    std::vector<std::vector<int>> groups;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const int own = piece_fn[p];
      std::vector<double> own_at;
      for (const auto& v : pieces[p].vertices) own_at.push_back(o.fns[own].eval(v));
      std::vector<int> g;
      for (int i = 0; i < N; ++i) {
        bool below = true;
        for (std::size_t q = 0; q < pieces[p].vertices.size() && below; ++q) {
          const double tol = 1e-9 * std::max(1.0, std::abs(own_at[q]));
          below = o.fns[i].eval(pieces[p].vertices[q]) <= own_at[q] + tol;
        }
        if (below) g.push_back(i);
      }
      groups.push_back(std::move(g));
    }

    if (opts.prune) {
      // drop members dominated over the whole box by another member of the
      // same group; the group maximum is unchanged on the box
      std::vector<std::vector<double>> at_corners(N);
      for (int i = 0; i < N; ++i)
        for (const auto& v : corners) at_corners[i].push_back(o.fns[i].eval(v));
      auto dominates = [&](int a, int b) {
        for (std::size_t q = 0; q < corners.size(); ++q)
          if (at_corners[a][q] < at_corners[b][q]) return false;
        return true;
      };
      for (std::size_t p = 0; p < groups.size(); ++p) {
        auto& g = groups[p];
        std::vector<int> kept;
        for (std::size_t a = 0; a < g.size(); ++a) {
          bool drop = false;
          if (g[a] != piece_fn[p]) {
            for (int other : kept)
              if (dominates(other, g[a])) { drop = true; break; }
            if (!drop)
              for (std::size_t b = a + 1; b < g.size() && !drop; ++b)
                drop = dominates(g[b], g[a]) && !dominates(g[a], g[b]);
          }
          if (!drop) kept.push_back(g[a]);
        }
        g = std::move(kept);
      }

      // drop any group whose set contains another group's set; that term is
      // pointwise >= the smaller one and never decides the minimum
      std::vector<std::vector<std::uint64_t>> bits(groups.size());
      const int words = (N + 63) / 64;
      for (std::size_t p = 0; p < groups.size(); ++p) {
        bits[p].assign(words, 0);
        for (int i : groups[p]) bits[p][i / 64] |= std::uint64_t{1} << (i % 64);
      }
      std::vector<bool> dead(groups.size(), false);
      for (std::size_t a = 0; a < groups.size(); ++a) {
        if (dead[a]) continue;
        for (std::size_t b = 0; b < groups.size(); ++b) {
          if (a == b || dead[b] || groups[b].size() > groups[a].size()) continue;
          if (groups[b].size() == groups[a].size() && b > a) continue;
          bool subset = true;
          for (int w = 0; w < words && subset; ++w)
            subset = (bits[b][w] & ~bits[a][w]) == 0;
          if (subset) { dead[a] = true; break; }
        }
      }
      std::vector<std::vector<int>> live;
      for (std::size_t p = 0; p < groups.size(); ++p)
        if (!dead[p]) live.push_back(std::move(groups[p]));
      groups = std::move(live);

      // compact away functions no longer selected by any group
      std::vector<int> remap(N, -1);
      std::vector<AffineFn> used;
      for (auto& g : groups)
        for (int& i : g) {
          if (remap[i] < 0) {
            remap[i] = static_cast<int>(used.size());
            used.push_back(o.fns[i]);
          }
          i = remap[i];
        }
      o.fns = std::move(used);
    }

    for (auto& g : groups) std::sort(g.begin(), g.end());
    o.groups = std::move(groups);
  }

  // verification sweep against the piecewise values themselves
  if (opts.verify_samples > 0) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int per_piece =
        std::max<int>(1, opts.verify_samples / static_cast<int>(pieces.size()));
    for (const auto& piece : pieces) {
      for (int s = 0; s < per_piece; ++s) {
        // random convex combination of the piece's vertices
        Vec x(n, 0.0);
        double total = 0.0;
        std::vector<double> lam(piece.vertices.size());
        for (auto& l : lam) { l = unit(rng); total += l; }
        for (std::size_t v = 0; v < piece.vertices.size(); ++v)
          for (int k = 0; k < n; ++k) x[k] += (lam[v] / total) * piece.vertices[v][k];
        const Vec got = net.eval(x);
        for (int j = 0; j < m; ++j) {
          double want = piece.b[j];
          for (int k = 0; k < n; ++k) want += piece.w[j][k] * x[k];
          if (std::abs(got[j] - want) > opts.verify_tol)
            throw InconsistentError("from_pieces: lattice value deviates from the piecewise "
                                    "function by " + std::to_string(std::abs(got[j] - want)));
        }
      }
    }
  }
  net.validate();
  return net;
}

inline Vec tll_eval(const TLLNetwork& net, const Vec& x) { return net.eval(x); }

/* ------------------------------------------------------------------ */
/* Lowering to a plain layered rectifier network                       */
/* ------------------------------------------------------------------ */

struct SparseRow {
  std::vector<std::pair<int, double>> terms;  // (input index, weight)
  double bias = 0.0;
};

struct ReluLayer {
  int in = 0;
  int out = 0;
  std::vector<SparseRow> rows;
};

/** Layered network with rectifier activation on every layer except the last.
 *  Rows are stored sparsely; gadget rows touch at most a handful of inputs. */
struct ReluNetwork {
  int n = 0;
  int m = 0;
  std::vector<ReluLayer> layers;

  std::vector<std::int64_t> layer_widths() const {
    std::vector<std::int64_t> w{n};
    for (const auto& l : layers) w.push_back(l.out);
    return w;
  }

  Vec eval(const Vec& x) const {
    std::size_t widest = x.size();
    for (const auto& l : layers) widest = std::max(widest, static_cast<std::size_t>(l.out));
    Vec cur(widest), next(widest);
    std::copy(x.begin(), x.end(), cur.begin());
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const auto& layer = layers[li];
      for (int r = 0; r < layer.out; ++r) {
        double v = layer.rows[r].bias;
        for (const auto& [c, w] : layer.rows[r].terms) v += w * cur[c];
        next[r] = (li + 1 < layers.size()) ? std::max(v, 0.0) : v;
      }
      cur.swap(next);
    }
    return Vec(cur.begin(), cur.begin() + (layers.empty() ? x.size() : layers.back().out));
  }
};

namespace detail {

// linear combination of the previous layer's outputs
struct Expr {
  std::vector<std::pair<int, double>> terms;
  double bias = 0.0;
};

inline Expr combine(const Expr& a, const Expr& b, double ca, double cb) {
  Expr e;
  e.bias = ca * a.bias + cb * b.bias;
  for (const auto& [c, w] : a.terms) e.terms.emplace_back(c, ca * w);
  for (const auto& [c, w] : b.terms) e.terms.emplace_back(c, cb * w);
  std::sort(e.terms.begin(), e.terms.end());
  std::vector<std::pair<int, double>> merged;
  for (const auto& t : e.terms) {
    if (!merged.empty() && merged.back().first == t.first)
      merged.back().second += t.second;
    else
      merged.push_back(t);
  }
  e.terms = std::move(merged);
  return e;
}

inline Expr negate(Expr e) {
  e.bias = -e.bias;
  for (auto& t : e.terms) t.second = -t.second;
  return e;
}

struct LayerBuilder {
  std::vector<SparseRow> rows;
  int add(const Expr& e) {
    rows.push_back(SparseRow{e.terms, e.bias});
    return static_cast<int>(rows.size()) - 1;
  }
};

// identity passthrough rect(v) - rect(-v)
inline Expr carry(LayerBuilder& lb, const Expr& v) {
  const int p = lb.add(v);
  const int q = lb.add(negate(v));
  return Expr{{{p, 1.0}, {q, -1.0}}, 0.0};
}

// max(a,b) = (a+b)/2 + (rect(a-b)+rect(b-a))/2; min flips the sign of the
// rectified half.  Four neurons per gadget.
inline Expr pair_reduce(LayerBuilder& lb, const Expr& a, const Expr& b, bool is_max) {
  const Expr diff = combine(a, b, 1.0, -1.0);
  const Expr sum = combine(a, b, 1.0, 1.0);
  const int u1 = lb.add(diff);
  const int u2 = lb.add(negate(diff));
  const int u3 = lb.add(sum);
  const int u4 = lb.add(negate(sum));
  const double s = is_max ? 0.5 : -0.5;
  return Expr{{{u1, s}, {u2, s}, {u3, 0.5}, {u4, -0.5}}, 0.0};
}

}  // namespace detail

/** Lower a lattice network to plain rectifier layers: pair-encoded affine
 *  values, balanced trees of pairwise max gadgets per selector group, one
 *  min tree across groups, affine read-out.  Algebraically exact. */
inline ReluNetwork lower_to_relu(const TLLNetwork& net) {
  net.validate();
  ReluNetwork relu;
  relu.n = net.n;
  relu.m = net.m;

  bool trivial = true;
  for (const auto& o : net.outputs)
    trivial = trivial && o.fns.size() == 1 && o.groups.size() == 1;
  if (trivial) {
    ReluLayer layer;
    layer.in = net.n;
    layer.out = net.m;
    for (const auto& o : net.outputs) {
      SparseRow row;
      row.bias = o.fns[0].b;
      for (int k = 0; k < net.n; ++k)
        if (o.fns[0].w[k] != 0.0) row.terms.emplace_back(k, o.fns[0].w[k]);
      layer.rows.push_back(std::move(row));
    }
    relu.layers.push_back(std::move(layer));
    return relu;
  }

  using detail::Expr;
  using detail::LayerBuilder;

  // stage 1: every affine value as a rect pair
  int prev_width = net.n;
  LayerBuilder first;
  std::vector<std::vector<std::vector<Expr>>> work(net.m);  // coord -> group -> live values
  for (int j = 0; j < net.m; ++j) {
    const auto& o = net.outputs[j];
    std::vector<Expr> fn_expr(o.fns.size());
    for (std::size_t i = 0; i < o.fns.size(); ++i) {
      Expr aff;
      aff.bias = o.fns[i].b;
      for (int k = 0; k < net.n; ++k)
        if (o.fns[i].w[k] != 0.0) aff.terms.emplace_back(k, o.fns[i].w[k]);
      const int p = first.add(aff);
      const int q = first.add(detail::negate(aff));
      fn_expr[i] = Expr{{{p, 1.0}, {q, -1.0}}, 0.0};
    }
    work[j].resize(o.groups.size());
    for (std::size_t g = 0; g < o.groups.size(); ++g)
      for (int i : o.groups[g]) work[j][g].push_back(fn_expr[i]);
  }
  relu.layers.push_back(ReluLayer{prev_width, static_cast<int>(first.rows.size()),
                                  std::move(first.rows)});
  prev_width = relu.layers.back().out;

  auto stage = [&](bool is_max, auto live_count) {
    while (true) {
      bool more = false;
      for (int j = 0; j < net.m && !more; ++j) more = live_count(work[j]) > 1;
      if (!more) break;
      LayerBuilder lb;
      for (int j = 0; j < net.m; ++j) {
        for (auto& vals : work[j]) {
          std::vector<Expr> next;
          std::size_t i = 0;
          for (; i + 1 < vals.size(); i += 2)
            next.push_back(detail::pair_reduce(lb, vals[i], vals[i + 1], is_max));
          if (i < vals.size()) next.push_back(detail::carry(lb, vals[i]));
          vals = std::move(next);
        }
      }
      relu.layers.push_back(ReluLayer{prev_width, static_cast<int>(lb.rows.size()),
                                      std::move(lb.rows)});
      prev_width = relu.layers.back().out;
    }
  };

  // max trees inside groups: live count is the largest group
  stage(true, [](const std::vector<std::vector<Expr>>& groups) {
    std::size_t mx = 0;
    for (const auto& g : groups) mx = std::max(mx, g.size());
    return mx;
  });

  // min tree across groups: flatten to one list per coordinate
  for (int j = 0; j < net.m; ++j) {
    std::vector<Expr> flat;
    for (auto& g : work[j]) flat.push_back(g.front());
    work[j].assign(1, std::move(flat));
  }
  stage(false, [](const std::vector<std::vector<Expr>>& groups) {
    return groups.front().size();
  });

  // affine read-out
  ReluLayer out;
  out.in = prev_width;
  out.out = net.m;
  for (int j = 0; j < net.m; ++j) {
    const Expr& e = work[j][0][0];
    out.rows.push_back(SparseRow{e.terms, e.bias});
  }
  relu.layers.push_back(std::move(out));
  return relu;
}

inline Vec relu_eval(const ReluNetwork& net, const Vec& x) { return net.eval(x); }

/** Flattened (CSR) forward pass with reusable buffers.  One instance per
 *  thread; sweeps partition samples across instances. */
class ReluForward {
 public:
  explicit ReluForward(const ReluNetwork& net) : n_(net.n), m_(net.m) {
    std::size_t widest = static_cast<std::size_t>(net.n);
    for (const auto& l : net.layers) {
      Layer flat;
      flat.out = l.out;
      flat.row_ptr.push_back(0);
      for (const auto& row : l.rows) {
        for (const auto& [c, w] : row.terms) {
          flat.cols.push_back(c);
          flat.weights.push_back(w);
        }
        flat.row_ptr.push_back(static_cast<int>(flat.cols.size()));
        flat.bias.push_back(row.bias);
      }
      widest = std::max(widest, static_cast<std::size_t>(l.out));
      layers_.push_back(std::move(flat));
    }
    cur_.resize(widest);
    next_.resize(widest);
  }

  const Vec& operator()(const Vec& x) {
    std::copy(x.begin(), x.end(), cur_.begin());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& l = layers_[li];
      const bool rect = li + 1 < layers_.size();
      for (int r = 0; r < l.out; ++r) {
        double v = l.bias[r];
        for (int t = l.row_ptr[r]; t < l.row_ptr[r + 1]; ++t) v += l.weights[t] * cur_[l.cols[t]];
        next_[r] = rect && v < 0.0 ? 0.0 : v;
      }
      cur_.swap(next_);
    }
    out_.assign(cur_.begin(), cur_.begin() + m_);
    return out_;
  }

 private:
  struct Layer {
    std::vector<int> row_ptr;
    std::vector<int> cols;
    Vec weights;
    Vec bias;
    int out = 0;
  };
  std::vector<Layer> layers_;
  int n_ = 0, m_ = 0;
  Vec cur_, next_, out_;
};

}  // namespace tllctl::tll
