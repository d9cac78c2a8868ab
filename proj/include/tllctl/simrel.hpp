#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tllctl/core.hpp"
#include "tllctl/dynamics.hpp"

namespace tllctl::simrel {

/** Finite transition system over points of a metric space (sup-norm).
 *  Transitions are (source state, label, target state) index triples. */
struct FiniteTransitionSystem {
  int dim = 0;
  std::vector<Vec> states;
  std::vector<std::string> labels;
  std::set<std::array<int, 3>> transitions;

  void validate() const {
    if (states.empty()) throw std::invalid_argument("FiniteTransitionSystem: no states");
    for (const auto& s : states)
      if (static_cast<int>(s.size()) != dim)
        throw std::invalid_argument("FiniteTransitionSystem: state dimension mismatch");
    for (const auto& [i, l, j] : transitions)
      if (i < 0 || i >= static_cast<int>(states.size()) || j < 0 ||
          j >= static_cast<int>(states.size()) || l < 0 || l >= static_cast<int>(labels.size()))
        throw std::invalid_argument("FiniteTransitionSystem: transition index out of range");
  }
};

/** Sampled-time embedding on a finite grid: states are the grid vertices of
 *  the state box at the given pitch, each state jumps to the grid vertex
 *  nearest its closed-loop image after tau seconds (ties snap to the smaller
 *  coordinate).  One opaque label per source state. */
inline FiniteTransitionSystem quantize_embedding(const dynamics::ControlSystem& sys,
                                                 const dynamics::Controller& controller,
                                                 double tau, double pitch,
                                                 int steps_per_tau = 100) {
  if (!(pitch > 0.0)) throw std::invalid_argument("quantize_embedding: pitch must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("quantize_embedding: tau must be positive");

  FiniteTransitionSystem fts;
  fts.dim = sys.n;
  std::vector<int> counts(sys.n);
  for (int k = 0; k < sys.n; ++k)
    counts[k] = static_cast<int>(std::floor(sys.state_box.width(k) / pitch + 1e-9)) + 1;

  std::vector<int> idx(sys.n, 0);
  while (true) {
    Vec x(sys.n);
    for (int k = 0; k < sys.n; ++k) x[k] = sys.state_box.lower[k] + idx[k] * pitch;
    fts.states.push_back(x);
    int a = 0;
    while (a < sys.n && idx[a] == counts[a] - 1) idx[a++] = 0;
    if (a == sys.n) break;
    ++idx[a];
  }

  // nearest grid vertex; half-way ties snap to the smaller coordinate.
  // States were enumerated with axis 0 fastest, so flat = sum idx[k]*stride[k].
  auto flat_of = [&](const Vec& y) {
    std::int64_t flat = 0, stride = 1;
    for (int k = 0; k < sys.n; ++k) {
      const double v = (y[k] - sys.state_box.lower[k]) / pitch;
      double i = std::floor(v + 0.5);
      if (v - std::floor(v) == 0.5) i = std::floor(v);
      flat += stride * std::clamp(static_cast<int>(i), 0, counts[k] - 1);
      stride *= counts[k];
    }
    return static_cast<int>(flat);
  };

  for (std::size_t i = 0; i < fts.states.size(); ++i) {
    fts.labels.push_back("u@" + std::to_string(i));
    const auto tr =
        dynamics::simulate(sys, controller, fts.states[i], tau, tau / steps_per_tau);
    fts.transitions.insert({static_cast<int>(i), static_cast<int>(i), flat_of(tr.x.back())});
  }
  fts.validate();
  return fts;
}

/** Disturbance closure: (x,u,x') is a transition iff some original
 *  transition (x,u,x'') has d(x'', x') <= delta.  The original transitions
 *  are always a subset of the result. */
inline FiniteTransitionSystem perturb(const FiniteTransitionSystem& s, double delta) {
  if (delta < 0.0) throw std::invalid_argument("perturb: delta must be >= 0");
  FiniteTransitionSystem out = s;
  for (const auto& [i, l, j] : s.transitions)
    for (int k = 0; k < static_cast<int>(s.states.size()); ++k)
      if (sup_dist(s.states[j], s.states[k]) <= delta) out.transitions.insert({i, l, k});
  return out;
}

struct SimRelation {
  std::vector<std::pair<int, int>> pairs;
  double delta = 0.0;
};

enum class LabelMode { permissive, strict };

struct Deletion {
  int s = -1, t = -1;                       // deleted pair
  std::array<int, 3> offending{-1, -1, -1}; // perturbed-S transition with no match
};

struct AdSimResult {
  bool ok = false;
  SimRelation relation;
  int missing_state = -1;  // an S-state with no partner, when !ok
  std::vector<Deletion> trace;
};

/** Decide whether T abstract-disturbance simulates S under disturbance
 *  delta.  Computes the greatest relation inside {(x,y) : d(x,y) <= delta}
 *  closed under matching of delta-perturbed S transitions by T transitions;
 *  succeeds iff the result is total on S.  Label matching is ignored in
 *  permissive mode (any T label may answer), required equal in strict mode. */
inline AdSimResult check_ad_sim(const FiniteTransitionSystem& s, const FiniteTransitionSystem& t,
                                double delta, LabelMode mode = LabelMode::permissive) {
  if (s.dim != t.dim) throw std::invalid_argument("check_ad_sim: metric dimension mismatch");
  const auto sp = perturb(s, delta);
  const int ns = static_cast<int>(s.states.size());
  const int nt = static_cast<int>(t.states.size());

  // successor lists
  std::vector<std::vector<std::array<int, 3>>> s_out(ns);
  for (const auto& tr : sp.transitions) s_out[tr[0]].push_back(tr);
  std::vector<std::vector<std::array<int, 2>>> t_out(nt);  // (label, target)
  for (const auto& tr : t.transitions) t_out[tr[0]].push_back({tr[1], tr[2]});

  std::vector<std::vector<bool>> rel(ns, std::vector<bool>(nt, false));
  for (int x = 0; x < ns; ++x)
    for (int y = 0; y < nt; ++y)
      rel[x][y] = sup_dist(s.states[x], t.states[y]) <= delta;

  AdSimResult res;
  res.relation.delta = delta;

  bool changed = true;
  while (changed) {
    changed = false;
    for (int x = 0; x < ns; ++x) {
      for (int y = 0; y < nt; ++y) {
        if (!rel[x][y]) continue;
        for (const auto& tr : s_out[x]) {
          bool matched = false;
          for (const auto& [v, yp] : t_out[y]) {
            if (mode == LabelMode::strict && s.labels[tr[1]] != t.labels[v]) continue;
            if (rel[tr[2]][yp]) { matched = true; break; }
          }
          if (!matched) {
            rel[x][y] = false;
            res.trace.push_back({x, y, tr});
            changed = true;
            break;
          }
        }
      }
    }
  }

  res.ok = true;
  for (int x = 0; x < ns; ++x) {
    bool any = false;
    for (int y = 0; y < nt && !any; ++y) any = rel[x][y];
    if (!any) {
      res.ok = false;
      res.missing_state = x;
      break;
    }
  }
  for (int x = 0; x < ns; ++x)
    for (int y = 0; y < nt; ++y)
      if (rel[x][y]) res.relation.pairs.emplace_back(x, y);
  return res;
}

/** Direct scan of the three defining conditions for a candidate relation. */
inline bool verify_relation(const FiniteTransitionSystem& s, const FiniteTransitionSystem& t,
                            double delta, const std::vector<std::pair<int, int>>& pairs,
                            LabelMode mode = LabelMode::permissive) {
  const auto sp = perturb(s, delta);
  std::vector<std::vector<bool>> rel(s.states.size(), std::vector<bool>(t.states.size(), false));
  for (auto [x, y] : pairs) {
    if (sup_dist(s.states[x], t.states[y]) > delta) return false;  // condition 1
    rel[x][y] = true;
  }
  std::vector<bool> covered(s.states.size(), false);
  for (auto [x, y] : pairs) covered[x] = true;
  for (bool c : covered)
    if (!c) return false;  // condition 2
  for (auto [x, y] : pairs) {
    for (const auto& tr : sp.transitions) {
      if (tr[0] != x) continue;
      bool matched = false;
      for (const auto& tt : t.transitions) {
        if (tt[0] != y) continue;
        if (mode == LabelMode::strict && sp.labels[tr[1]] != t.labels[tt[1]]) continue;
        if (rel[tr[2]][tt[2]]) { matched = true; break; }
      }
      if (!matched) return false;  // condition 3
    }
  }
  return true;
}

}  // namespace tllctl::simrel
