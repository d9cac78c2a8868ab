#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "tllctl/core.hpp"
#include "tllctl/sizing.hpp"

namespace tllctl::dynamics {

using Field = std::function<Vec(const Vec& x, const Vec& u)>;
using Jacobian = std::function<std::vector<Vec>(const Vec& x, const Vec& u)>;  // rows
using Controller = std::function<Vec(const Vec& x)>;

/** Continuous-time plant: state box X, control box U, vector field f and
 *  optional analytic Jacobians.  Evaluators must be reentrant. */
struct ControlSystem {
  int n = 0;
  int m = 0;
  DomainBox state_box;
  DomainBox control_box;
  Field f;
  Jacobian jac_x;  // d f / d x, optional
  Jacobian jac_u;  // d f / d u, optional
};

struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> u;
};

struct PendulumParams {
  double mass = 0.5;      // kg
  double length = 0.5;    // m
  double friction = 2.0;  // dimensionless
  double gravity = 9.8;   // N/kg

  void validate() const {
    if (!(mass > 0) || !(length > 0) || !(friction > 0) || !(gravity > 0))
      throw std::invalid_argument("PendulumParams: all parameters must be positive");
  }
};

/** Inverted pendulum: x1 angle, x2 angular velocity, u torque.
 *  xdot = (x2, (g/l) sin x1 - (h/(m l^2)) x2 + (1/(m l)) cos(x1) u). */
inline Vec pendulum_field(const PendulumParams& p, const Vec& x, const Vec& u) {
  const double a = p.gravity / p.length;
  const double d = p.friction / (p.mass * p.length * p.length);
  const double c = 1.0 / (p.mass * p.length);
  return {x[1], a * std::sin(x[0]) - d * x[1] + c * std::cos(x[0]) * u[0]};
}

inline ControlSystem make_pendulum_system(const PendulumParams& p = {},
                                          DomainBox state_box = DomainBox{{-1, -1}, {1, 1}},
                                          DomainBox control_box = DomainBox{{-6}, {6}}) {
  p.validate();
  ControlSystem s;
  s.n = 2;
  s.m = 1;
  s.state_box = std::move(state_box);
  s.control_box = std::move(control_box);
  s.f = [p](const Vec& x, const Vec& u) { return pendulum_field(p, x, u); };
  const double a = p.gravity / p.length;
  const double d = p.friction / (p.mass * p.length * p.length);
  const double c = 1.0 / (p.mass * p.length);
  s.jac_x = [a, d, c](const Vec& x, const Vec& u) {
    return std::vector<Vec>{{0.0, 1.0},
                            {a * std::cos(x[0]) - c * std::sin(x[0]) * u[0], -d}};
  };
  s.jac_u = [c](const Vec& x, const Vec&) {
    return std::vector<Vec>{{0.0}, {c * std::cos(x[0])}};
  };
  return s;
}

/** Conservative closed-form bounds for the pendulum on X x U.  The vector
 *  field bound uses unit bounds on the trig terms; the state Jacobian bound
 *  uses the trig ranges attained on the state box. */
inline sizing::SystemBounds pendulum_interval_bounds(const PendulumParams& p,
                                                     const DomainBox& state_box,
                                                     const DomainBox& control_box) {
  const double a = p.gravity / p.length;
  const double d = p.friction / (p.mass * p.length * p.length);
  const double c = 1.0 / (p.mass * p.length);
  const double x1_abs = std::max(std::abs(state_box.lower[0]), std::abs(state_box.upper[0]));
  const double x2_abs = std::max(std::abs(state_box.lower[1]), std::abs(state_box.upper[1]));
  const double u_abs = std::max(std::abs(control_box.lower[0]), std::abs(control_box.upper[0]));
  const double sin_max = x1_abs < M_PI / 2 ? std::sin(x1_abs) : 1.0;
  const double cos_max = 1.0;

  sizing::SystemBounds b;
  b.k_vf = std::max(x2_abs, a + d * x2_abs + c * u_abs);
  b.k_x = std::max(1.0, a * cos_max + c * u_abs * sin_max + d);
  b.k_u = c * cos_max;
  return b;  // k_cont and delta are problem data, not plant data
}

struct EstimatedBounds {
  double k_x = 0.0;
  double k_u = 0.0;
  double k_vf = 0.0;      // inflated by the safety factor
  double k_vf_raw = 0.0;  // plain sampled maximum
  double safety = 1.1;
};

namespace detail {

inline std::vector<Vec> fd_jacobian(const Field& f, const Vec& x, const Vec& u, bool wrt_state,
                                    double step = 1e-6) {
  const Vec base = f(x, u);
  const int cols = wrt_state ? static_cast<int>(x.size()) : static_cast<int>(u.size());
  std::vector<Vec> jac(base.size(), Vec(cols));
  for (int c = 0; c < cols; ++c) {
    Vec xp = x, xm = x, up = u, um = u;
    if (wrt_state) {
      xp[c] += step;
      xm[c] -= step;
    } else {
      up[c] += step;
      um[c] -= step;
    }
    const Vec fp = f(xp, up), fm = f(xm, um);
    for (std::size_t r = 0; r < base.size(); ++r) jac[r][c] = (fp[r] - fm[r]) / (2.0 * step);
  }
  return jac;
}

inline double max_row_sum(const std::vector<Vec>& jac) {
  double m = 0.0;
  for (const auto& row : jac) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    m = std::max(m, s);
  }
  return m;
}

}  // namespace detail

/** Grid-sampled Lipschitz and sup bounds over X x U.  The vector-field sup
 *  is inflated by `safety` (grid sampling underestimates suprema); the
 *  Jacobian norms are reported as sampled.  Central differences with step
 *  1e-6 when no analytic Jacobian is supplied. */
inline EstimatedBounds estimate_bounds(const ControlSystem& sys, int grid_per_axis,
                                       double safety = 1.1) {
  if (grid_per_axis < 2) throw std::invalid_argument("estimate_bounds: need grid_per_axis >= 2");
  const int axes = sys.n + sys.m;
  std::vector<std::int64_t> idx(axes, 0);
  EstimatedBounds e;
  e.safety = safety;

  auto coord = [&](int axis, std::int64_t i) {
    const DomainBox& box = axis < sys.n ? sys.state_box : sys.control_box;
    const int k = axis < sys.n ? axis : axis - sys.n;
    return box.lower[k] + box.width(k) * static_cast<double>(i) / (grid_per_axis - 1);
  };

  while (true) {
    Vec x(sys.n), u(sys.m);
    for (int a = 0; a < sys.n; ++a) x[a] = coord(a, idx[a]);
    for (int a = 0; a < sys.m; ++a) u[a] = coord(sys.n + a, idx[sys.n + a]);

    const Vec fx = sys.f(x, u);
    for (double v : fx)
      if (!std::isfinite(v)) throw NonFiniteError("estimate_bounds: vector field not finite");
    e.k_vf_raw = std::max(e.k_vf_raw, sup_norm(fx));

    const auto jx = sys.jac_x ? sys.jac_x(x, u) : detail::fd_jacobian(sys.f, x, u, true);
    const auto ju = sys.jac_u ? sys.jac_u(x, u) : detail::fd_jacobian(sys.f, x, u, false);
    e.k_x = std::max(e.k_x, detail::max_row_sum(jx));
    e.k_u = std::max(e.k_u, detail::max_row_sum(ju));

    int a = 0;
    while (a < axes && idx[a] == grid_per_axis - 1) idx[a++] = 0;
    if (a == axes) break;
    ++idx[a];
  }
  e.k_vf = e.k_vf_raw * safety;
  return e;
}

/** Feedback-linearizing PD law for the pendulum, saturated into the control
 *  box.  Valid on |x1| < pi/2 where cos x1 > 0; Lipschitz on the state box. */
inline Controller expert_controller(const PendulumParams& p, double k1, double k2,
                                    DomainBox control_box = DomainBox{{-6}, {6}}) {
  p.validate();
  const double a = p.gravity / p.length;
  const double d = p.friction / (p.mass * p.length * p.length);
  const double ml = p.mass * p.length;
  const double lo = control_box.lower[0], hi = control_box.upper[0];
  return [=](const Vec& x) -> Vec {
    const double u = (ml / std::cos(x[0])) * (-a * std::sin(x[0]) + d * x[1] - k1 * x[0] - k2 * x[1]);
    return {std::clamp(u, lo, hi)};
  };
}

/** Fixed-step RK4 integration of the closed loop x' = f(x, c(x)).  Records
 *  the state and the applied control at every step.  Throws DivergedError
 *  if the state leaves 1e3 times the box extent. */
inline Trajectory simulate(const ControlSystem& sys, const Controller& controller, const Vec& x0,
                           double horizon, double dt) {
  if (!(dt > 0.0) || horizon < dt) throw std::invalid_argument("simulate: need horizon >= dt > 0");
  const double blow_up = 1e3 * sys.state_box.extent();

  auto rhs = [&](const Vec& x) {
    return sys.f(x, controller(x));
  };
  auto axpy = [&](const Vec& x, double a, const Vec& d) {
    Vec y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + a * d[k];
    return y;
  };

  Trajectory tr;
  tr.dt = dt;
  const auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
  Vec x = x0;
  tr.t.push_back(0.0);
  tr.x.push_back(x);
  tr.u.push_back(controller(x));
  for (std::int64_t s = 0; s < steps; ++s) {
    const Vec k1 = rhs(x);
    const Vec k2 = rhs(axpy(x, 0.5 * dt, k1));
    const Vec k3 = rhs(axpy(x, 0.5 * dt, k2));
    const Vec k4 = rhs(axpy(x, dt, k3));
    for (std::size_t k = 0; k < x.size(); ++k)
      x[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    if (sup_norm(x) > blow_up)
      throw DivergedError("simulate: state norm exceeded 1e3 * ext(X) at t=" +
                          std::to_string((s + 1) * dt));
    tr.t.push_back((s + 1) * dt);
    tr.x.push_back(x);
    tr.u.push_back(controller(x));
  }
  return tr;
}

struct DeviationReport {
  double max_state_deviation = 0.0;     // sup-norm gap of the endpoints at tau
  double max_control_discrepancy = 0.0; // sup over time/time-aligned pairs of |ups - psi|
  Vec worst_x0;
};

/** Simulate both closed loops from shared initial conditions over [0, tau]
 *  and report the worst endpoint deviation plus the worst instantaneous
 *  control discrepancy between the two runs. */
inline DeviationReport deviation_check(const ControlSystem& sys, const Controller& psi,
                                       const Controller& upsilon, double tau,
                                       const std::vector<Vec>& initial_states,
                                       int steps_per_tau = 100) {
  if (!(tau > 0.0)) throw std::invalid_argument("deviation_check: tau must be positive");
  DeviationReport rep;
  const double dt = tau / steps_per_tau;
  for (const auto& x0 : initial_states) {
    const Trajectory a = simulate(sys, psi, x0, tau, dt);
    const Trajectory b = simulate(sys, upsilon, x0, tau, dt);
    const double dev = sup_dist(a.x.back(), b.x.back());
    if (dev > rep.max_state_deviation) {
      rep.max_state_deviation = dev;
      rep.worst_x0 = x0;
    }
    for (std::size_t s = 0; s < a.u.size(); ++s)
      rep.max_control_discrepancy =
          std::max(rep.max_control_discrepancy, sup_dist(a.u[s], b.u[s]));
  }
  return rep;
}

struct InvarianceReport {
  bool edge_recovers = true;    // every edge start maps into X \ edge after tau
  bool interior_stays = true;   // interior starts remain interior over the horizon
  bool verdict = false;
  Vec worst_start;
  double worst_margin = std::numeric_limits<double>::infinity();  // signed depth beyond delta
};

/** Margin-invariance probe: starts within delta of the boundary must land
 *  strictly deeper than delta after tau; interior starts must stay deeper
 *  than delta over a multi-tau horizon. */
inline InvarianceReport invariance_check(const ControlSystem& sys, const Controller& controller,
                                         double delta, double tau, int samples_per_axis = 9,
                                         int horizon_taus = 10, std::uint64_t seed = 7) {
  if (!(delta > 0.0) || delta >= sys.state_box.extent() / 2)
    throw std::invalid_argument("invariance_check: need 0 < delta < ext(X)/2");
  InvarianceReport rep;
  const DomainBox& X = sys.state_box;
  const double dt = tau / 100.0;

  std::vector<Vec> edge_starts, interior_starts;
  std::vector<std::int64_t> idx(sys.n, 0);
  while (true) {
    Vec x(sys.n);
    for (int k = 0; k < sys.n; ++k)
      x[k] = X.lower[k] + X.width(k) * static_cast<double>(idx[k]) / (samples_per_axis - 1);
    (X.boundary_distance(x) <= delta ? edge_starts : interior_starts).push_back(x);
    int a = 0;
    while (a < sys.n && idx[a] == samples_per_axis - 1) idx[a++] = 0;
    if (a == sys.n) break;
    ++idx[a];
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < 2 * samples_per_axis; ++s) {  // extra random probes near the boundary
    Vec x(sys.n);
    for (int k = 0; k < sys.n; ++k) {
      std::uniform_real_distribution<double> in(X.lower[k], X.upper[k]);
      x[k] = in(rng);
    }
    const int k = static_cast<int>(rng() % sys.n);
    x[k] = (rng() & 1) ? X.upper[k] - delta * 0.5 : X.lower[k] + delta * 0.5;
    edge_starts.push_back(x);
  }

  auto note = [&](const Vec& start, double margin) {
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_start = start;
    }
  };

  for (const auto& x0 : edge_starts) {
    const Trajectory tr = simulate(sys, controller, x0, tau, dt);
    const double margin = X.boundary_distance(tr.x.back()) - delta;
    note(x0, margin);
    if (margin <= 0.0) rep.edge_recovers = false;
  }
  for (const auto& x0 : interior_starts) {
    if (X.boundary_distance(x0) <= delta) continue;
    const Trajectory tr = simulate(sys, controller, x0, horizon_taus * tau, dt);
    for (const auto& x : tr.x) {
      const double margin = X.boundary_distance(x) - delta;
      if (margin <= 0.0) {
        rep.interior_stays = false;
        note(x0, margin);
        break;
      }
    }
  }
  rep.verdict = rep.edge_recovers && rep.interior_stays;
  return rep;
}

}  // namespace tllctl::dynamics
