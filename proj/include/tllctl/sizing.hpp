#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "tllctl/arch.hpp"
#include "tllctl/core.hpp"

namespace tllctl::sizing {

/** Lipschitz/robustness data that drives every sizing formula.
 *
 *  k_x    state Lipschitz constant of the vector field (1/time)
 *  k_u    input Lipschitz constant (state-rate per control unit)
 *  k_vf   sup-norm bound on the vector field over X x U (state units/time)
 *  k_cont Lipschitz budget of the hypothesized controller
 *  delta  robustness margin of the specification (state units, sup-norm)
 */
struct SystemBounds {
  double k_x = 0.0;
  double k_u = 0.0;
  double k_vf = 0.0;
  double k_cont = 0.0;
  double delta = 0.0;

  void validate() const {
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!pos(k_x) || !pos(k_u) || !pos(k_vf) || !pos(k_cont) || !pos(delta))
      throw std::invalid_argument("SystemBounds: all fields must be strictly positive and finite");
  }
};

enum class Rounding { ceil, floor, nearest };

/** Left-hand side of the accuracy inequality: g(mu) = k_u * mu * tau(mu) *
 *  exp(k_x * tau(mu)) with tau(mu) = mu / (6 k_cont k_vf).  Strictly
 *  increasing in mu on (0, inf). */
inline double mu_inequality_lhs(double mu, const SystemBounds& b) {
  const double tau = mu / (6.0 * b.k_cont * b.k_vf);
  return b.k_u * mu * tau * std::exp(b.k_x * tau);
}

/** Largest admissible accuracy: the unique mu* with g(mu*) = delta, returned
 *  one bisection step below mu* so that g(mu) < delta holds strictly.
 *  Relative tolerance 1e-10. */
inline double solve_mu(const SystemBounds& b) {
  b.validate();
  double lo = 0.0;
  // initial cap, expanded geometrically until it brackets the root
  double hi = b.delta * 6.0 * b.k_cont * b.k_vf / b.k_u;
  if (!std::isfinite(hi) || hi <= 0.0) hi = 1.0;
  while (mu_inequality_lhs(hi, b) < b.delta) {
    if (hi > 1e300)
      throw NonFiniteError("solve_mu: could not bracket the accuracy root below cap " +
                           std::to_string(hi));
    hi *= 2.0;
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mu_inequality_lhs(mid, b) < b.delta)
      lo = mid;
    else
      hi = mid;
  }
  return lo;  // below the boundary by construction
}

/** Largest admissible sampling period and grid pitch for a given accuracy:
 *  tau = mu / (6 k_cont k_vf), eta = mu / (6 k_cont). */
inline std::pair<double, double> derive_tau_eta(double mu, const SystemBounds& b) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("derive_tau_eta: mu must be >= 0");
  const double tau = mu / (6.0 * b.k_cont * b.k_vf);
  const double eta = mu / (6.0 * b.k_cont);
  return {tau, eta};
}

/** Exact integer coefficient sum_{k=1..n} (n!/(n-k)!) * 2^(2k-1). */
inline std::int64_t region_coefficient(int n) {
  if (n < 1) throw std::invalid_argument("region_coefficient: n must be >= 1");
  std::int64_t total = 0;
  std::int64_t falling = 1;  // n!/(n-k)! built incrementally
  std::int64_t pow4 = 2;     // 2^(2k-1)
  for (int k = 1; k <= n; ++k) {
    falling = tll::detail::checked_mul(falling, n - k + 1);
    total = tll::detail::checked_add(total, tll::detail::checked_mul(falling, pow4));
    if (k < n) pow4 = tll::detail::checked_mul(pow4, 4);
  }
  return total;
}

/** Region-count bound m * coef(n) * (ext/eta)^n, rounded per `mode`.
 *  Values within 1e-9 relative of an integer are snapped to it first, so an
 *  exact grid ratio carried through floating point still reports exactly. */
inline std::int64_t region_bound(int n, int m, double ext, double eta,
                                 Rounding mode = Rounding::ceil) {
  if (n < 1 || m < 1) throw std::invalid_argument("region_bound: n, m must be >= 1");
  if (!(ext > 0.0) || !(eta > 0.0) || eta > ext * (1.0 + 1e-12))
    throw std::invalid_argument("region_bound: need 0 < eta <= ext");

  const long double coef = static_cast<long double>(region_coefficient(n));
  long double value = static_cast<long double>(m) * coef;
  const long double ratio = static_cast<long double>(ext) / static_cast<long double>(eta);
  for (int k = 0; k < n; ++k) value *= ratio;

  const long double nearest_int = std::floor(value + 0.5L);
  if (std::abs(value - nearest_int) <= 1e-9L * std::max<long double>(1.0L, value))
    value = nearest_int;

  long double rounded = 0.0L;
  switch (mode) {
    case Rounding::ceil: rounded = std::ceil(value); break;
    case Rounding::floor: rounded = std::floor(value); break;
    case Rounding::nearest: rounded = std::floor(value + 0.5L); break;
  }
  if (rounded > static_cast<long double>(std::numeric_limits<std::int64_t>::max()))
    throw OverflowError("region_bound exceeds 64-bit integer range");
  return static_cast<std::int64_t>(rounded);
}

/** Trajectory deviation growth bound k_u * kappa * t * exp(k_x * t) for a
 *  control discrepancy kappa sustained over [0, t]. */
inline double gronwall_bound(double kappa, double t, double k_x, double k_u) {
  if (kappa < 0.0 || t < 0.0) throw std::invalid_argument("gronwall_bound: kappa, t must be >= 0");
  return k_u * kappa * t * std::exp(k_x * t);
}

struct SizingReport {
  double mu = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  std::int64_t region_bound = 0;
  ArchDescriptor arch;
  bool mu_overridden = false;
  double extent = 0.0;
  int n = 0;
  int m = 0;
};

/** Full sizing chain: mu (solved, or forced by `mu_override`), then tau and
 *  eta at their largest admissible values, then the region bound over the
 *  state box, then the worst-case architecture for that bound. */
inline SizingReport size_report(const SystemBounds& b, const DomainBox& state_box, int control_dim,
                                std::optional<double> mu_override = std::nullopt,
                                Rounding mode = Rounding::ceil) {
  b.validate();
  state_box.validate();
  if (control_dim < 1) throw std::invalid_argument("size_report: control dimension must be >= 1");

  SizingReport r;
  r.n = state_box.dim();
  r.m = control_dim;
  r.extent = state_box.extent();
  if (mu_override) {
    if (!(*mu_override > 0.0) || !std::isfinite(*mu_override))
      throw std::invalid_argument("size_report: mu override must be strictly positive");
    if (mu_inequality_lhs(*mu_override, b) >= b.delta)
      throw std::invalid_argument("size_report: forced mu violates the accuracy inequality "
                                  "for the given delta");
    r.mu = *mu_override;
    r.mu_overridden = true;
  } else {
    r.mu = solve_mu(b);
  }
  std::tie(r.tau, r.eta) = derive_tau_eta(r.mu, b);
  if (r.eta > r.extent)
    throw std::invalid_argument("size_report: derived pitch exceeds the box extent; "
                                "mu is too large for this domain");
  r.region_bound = region_bound(r.n, r.m, r.extent, r.eta, mode);
  r.arch = tll::arch_of_bound(std::max<std::int64_t>(r.region_bound, 1), r.n, r.m);
  return r;
}

}  // namespace tllctl::sizing
