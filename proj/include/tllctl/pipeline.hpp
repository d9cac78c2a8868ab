#pragma once

#include <memory>
#include <optional>
#include <thread>

#include "tllctl/cpwa.hpp"
#include "tllctl/dynamics.hpp"
#include "tllctl/sizing.hpp"
#include "tllctl/tll.hpp"

/* End-to-end glue: sizing chain -> grid construction -> lattice realization
 * -> lowering, plus the adapters that turn artifacts into feedback laws. */

namespace tllctl::pipeline {

struct PendulumSetup {
  dynamics::ControlSystem sys;
  dynamics::Controller expert;
  sizing::SystemBounds bounds;  // interval plant bounds + problem data
};

inline PendulumSetup make_pendulum_setup(const dynamics::PendulumParams& p, double k1, double k2,
                                         double k_cont, double delta,
                                         DomainBox X = DomainBox{{-1, -1}, {1, 1}},
                                         DomainBox U = DomainBox{{-6}, {6}}) {
  PendulumSetup s;
  s.sys = dynamics::make_pendulum_system(p, X, U);
  s.expert = dynamics::expert_controller(p, k1, k2, U);
  s.bounds = dynamics::pendulum_interval_bounds(p, s.sys.state_box, s.sys.control_box);
  s.bounds.k_cont = k_cont;
  s.bounds.delta = delta;
  return s;
}

struct BuildResult {
  sizing::SizingReport report;
  cpwa::GridCPWA grid;
  std::vector<cpwa::Piece> pieces;
  tll::TLLNetwork net;
  tll::ReluNetwork relu;
};

/** Sizing chain plus constructive realization of the expert at the derived
 *  (or forced) pitch. */
inline BuildResult build_controller(const dynamics::ControlSystem& sys,
                                    const dynamics::Controller& expert,
                                    const sizing::SystemBounds& bounds,
                                    std::optional<double> mu_override = std::nullopt,
                                    std::optional<double> eta_override = std::nullopt,
                                    double rho = 0.5,
                                    sizing::Rounding mode = sizing::Rounding::ceil) {
  BuildResult r;
  r.report = sizing::size_report(bounds, sys.state_box, sys.m, mu_override, mode);
  const double eta = eta_override.value_or(r.report.eta);
  r.grid = cpwa::build_grid_cpwa([&](const Vec& x) { return expert(x); },
                                 cpwa::make_partition(sys.state_box, eta, rho), sys.control_box);
  r.pieces = cpwa::enumerate_pieces(r.grid);
  r.net = tll::from_pieces(r.pieces, sys.state_box);
  r.relu = tll::lower_to_relu(r.net);
  return r;
}

inline dynamics::Controller controller_of(const cpwa::GridCPWA& grid) {
  return [grid](const Vec& x) { return grid.eval(x); };
}

inline dynamics::Controller controller_of(const tll::TLLNetwork& net, const DomainBox& X) {
  return [net, X](const Vec& x) { return net.eval(X.clamp(x)); };
}

inline dynamics::Controller controller_of(const tll::ReluNetwork& net, const DomainBox& X) {
  auto fwd = std::make_shared<tll::ReluForward>(net);
  return [fwd, X](const Vec& x) -> Vec { return (*fwd)(X.clamp(x)); };
}

/** Worst sup-norm gap between two evaluators over seeded low-discrepancy
 *  samples of the box, partitioned across threads with a max merge. */
template <typename F, typename G>
double sweep_gap(const F& make_a, const G& make_b, const DomainBox& box, std::int64_t samples,
                 std::uint64_t seed, int workers = 0) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, 16);
  std::vector<double> partial(workers, 0.0);
  std::vector<std::thread> pool;
  const std::int64_t chunk = (samples + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      auto eval_a = make_a();  // per-thread evaluators
      auto eval_b = make_b();
      const HaltonSampler sampler(box.dim(), seed);
      double worst = 0.0;
      const std::int64_t lo = w * chunk, hi = std::min(samples, (w + 1) * chunk);
      for (std::int64_t s = lo; s < hi; ++s) {
        const Vec x = sampler.box_point(static_cast<std::uint64_t>(s), box);
        const Vec a = eval_a(x), b = eval_b(x);
        for (std::size_t j = 0; j < a.size(); ++j)
          worst = std::max(worst, std::abs(a[j] - b[j]));
      }
      partial[w] = worst;
    });
  }
  for (auto& t : pool) t.join();
  double worst = 0.0;
  for (double v : partial) worst = std::max(worst, v);
  return worst;
}

struct BoxVerdict {
  bool enters_and_remains = false;
  double entry_time = -1.0;  // first time after which the box is never left
};

inline BoxVerdict enters_and_remains(const dynamics::Trajectory& tr, const DomainBox& box) {
  BoxVerdict v;
  if (tr.x.empty()) return v;
  std::size_t start = 0;  // first index from which the trajectory never leaves
  for (std::size_t s = 0; s < tr.x.size(); ++s)
    if (!box.contains(tr.x[s])) start = s + 1;
  if (start < tr.x.size()) {
    v.enters_and_remains = true;
    v.entry_time = tr.t[start];
  }
  return v;
}

}  // namespace tllctl::pipeline
