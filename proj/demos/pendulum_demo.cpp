// Walks the full pipeline on the inverted pendulum: plant bounds, the sizing
// chain, grid construction, the lattice realization, the rectifier lowering,
// and a closed-loop run.  Build with the project and run from anywhere.

#include <cstdio>

#include "tllctl/pipeline.hpp"
#include "tllctl/tllctl.hpp"

using namespace tllctl;

int main() {
  // plant and a stabilizing expert with a measured Lipschitz budget
  const dynamics::PendulumParams params;
  auto setup = pipeline::make_pendulum_setup(params, 4.0, 4.0, /*k_cont=*/20.0,
                                             /*delta=*/0.5);
  std::printf("plant bounds: k_x=%.2f k_u=%.2f k_vf=%.2f\n", setup.bounds.k_x,
              setup.bounds.k_u, setup.bounds.k_vf);

  // sizing: accuracy, sampling period, grid pitch, region budget
  const auto report = sizing::size_report(setup.bounds, setup.sys.state_box, setup.sys.m);
  std::printf("sizing: mu=%.3f tau=%.5f eta=%.4f regions<=%lld\n", report.mu, report.tau,
              report.eta, static_cast<long long>(report.region_bound));
  std::printf("architecture: %zu layers, first hidden width %lld\n",
              report.arch.layer_widths.size() - 1,
              static_cast<long long>(report.arch.layer_widths[1]));

  // constructive realization of the expert at the derived pitch
  const auto built = pipeline::build_controller(setup.sys, setup.expert, setup.bounds);
  std::printf("grid: %lld centers, %zu pieces; lattice: N=%zu, M=%zu\n",
              static_cast<long long>(built.grid.part.num_centers()), built.pieces.size(),
              built.net.outputs[0].fns.size(), built.net.outputs[0].groups.size());

  const double sup = cpwa::sup_error(
      built.grid, [&](const Vec& x) { return setup.expert(x); }, 20000, 1);
  std::printf("sup |grid - expert| = %.4f (budget mu/3 = %.4f)\n", sup, report.mu / 3.0);

  // closed loop under the lowered network
  const auto controller = pipeline::controller_of(built.relu, setup.sys.state_box);
  const auto tr = dynamics::simulate(setup.sys, controller, {0.7, 0.5}, 10.0, 1e-3);
  const auto verdict = pipeline::enters_and_remains(tr, DomainBox({-1.0, -0.5}, {1.0, 0.5}));
  std::printf("closed loop from (0.7, 0.5): %s, entry at t=%.2fs, final=(%.3f, %.3f)\n",
              verdict.enters_and_remains ? "settles" : "does not settle", verdict.entry_time,
              tr.x.back()[0], tr.x.back()[1]);
  return 0;
}
