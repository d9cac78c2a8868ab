// Acceptance suite: one criterion per function, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.  Stated runtime budgets are checked
// in-process.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "tllctl/io.hpp"
#include "tllctl/pipeline.hpp"
#include "tllctl/tllctl.hpp"

using namespace tllctl;
using Clock = std::chrono::steady_clock;

namespace {

int g_checks = 0;
int g_failures = 0;

#define CHECK(cond, ...)                              \
  do {                                                \
    ++g_checks;                                       \
    if (!(cond)) {                                    \
      ++g_failures;                                   \
      std::printf("    check failed: " __VA_ARGS__); \
      std::printf(" [%s:%d]\n", __FILE__, __LINE__);  \
      ok = false;                                     \
    }                                                 \
  } while (0)

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/* 1 ------------------------------------------------------------------ */
bool reference_table_regression() {
  bool ok = true;
  const auto t0 = Clock::now();

  struct Row {
    double mu, delta, tau, eta;
    std::int64_t regions;
  };
  const Row rows[] = {{0.35, 0.8694, 0.0098, 0.583, 235}, {0.3, 0.5287, 0.0083, 0.5, 320},
                      {0.25, 0.3039, 0.0069, 0.417, 460}, {0.2, 0.1610, 0.0056, 0.334, 720},
                      {0.15, 0.0749, 0.0042, 0.25, 1280}, {0.1, 0.0275, 0.0028, 0.167, 2880}};

  auto b = dynamics::pendulum_interval_bounds({}, DomainBox({-1, -1}, {1, 1}),
                                              DomainBox({-6}, {6}));
  b.k_cont = 0.1;  // back-solved table constant
  b.delta = 1.0;
  CHECK(std::abs(b.k_vf - 59.6) < 1e-9, "k_vf=%.12f", b.k_vf);

  const auto sys = dynamics::make_pendulum_system();
  const auto est = dynamics::estimate_bounds(sys, 41);
  sizing::SystemBounds sampled = b;
  sampled.k_x = est.k_x;
  sampled.k_u = est.k_u;

  for (const auto& row : rows) {
    const auto [tau, eta] = sizing::derive_tau_eta(row.mu, b);
    const auto regions = sizing::region_bound(2, 1, 2.0, eta, sizing::Rounding::floor);
    CHECK(std::abs(eta - row.eta) <= 1e-3 + 1e-12, "eta %.6f vs %.3f", eta, row.eta);
    CHECK(std::abs(tau - row.tau) <= 1e-4 + 1e-12, "tau %.6f vs %.4f", tau, row.tau);
    CHECK(regions == row.regions, "regions %lld vs %lld", static_cast<long long>(regions),
          static_cast<long long>(row.regions));
    CHECK(sizing::mu_inequality_lhs(row.mu, sampled) < row.delta, "g(mu) vs delta at mu=%.2f",
          row.mu);
  }
  const double elapsed = seconds_since(t0);
  CHECK(elapsed < 1.0, "runtime %.2fs exceeds 1s", elapsed);
  return ok;
}

/* 2 ------------------------------------------------------------------ */
bool corner_interpolation_suite() {
  bool ok = true;
  std::mt19937_64 rng(6021);
  std::uniform_real_distribution<double> val(-8.0, 8.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // 10^4 random corner assignments spread over k = 1, 2, 3
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 1 + trial % 3;
    cpwa::GammaFunction g;
    g.dim = k;
    g.corner_values.resize(std::size_t{1} << k);
    for (auto& v : g.corner_values) v = val(rng);

    for (std::size_t mask = 0; mask < g.corner_values.size(); ++mask) {
      Vec x(k);
      for (int j = 0; j < k; ++j) x[j] = static_cast<double>((mask >> j) & 1);
      if (cpwa::gamma_eval(g, x) != g.corner_values[mask]) {
        CHECK(false, "corner not exact at k=%d", k);
        return ok;
      }
    }
    const double lo = *std::min_element(g.corner_values.begin(), g.corner_values.end());
    const double hi = *std::max_element(g.corner_values.begin(), g.corner_values.end());
    for (int s = 0; s < 5; ++s) {
      Vec x(k);
      for (int j = 0; j < k; ++j) x[j] = unit(rng);
      const double v = cpwa::gamma_eval(g, x);
      if (v < lo || v > hi) {
        CHECK(false, "range bound violated at k=%d", k);
        return ok;
      }
    }
  }

  // linear region counts for k = 1 and k = 2
  auto fit_line = [](double v0, double v1) {
    return std::pair<double, double>{v1 - v0, v0};
  };
  for (int trial = 0; trial < 300; ++trial) {
    cpwa::GammaFunction g1{1, {val(rng), val(rng)}};
    const auto [w, b] = fit_line(g1.corner_values[0], g1.corner_values[1]);
    for (int s = 0; s < 20; ++s) {
      const double x = unit(rng);
      CHECK(std::abs(cpwa::gamma_eval(g1, {x}) - (w * x + b)) <= 1e-12,
            "k=1 interpolation is a single line");
    }

    cpwa::GammaFunction g2{2, {val(rng), val(rng), val(rng), val(rng)}};
    // the four radial triangles are each affine; count the distinct maps
    const Vec apex{0.5, 0.5};
    const Vec corners[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::set<std::tuple<long long, long long, long long>> maps;
    for (int tri = 0; tri < 4; ++tri) {
      const Vec& a = corners[tri];
      const Vec& c = corners[(tri + 1) % 4];
      // affine fit from the three vertices
      const double fa = cpwa::gamma_eval(g2, a), fc = cpwa::gamma_eval(g2, c),
                   fm = cpwa::gamma_eval(g2, apex);
      const double a11 = c[0] - a[0], a12 = c[1] - a[1];
      const double a21 = apex[0] - a[0], a22 = apex[1] - a[1];
      const double det = a11 * a22 - a12 * a21;
      const double wx = ((fc - fa) * a22 - (fm - fa) * a12) / det;
      const double wy = (a11 * (fm - fa) - a21 * (fc - fa)) / det;
      const double bb = fa - wx * a[0] - wy * a[1];
      // interior sample confirms the map is active on the whole triangle
      const Vec mid{(a[0] + c[0] + apex[0]) / 3.0, (a[1] + c[1] + apex[1]) / 3.0};
      CHECK(std::abs(cpwa::gamma_eval(g2, mid) - (wx * mid[0] + wy * mid[1] + bb)) <= 1e-9,
            "triangle %d is affine", tri);
      maps.insert({std::llround(wx * 1e7), std::llround(wy * 1e7), std::llround(bb * 1e7)});
    }
    CHECK(maps.size() <= 4, "k=2 region count %zu > 4", maps.size());
  }
  return ok;
}

/* 3 ------------------------------------------------------------------ */
bool grid_approximation_bound() {
  bool ok = true;
  const auto t0 = Clock::now();
  const double k_cont = 1.0;
  const double eta = 0.1;
  const double mu = 6.0 * k_cont * eta;
  const DomainBox dom({0.0, 0.0}, {1.0, 1.0});
  const DomainBox control({-100.0}, {100.0});
  const auto bound = sizing::region_bound(2, 1, dom.extent(), eta);

  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> freq(1.0, 12.0), phase(0.0, 6.28), unit(0.0, 1.0);
  for (int inst = 0; inst < 50; ++inst) {
    // mixture with sup-norm Lipschitz constant exactly k_cont * (w1+w2+2*w3)
    const double a1 = freq(rng), a2 = freq(rng), a3 = freq(rng);
    const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
    double w1 = unit(rng), w2 = unit(rng), w3 = unit(rng);
    const double norm = w1 + w2 + 2.0 * w3;
    w1 /= norm;
    w2 /= norm;
    w3 /= norm;
    auto oracle = [=](const Vec& x) {
      return Vec{k_cont * (w1 * std::sin(a1 * x[0] + p1) / a1 +
                           w2 * std::sin(a2 * x[1] + p2) / a2 +
                           w3 * std::sin(a3 * (x[0] + x[1]) + p3) / a3)};
    };
    const auto grid =
        cpwa::build_grid_cpwa(oracle, cpwa::make_partition(dom, eta, 0.5), control);
    const double sup = cpwa::sup_error(grid, oracle, 10000, 9000 + inst);
    CHECK(sup <= mu / 3.0 + 1e-9, "sup error %.6f > mu/3 for instance %d", sup, inst);
    const auto pieces = cpwa::enumerate_pieces(grid);
    CHECK(static_cast<std::int64_t>(pieces.size()) <= bound, "piece count %zu > bound %lld",
          pieces.size(), static_cast<long long>(bound));
  }
  const double elapsed = seconds_since(t0);
  CHECK(elapsed < 30.0, "runtime %.1fs exceeds 30s", elapsed);
  return ok;
}

/* 4 ------------------------------------------------------------------ */
bool lattice_equivalence() {
  bool ok = true;
  const std::int64_t sweep = 100000;

  auto check_grid = [&](const cpwa::GridCPWA& grid, const char* name) {
    const auto net = tll::from_pieces(cpwa::enumerate_pieces(grid), grid.part.domain);
    const auto relu = tll::lower_to_relu(net);
    const double tll_gap = pipeline::sweep_gap(
        [&]() { return [&](const Vec& x) { return net.eval(x); }; },
        [&]() { return [&](const Vec& x) { return grid.eval(x); }; }, grid.part.domain, sweep,
        71);
    const double relu_gap = pipeline::sweep_gap(
        [&]() {
          auto fwd = std::make_shared<tll::ReluForward>(relu);
          return [fwd](const Vec& x) -> Vec { return (*fwd)(x); };
        },
        [&]() { return [&](const Vec& x) { return net.eval(x); }; }, grid.part.domain, sweep,
        72);
    CHECK(tll_gap <= 1e-8, "%s: |tll-cpwa| = %.3e", name, tll_gap);
    CHECK(relu_gap <= 1e-6, "%s: |relu-tll| = %.3e", name, relu_gap);
  };

  // the pendulum expert at the reference pitch
  const auto setup = pipeline::make_pendulum_setup({}, 4.0, 4.0, 0.1, 0.8694);
  const auto grid = cpwa::build_grid_cpwa([&](const Vec& x) { return setup.expert(x); },
                                          cpwa::make_partition(setup.sys.state_box, 0.25, 0.5),
                                          setup.sys.control_box);
  check_grid(grid, "pendulum");

  // twenty random planar grids
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> freq(0.5, 6.0), phase(0.0, 6.28);
  std::uniform_real_distribution<double> pitch(0.22, 0.4), shrink(0.3, 0.7);
  for (int inst = 0; inst < 20; ++inst) {
    const double a1 = freq(rng), a2 = freq(rng), p1 = phase(rng), p2 = phase(rng);
    auto oracle = [=](const Vec& x) {
      return Vec{std::sin(a1 * x[0] + p1) + std::cos(a2 * x[1] + p2)};
    };
    const auto g = cpwa::build_grid_cpwa(
        oracle, cpwa::make_partition(DomainBox({0, 0}, {1, 1}), pitch(rng), shrink(rng)),
        DomainBox({-10}, {10}));
    check_grid(g, ("random #" + std::to_string(inst)).c_str());
  }
  return ok;
}

/* 5 ------------------------------------------------------------------ */
bool deviation_growth_bound() {
  bool ok = true;
  const auto setup = pipeline::make_pendulum_setup({}, 4.0, 4.0, 0.1, 0.8694);
  const auto& sys = setup.sys;
  const auto& expert = setup.expert;

  // offset controllers at the reference-row sampling period
  {
    sizing::SystemBounds b = setup.bounds;  // interval constants, k_cont = 0.1
    const auto [tau, eta] = sizing::derive_tau_eta(0.35, b);
    (void)eta;
    const HaltonSampler sampler(2, 99);
    int run = 0;
    for (double kappa : {0.05, 0.125, 0.2, 0.275, 0.35}) {
      dynamics::Controller offset = [&, kappa](const Vec& x) {
        return Vec{std::clamp(expert(x)[0] + kappa, sys.control_box.lower[0],
                              sys.control_box.upper[0])};
      };
      std::vector<Vec> starts;
      for (int s = 0; s < 20; ++s) starts.push_back(sampler.box_point(run * 20 + s, sys.state_box));
      const auto rep = dynamics::deviation_check(sys, expert, offset, tau, starts);
      const double bound = sizing::gronwall_bound(kappa, tau, b.k_x, b.k_u);
      CHECK(rep.max_state_deviation <= bound, "kappa=%.3f: deviation %.3e > bound %.3e", kappa,
            rep.max_state_deviation, bound);
      ++run;
    }
  }

  // full chain with a self-consistent Lipschitz budget: the deviation at tau
  // stays within the robustness margin that sized the construction
  {
    double lip = 0.0;
    const int g = 80;
    for (int i = 0; i <= g; ++i)
      for (int j = 0; j <= g; ++j) {
        const Vec x{-1.0 + 2.0 * i / g, -1.0 + 2.0 * j / g};
        for (int axis = 0; axis < 2; ++axis) {
          Vec y = x;
          y[axis] += 1e-5;
          if (y[axis] > 1.0) continue;
          lip = std::max(lip, std::abs(expert(y)[0] - expert(x)[0]) / 1e-5);
        }
      }

    sizing::SystemBounds b = setup.bounds;
    b.k_cont = 1.2 * lip;  // honest budget for this expert
    b.delta = 0.5;
    const double mu = sizing::solve_mu(b);
    const auto [tau, eta] = sizing::derive_tau_eta(mu, b);
    const auto grid = cpwa::build_grid_cpwa([&](const Vec& x) { return expert(x); },
                                            cpwa::make_partition(sys.state_box, eta, 0.5),
                                            sys.control_box);
    const double sup = cpwa::sup_error(grid, [&](const Vec& x) { return expert(x); }, 10000, 3);
    CHECK(sup <= mu / 3.0 + 1e-9, "chain: sup error %.4f > mu/3 = %.4f", sup, mu / 3.0);

    const auto approx = pipeline::controller_of(grid);
    const HaltonSampler sampler(2, 17);
    std::vector<Vec> starts;
    for (int s = 0; s < 100; ++s) starts.push_back(sampler.box_point(s, sys.state_box));
    const auto rep = dynamics::deviation_check(sys, expert, approx, tau, starts);
    CHECK(rep.max_state_deviation <= b.delta, "chain: deviation %.4f > delta %.2f",
          rep.max_state_deviation, b.delta);
    std::printf("    [chain: L=%.1f, mu=%.2f, eta=%.4f, tau=%.5f, dev=%.2e <= %.2f]\n", lip, mu,
                eta, tau, rep.max_state_deviation, b.delta);
  }
  return ok;
}

/* 6 ------------------------------------------------------------------ */
bool simulation_checker_oracle() {
  bool ok = true;
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> coord(0.0, 3.0), dpick(0.0, 2.0), unit(0.0, 1.0);

  auto random_fts = [&](const std::vector<Vec>& pts, int labels, double p) {
    simrel::FiniteTransitionSystem fts;
    fts.dim = static_cast<int>(pts.front().size());
    fts.states = pts;
    for (int l = 0; l < labels; ++l) fts.labels.push_back(std::string(1, char('a' + l)));
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      for (int l = 0; l < labels; ++l)
        for (int j = 0; j < static_cast<int>(pts.size()); ++j)
          if (unit(rng) < p) fts.transitions.insert({i, l, j});
    return fts;
  };

  // exhaustive relation search agrees with the fixed point
  for (int inst = 0; inst < 200; ++inst) {
    const int ns = 2 + static_cast<int>(rng() % 2), nt = 2 + static_cast<int>(rng() % 2);
    std::vector<Vec> ps, pt;
    for (int i = 0; i < ns; ++i) ps.push_back({coord(rng)});
    for (int i = 0; i < nt; ++i) pt.push_back({coord(rng)});
    const int labels = 1 + static_cast<int>(rng() % 2);
    const auto s = random_fts(ps, labels, 0.35);
    const auto t = random_fts(pt, labels, 0.35);
    const double delta = dpick(rng);

    bool brute = false;
    const int bits = ns * nt;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits) && !brute; ++mask) {
      std::vector<std::pair<int, int>> pairs;
      for (int bit = 0; bit < bits; ++bit)
        if (mask >> bit & 1) pairs.emplace_back(bit / nt, bit % nt);
      brute = simrel::verify_relation(s, t, delta, pairs);
    }
    const auto res = simrel::check_ad_sim(s, t, delta);
    CHECK(res.ok == brute, "instance %d: fixed point %d vs brute force %d", inst, res.ok, brute);
  }

  // two readings of the disturbance relation coincide on shared-point
  // instances with delta below the state separation
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<Vec> pts;
    for (int i = 0; i < 4; ++i) pts.push_back({coord(rng), coord(rng)});
    pts.push_back(pts[rng() % 4]);
    double min_sep = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        const double d = sup_dist(pts[a], pts[b]);
        if (d > 0.0) min_sep = std::min(min_sep, d);
      }
    const double delta = 0.4 * min_sep;
    const auto s = random_fts(pts, 2, 0.3);
    const auto t = random_fts(pts, 2, 0.3);
    const bool direct = simrel::check_ad_sim(s, t, delta).ok;
    const bool staged = simrel::check_ad_sim(simrel::perturb(s, delta), t, 0.0).ok;
    CHECK(direct == staged, "instance %d: direct %d vs staged %d", inst, direct, staged);
  }
  return ok;
}

/* 7 ------------------------------------------------------------------ */
bool closed_loop_regression() {
  bool ok = true;
  const auto t0 = Clock::now();
  const auto setup = pipeline::make_pendulum_setup({}, 4.0, 4.0, 0.1, 0.8694);
  const auto built = pipeline::build_controller(setup.sys, setup.expert, setup.bounds, 0.15);
  CHECK(std::abs(built.report.eta - 0.25) < 1e-12, "sizing chain pitch %.4f", built.report.eta);

  const auto controller = pipeline::controller_of(built.net, setup.sys.state_box);
  const DomainBox spec_box({-1.0, -0.5}, {1.0, 0.5});
  for (const Vec& x0 : {Vec{0.7, 0.5}, Vec{-0.4, 1.0}}) {
    const auto tr = dynamics::simulate(setup.sys, controller, x0, 10.0, 1e-3);
    const auto verdict = pipeline::enters_and_remains(tr, spec_box);
    CHECK(verdict.enters_and_remains, "x0=(%.1f,%.1f) does not settle", x0[0], x0[1]);
    CHECK(verdict.entry_time <= 10.0, "entry time %.2f", verdict.entry_time);
    std::printf("    [x0=(%+.1f,%+.1f): entry at t=%.2fs, final=(%.3f,%.3f)]\n", x0[0], x0[1],
                verdict.entry_time, tr.x.back()[0], tr.x.back()[1]);
  }
  const double elapsed = seconds_since(t0);
  CHECK(elapsed < 10.0, "runtime %.1fs exceeds 10s", elapsed);
  return ok;
}

/* 8 ------------------------------------------------------------------ */
bool numerical_sanity() {
  bool ok = true;

  // RK4 order factor on exponential decay
  dynamics::ControlSystem decay;
  decay.n = 1;
  decay.m = 1;
  decay.state_box = DomainBox({-1.0}, {1.0});
  decay.control_box = DomainBox({-1.0}, {1.0});
  decay.f = [](const Vec& x, const Vec&) { return Vec{-x[0]}; };
  const auto zero = [](const Vec&) { return Vec{0.0}; };
  const double exact = 0.36787944117144233;
  const double e1 = std::abs(dynamics::simulate(decay, zero, {1.0}, 1.0, 0.1).x.back()[0] - exact);
  const double e2 =
      std::abs(dynamics::simulate(decay, zero, {1.0}, 1.0, 0.05).x.back()[0] - exact);
  CHECK(e1 / e2 >= 12.0 && e1 / e2 <= 20.0, "RK4 order factor %.2f outside [12,20]", e1 / e2);

  // every artifact JSON round-trips byte for byte
  const auto setup = pipeline::make_pendulum_setup({}, 4.0, 4.0, 0.1, 0.8694);
  const auto built = pipeline::build_controller(setup.sys, setup.expert, setup.bounds, 0.35);

  const std::string grid_text = io::to_json(built.grid).dump();
  CHECK(io::to_json(io::grid_cpwa_from_json(io::json::parse(grid_text))).dump() == grid_text,
        "grid round trip");
  const std::string tll_text = io::to_json(built.net).dump();
  CHECK(io::to_json(io::tll_from_json(io::json::parse(tll_text))).dump() == tll_text,
        "tll round trip");
  const std::string relu_text = io::to_json(built.relu).dump();
  CHECK(io::to_json(io::relu_from_json(io::json::parse(relu_text))).dump() == relu_text,
        "relu round trip");
  const std::string report_text = io::to_json(built.report).dump();
  CHECK(io::to_json(io::sizing_report_from_json(io::json::parse(report_text))).dump() ==
            report_text,
        "sizing report round trip");

  const auto fts = simrel::quantize_embedding(setup.sys, setup.expert, 0.01, 0.5, 20);
  const std::string fts_text = io::to_json(fts).dump();
  CHECK(io::to_json(io::fts_from_json(io::json::parse(fts_text))).dump() == fts_text,
        "transition system round trip");
  return ok;
}

struct Criterion {
  const char* name;
  bool (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"reference-table regression", reference_table_regression},
      {"corner interpolation: exactness, range, region counts", corner_interpolation_suite},
      {"grid approximation accuracy and piece budget", grid_approximation_bound},
      {"lattice and lowering equivalence sweeps", lattice_equivalence},
      {"closed-loop deviation growth bounds", deviation_growth_bound},
      {"simulation checker against exhaustive search", simulation_checker_oracle},
      {"closed-loop pendulum regression", closed_loop_regression},
      {"numerical sanity: integrator order, artifact round-trips", numerical_sanity},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    const bool pass = c.run();
    std::printf("[%s] %s (%.1fs)\n", pass ? "PASS" : "FAIL", c.name, seconds_since(t0));
    failed += pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed (%d checks, %d failures)\n",
              static_cast<int>(std::size(criteria)) - failed, std::size(criteria), g_checks,
              g_failures);
  return failed == 0 ? 0 : 1;
}
