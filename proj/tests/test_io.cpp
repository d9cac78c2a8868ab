#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "tllctl/io.hpp"

using namespace tllctl;

namespace {

cpwa::GridCPWA sample_grid(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  const double a = val(rng), b = val(rng);
  auto oracle = [=](const Vec& x) { return Vec{std::sin(a * x[0]) + std::cos(b * x[1])}; };
  return cpwa::build_grid_cpwa(oracle,
                               cpwa::make_partition(DomainBox({-1, -1}, {1, 1}), 0.4, 0.5),
                               DomainBox({-10}, {10}));
}

}  // namespace

TEST_CASE("grid artifacts round-trip bit exactly", "[io]") {
  const auto grid = sample_grid(11);
  const auto j = io::to_json(grid);
  const std::string text = j.dump(2);
  const auto back = io::grid_cpwa_from_json(io::json::parse(text));

  REQUIRE(back.values.size() == grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i)
    REQUIRE(back.values[i] == grid.values[i]);  // bitwise
  REQUIRE(back.part.pitch == grid.part.pitch);
  REQUIRE(back.part.counts == grid.part.counts);

  // serialize -> parse -> serialize is byte identical
  REQUIRE(io::to_json(back).dump(2) == text);
}

TEST_CASE("lattice and lowered networks round-trip bit exactly", "[io]") {
  const auto grid = sample_grid(21);
  const auto net = tll::from_pieces(cpwa::enumerate_pieces(grid), grid.part.domain);
  const auto relu = tll::lower_to_relu(net);

  const std::string tll_text = io::to_json(net).dump();
  const auto net2 = io::tll_from_json(io::json::parse(tll_text));
  REQUIRE(io::to_json(net2).dump() == tll_text);

  const std::string relu_text = io::to_json(relu).dump();
  const auto relu2 = io::relu_from_json(io::json::parse(relu_text));
  REQUIRE(io::to_json(relu2).dump() == relu_text);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const Vec x{unit(rng), unit(rng)};
    REQUIRE(net2.eval(x)[0] == net.eval(x)[0]);
    REQUIRE(relu2.eval(x)[0] == relu.eval(x)[0]);
  }
}

TEST_CASE("sizing report round-trips", "[io]") {
  sizing::SystemBounds b{55.8, 4.0, 59.6, 0.1, 0.8694};
  const auto rep = sizing::size_report(b, DomainBox({-1, -1}, {1, 1}), 1, 0.15);
  const std::string text = io::to_json(rep).dump(2);
  const auto back = io::sizing_report_from_json(io::json::parse(text));
  REQUIRE(back.mu == rep.mu);
  REQUIRE(back.eta == rep.eta);
  REQUIRE(back.tau == rep.tau);
  REQUIRE(back.region_bound == rep.region_bound);
  REQUIRE(io::to_json(back).dump(2) == text);
}

TEST_CASE("transition systems round-trip and export to DOT", "[io]") {
  simrel::FiniteTransitionSystem fts;
  fts.dim = 2;
  fts.states = {{0.0, 0.5}, {1.0 / 3.0, -0.1}};
  fts.labels = {"u@0", "u@1"};
  fts.transitions = {{0, 0, 1}, {1, 1, 1}};

  const std::string text = io::to_json(fts).dump();
  const auto back = io::fts_from_json(io::json::parse(text));
  REQUIRE(back.states == fts.states);
  REQUIRE(back.transitions == fts.transitions);
  REQUIRE(io::to_json(back).dump() == text);

  const std::string dot = io::to_dot(fts, "embedding");
  REQUIRE(dot.find("digraph embedding") != std::string::npos);
  REQUIRE(dot.find("s0 -> s1") != std::string::npos);
  REQUIRE(dot.find("u@1") != std::string::npos);
}

TEST_CASE("trajectory CSV has the documented column layout", "[io]") {
  dynamics::Trajectory tr;
  tr.dt = 0.5;
  tr.t = {0.0, 0.5};
  tr.x = {{1.0, 2.0}, {3.0, 4.0}};
  tr.u = {{-1.0}, {-2.0}};
  std::ostringstream os;
  io::write_trajectory_csv(os, tr);
  const std::string csv = os.str();
  REQUIRE(csv.rfind("t,x1,x2,u1\n", 0) == 0);
  REQUIRE(csv.find("0.5,3,4,-2\n") != std::string::npos);
}

TEST_CASE("flat weights file carries every layer", "[io]") {
  const auto grid = sample_grid(31);
  const auto relu = tll::lower_to_relu(tll::from_pieces(cpwa::enumerate_pieces(grid),
                                                        grid.part.domain));
  std::ostringstream os;
  io::write_relu_weights(os, relu);
  const std::string text = os.str();
  REQUIRE(text.rfind("tllctl-relu-weights 1\n", 0) == 0);
  std::size_t layers = 0, pos = 0;
  while ((pos = text.find("\nlayer ", pos)) != std::string::npos) {
    ++layers;
    ++pos;
  }
  REQUIRE(layers == relu.layers.size());
}

TEST_CASE("doubles survive json round-trips bitwise", "[io]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> val(-1e6, 1e6);
  std::vector<double> xs;
  for (int i = 0; i < 2000; ++i) xs.push_back(val(rng));
  xs.push_back(1.0 / 3.0);
  xs.push_back(0.1);
  xs.push_back(2.2250738585072014e-308);
  const io::json j = xs;
  const auto back = io::json::parse(j.dump()).get<std::vector<double>>();
  for (std::size_t i = 0; i < xs.size(); ++i) REQUIRE(back[i] == xs[i]);
}
