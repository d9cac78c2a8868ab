#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tllctl/core.hpp"
#include "tllctl/cpwa.hpp"
#include "tllctl/dynamics.hpp"
#include "tllctl/simrel.hpp"
#include "tllctl/sizing.hpp"
#include "tllctl/tll.hpp"

/* JSON wire formats.  ordered_json keeps insertion order, which makes every
 * artifact byte-stable across runs; doubles use the shortest representation
 * that parses back to the same bits. */

namespace tllctl::io {

using json = nlohmann::ordered_json;

/* ---------------- sizing ---------------- */

inline json to_json(const sizing::SystemBounds& b) {
  return json{{"k_x", b.k_x}, {"k_u", b.k_u}, {"k_vf", b.k_vf},
              {"k_cont", b.k_cont}, {"delta", b.delta}};
}

inline sizing::SystemBounds bounds_from_json(const json& j) {
  sizing::SystemBounds b;
  b.k_x = j.at("k_x");
  b.k_u = j.at("k_u");
  b.k_vf = j.at("k_vf");
  b.k_cont = j.at("k_cont");
  b.delta = j.at("delta");
  return b;
}

inline json to_json(const DomainBox& b) {
  return json{{"lower", b.lower}, {"upper", b.upper}};
}

inline DomainBox box_from_json(const json& j) {
  return DomainBox(j.at("lower").get<Vec>(), j.at("upper").get<Vec>());
}

inline json to_json(const sizing::ArchDescriptor& a) {
  return json{{"num_linear_fns", a.num_linear_fns},
              {"num_selector_groups", a.num_selector_groups},
              {"layer_widths", a.layer_widths}};
}

inline sizing::ArchDescriptor arch_from_json(const json& j) {
  sizing::ArchDescriptor a;
  a.num_linear_fns = j.at("num_linear_fns");
  a.num_selector_groups = j.at("num_selector_groups");
  a.layer_widths = j.at("layer_widths").get<std::vector<std::int64_t>>();
  return a;
}

inline json to_json(const sizing::SizingReport& r) {
  json j;
  j["mu"] = r.mu;
  j["mu_overridden"] = r.mu_overridden;
  j["eta"] = r.eta;
  j["tau"] = r.tau;
  j["region_bound"] = r.region_bound;
  j["extent"] = r.extent;
  j["n"] = r.n;
  j["m"] = r.m;
  j["arch"] = to_json(r.arch);
  j["formulas"] = {
      {"mu", "largest mu with k_u*mu^2/(6*k_cont*k_vf)*exp(k_x*mu/(6*k_cont*k_vf)) < delta"},
      {"tau", "mu/(6*k_cont*k_vf)"},
      {"eta", "mu/(6*k_cont)"},
      {"region_bound", "m * sum_{k=1..n} n!/(n-k)! * 2^(2k-1) * (ext/eta)^n, rounded up"}};
  return j;
}

inline sizing::SizingReport sizing_report_from_json(const json& j) {
  sizing::SizingReport r;
  r.mu = j.at("mu");
  r.mu_overridden = j.at("mu_overridden");
  r.eta = j.at("eta");
  r.tau = j.at("tau");
  r.region_bound = j.at("region_bound");
  r.extent = j.at("extent");
  r.n = j.at("n");
  r.m = j.at("m");
  r.arch = arch_from_json(j.at("arch"));
  return r;
}

/* ---------------- cpwa ---------------- */

inline json to_json(const cpwa::GridCPWA& c) {
  json j;
  j["type"] = "grid_cpwa";
  j["domain"] = to_json(c.part.domain);
  j["eta"] = c.part.eta;
  j["rho"] = c.part.rho;
  j["counts"] = c.part.counts;
  j["pitch"] = c.part.pitch;
  j["m"] = c.m;
  j["control"] = to_json(c.control);
  j["clamp_domain"] = c.clamp_domain;
  j["clamped_samples"] = c.clamped_samples;
  j["values"] = c.values;  // center-major, axis 0 slowest
  return j;
}

inline cpwa::GridCPWA grid_cpwa_from_json(const json& j) {
  cpwa::GridCPWA c;
  c.part.domain = box_from_json(j.at("domain"));
  c.part.eta = j.at("eta");
  c.part.rho = j.at("rho");
  c.part.counts = j.at("counts").get<std::vector<int>>();
  c.part.pitch = j.at("pitch").get<Vec>();
  c.m = j.at("m");
  c.control = box_from_json(j.at("control"));
  c.clamp_domain = j.at("clamp_domain");
  c.clamped_samples = j.at("clamped_samples");
  c.values = j.at("values").get<Vec>();
  if (static_cast<std::int64_t>(c.values.size()) != c.part.num_centers() * c.m)
    throw std::invalid_argument("grid_cpwa_from_json: value array size mismatch");
  return c;
}

/* ---------------- tll / relu ---------------- */

inline json to_json(const tll::TLLNetwork& net) {
  json outputs = json::array();
  for (const auto& o : net.outputs) {
    json fns = json::array();
    for (const auto& f : o.fns) fns.push_back(json{{"w", f.w}, {"b", f.b}});
    outputs.push_back(json{{"linear_fns", fns}, {"groups", o.groups}});
  }
  return json{{"type", "tll"}, {"n", net.n}, {"m", net.m}, {"outputs", outputs}};
}

inline tll::TLLNetwork tll_from_json(const json& j) {
  tll::TLLNetwork net;
  net.n = j.at("n");
  net.m = j.at("m");
  for (const auto& jo : j.at("outputs")) {
    tll::ScalarTLL o;
    for (const auto& jf : jo.at("linear_fns"))
      o.fns.push_back(tll::AffineFn{jf.at("w").get<Vec>(), jf.at("b")});
    o.groups = jo.at("groups").get<std::vector<std::vector<int>>>();
    net.outputs.push_back(std::move(o));
  }
  net.validate();
  return net;
}

inline json to_json(const tll::ReluNetwork& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json rows = json::array();
    for (const auto& r : l.rows) {
      json terms = json::array();
      for (const auto& [c, w] : r.terms) terms.push_back(json::array({c, w}));
      rows.push_back(json{{"terms", terms}, {"bias", r.bias}});
    }
    layers.push_back(json{{"in", l.in}, {"out", l.out}, {"rows", rows}});
  }
  return json{{"type", "relu"}, {"n", net.n}, {"m", net.m}, {"layers", layers}};
}

inline tll::ReluNetwork relu_from_json(const json& j) {
  tll::ReluNetwork net;
  net.n = j.at("n");
  net.m = j.at("m");
  for (const auto& jl : j.at("layers")) {
    tll::ReluLayer l;
    l.in = jl.at("in");
    l.out = jl.at("out");
    for (const auto& jr : jl.at("rows")) {
      tll::SparseRow r;
      r.bias = jr.at("bias");
      for (const auto& jt : jr.at("terms"))
        r.terms.emplace_back(jt.at(0).get<int>(), jt.at(1).get<double>());
      l.rows.push_back(std::move(r));
    }
    net.layers.push_back(std::move(l));
  }
  return net;
}

/** Flat weights file: plain text, one sparse coordinate matrix and one bias
 *  vector per layer.  Layout:
 *
 *      tllctl-relu-weights 1
 *      layers <L> inputs <n> outputs <m>
 *      layer <k> rows <R> cols <C> nnz <Z>
 *      <row> <col> <weight>          (Z lines)
 *      bias <R>
 *      <b_0> ... <b_{R-1}>           (one line)
 *
 *  Rectifier on every layer except the last. */
inline void write_relu_weights(std::ostream& os, const tll::ReluNetwork& net) {
  os << "tllctl-relu-weights 1\n";
  os << "layers " << net.layers.size() << " inputs " << net.n << " outputs " << net.m << "\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& l = net.layers[k];
    std::size_t nnz = 0;
    for (const auto& r : l.rows) nnz += r.terms.size();
    os << "layer " << k << " rows " << l.out << " cols " << l.in << " nnz " << nnz << "\n";
    for (int r = 0; r < l.out; ++r)
      for (const auto& [c, w] : l.rows[r].terms) os << r << " " << c << " " << w << "\n";
    os << "bias " << l.out << "\n";
    for (int r = 0; r < l.out; ++r) os << (r ? " " : "") << l.rows[r].bias;
    os << "\n";
  }
}

/* ---------------- dynamics ---------------- */

inline void write_trajectory_csv(std::ostream& os, const dynamics::Trajectory& tr) {
  const int n = tr.x.empty() ? 0 : static_cast<int>(tr.x.front().size());
  const int m = tr.u.empty() ? 0 : static_cast<int>(tr.u.front().size());
  os << "t";
  for (int k = 1; k <= n; ++k) os << ",x" << k;
  for (int k = 1; k <= m; ++k) os << ",u" << k;
  os << "\n" << std::setprecision(17);
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    os << tr.t[s];
    for (double v : tr.x[s]) os << "," << v;
    for (double v : tr.u[s]) os << "," << v;
    os << "\n";
  }
}

/* ---------------- simrel ---------------- */

inline json to_json(const simrel::FiniteTransitionSystem& fts) {
  json transitions = json::array();
  for (const auto& [i, l, j] : fts.transitions) transitions.push_back(json::array({i, l, j}));
  return json{{"type", "fts"},
              {"dim", fts.dim},
              {"states", fts.states},
              {"labels", fts.labels},
              {"transitions", transitions}};
}

inline simrel::FiniteTransitionSystem fts_from_json(const json& j) {
  simrel::FiniteTransitionSystem fts;
  fts.dim = j.at("dim");
  fts.states = j.at("states").get<std::vector<Vec>>();
  fts.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& t : j.at("transitions"))
    fts.transitions.insert({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
  fts.validate();
  return fts;
}

inline std::string to_dot(const simrel::FiniteTransitionSystem& fts, const std::string& name) {
  std::ostringstream os;
  os << "digraph " << name << " {\n";
  os << std::setprecision(6);
  for (std::size_t i = 0; i < fts.states.size(); ++i) {
    os << "  s" << i << " [label=\"(";
    for (std::size_t k = 0; k < fts.states[i].size(); ++k)
      os << (k ? "," : "") << fts.states[i][k];
    os << ")\"];\n";
  }
  for (const auto& [i, l, j] : fts.transitions)
    os << "  s" << i << " -> s" << j << " [label=\"" << fts.labels[l] << "\"];\n";
  os << "}\n";
  return os.str();
}

inline json to_json(const simrel::SimRelation& r) {
  json pairs = json::array();
  for (auto [a, b] : r.pairs) pairs.push_back(json::array({a, b}));
  return json{{"delta", r.delta}, {"pairs", pairs}};
}

/* ---------------- files ---------------- */

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace tllctl::io
