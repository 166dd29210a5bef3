#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "supplybp/errors.hpp"
#include "supplybp/experiment.hpp"
#include "supplybp/gas.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace supplybp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;

struct Flags {
  std::string network;
  std::vector<std::string> graphs;
  std::string damping = "off";
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  std::size_t max_iters = 0;  // 0: per-command default
  double tol = 0.0;           // 0: per-command default
  std::string stop = "sweep";
  std::string pmu = "on";
  bool single_anchor = false;
  std::string out = "out";
};

GraphKind parse_kind(const std::string& s) {
  if (s == "fv") return GraphKind::Fv;
  if (s == "fc") return GraphKind::Fc;
  return GraphKind::Ff;
}

std::string lower(GraphKind k) {
  switch (k) {
    case GraphKind::Fv: return "fv";
    case GraphKind::Fc: return "fc";
    case GraphKind::Ff: return "ff";
  }
  return "?";
}

std::size_t worker_slots(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SUPPLYBP_THREADS")) {
    try {
      const auto cap = std::stoul(env);
      if (cap > 0) n = std::min<std::size_t>(n, cap);
    } catch (const std::exception&) {
      // ignore garbage, keep the hardware default
    }
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << text;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Uninformative problem over the network, only used for graph shapes.
std::shared_ptr<const ProblemSpec> structural_problem(std::shared_ptr<const Network> net) {
  MeasurementSet m;
  m.injections.resize(net->num_vertices());
  m.angles.resize(net->num_vertices());
  m.flows.resize(net->num_links());
  return std::make_shared<const ProblemSpec>(build_se_problem(net, m));
}

int cmd_graphinfo(const Flags& f) {
  auto net = std::make_shared<const Network>(load_network(f.network));
  const auto spec = structural_problem(net);
  json j;
  j["vertices"] = net->num_vertices();
  j["links"] = net->num_links();
  j["network_loops"] = network_loop_count(*net);
  for (GraphKind k : {GraphKind::Fv, GraphKind::Fc, GraphKind::Ff}) {
    const auto fg = build(k, spec);
    const auto p = lower(k);
    j[p + "_nodes"] = fg.variables.size() + fg.factors.size();
    j[p + "_edges"] = fg.edges.size();
    j[p + "_loops"] = fg_loop_count(fg);
  }
  std::cout << j.dump() << '\n';
  return 0;
}

json manifest_base(const std::string& command, const Flags& f) {
  json m;
  m["command"] = command;
  m["network"] = f.network;
  m["damping"] = f.damping;
  m["stop"] = f.stop;
  m["max_iters"] = f.max_iters;
  m["tol"] = f.tol;
  return m;
}

BpOptions bp_options(const Flags& f, std::uint64_t seed) {
  BpOptions o;
  o.max_iters = f.max_iters;
  o.tolerance = f.tol;
  o.stop_rule = f.stop == "halving" ? StopRule::HalvingDelta : StopRule::SweepDelta;
  if (f.damping == "coin") o.damping = Damping::coin(seed);
  return o;
}

int cmd_se(Flags f) {
  auto net = std::make_shared<const Network>(load_network(f.network));
  const auto truth = truth_angles(*net);
  if (f.max_iters == 0) f.max_iters = 10000;
  if (f.tol == 0.0) f.tol = f.stop == "halving" ? 1e-10 / 40 : 1e-9;
  if (f.graphs.empty()) f.graphs = {"ff", "fc", "fv"};
  std::vector<GraphKind> kinds;
  for (const auto& g : f.graphs) kinds.push_back(parse_kind(g));

  fs::create_directories(f.out);
  json manifest = manifest_base("se", f);
  manifest["graphs"] = f.graphs;
  manifest["pmu"] = f.pmu;
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < f.seeds; ++s) seeds.push_back(f.seed + s);
  manifest["seeds"] = seeds;
  manifest["scenario"] = {{"flow_injection_sigma2", Scenario{}.flow_injection_sigma2},
                          {"angle_sigma2", Scenario{}.angle_sigma2}};
  write_file(fs::path(f.out) / "manifest.json", manifest.dump(2) + "\n");

  // one job per seed, all graphs on the same measurements
  std::vector<std::vector<SeRun>> runs(seeds.size());
  std::vector<std::string> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < seeds.size();) {
      try {
        Scenario sc;
        sc.with_pmu = f.pmu == "on";
        sc.seed = seeds[k];
        const auto inst = make_se_instance(net, truth, sc);
        for (GraphKind kind : kinds) {
          auto r = run_se(inst, kind, bp_options(f, seeds[k]));
          std::ostringstream csv;
          write_trace_csv(csv, r.trace);
          write_file(fs::path(f.out) / ("se_" + lower(kind) + "_seed" + std::to_string(seeds[k]) + ".csv"), csv.str());
          runs[k].push_back(std::move(r));
        }
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const auto slots = worker_slots(seeds.size());
  for (std::size_t t = 0; t < slots; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);

  json summary;
  summary["runs"] = json::array();
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    for (const auto& r : runs[k]) {
      json j;
      j["graph"] = lower(r.kind);
      j["seed"] = seeds[k];
      j["status"] = to_string(r.trace.status);
      j["status_iter"] = r.trace.status_iter;
      j["sweeps"] = r.trace.sweeps();
      j["delta_mu"] = number_or_null(r.delta_mu);
      j["delta_sigma"] = number_or_null(r.delta_sigma);
      j["iters_to_tol"] = r.iters_to_tol ? json(*r.iters_to_tol) : json(nullptr);
      j["seconds_per_iter"] = r.seconds_per_iter;
      if (!r.trace.reason.empty()) j["reason"] = r.trace.reason;
      summary["runs"].push_back(j);
    }
  }
  for (std::size_t g = 0; g < kinds.size(); ++g) {
    double mu = 0.0, sigma = 0.0, spi = 0.0;
    std::size_t diverged = 0;
    for (const auto& per_seed : runs) {
      mu += per_seed[g].delta_mu;
      sigma += per_seed[g].delta_sigma;
      spi += per_seed[g].seconds_per_iter;
      diverged += per_seed[g].trace.status == RunStatus::Diverged;
    }
    const double n = static_cast<double>(runs.size());
    summary["mean"][lower(kinds[g])] = {{"delta_mu", number_or_null(mu / n)},
                                        {"delta_sigma", number_or_null(sigma / n)},
                                        {"seconds_per_iter", spi / n},
                                        {"diverged", diverged}};
  }
  write_file(fs::path(f.out) / "summary.json", summary.dump(2) + "\n");
  std::cout << summary["mean"].dump(2) << '\n';
  return 0;
}

int cmd_gas(Flags f) {
  auto net = std::make_shared<const Network>(load_network(f.network));
  if (f.max_iters == 0) f.max_iters = 200000;
  if (f.tol == 0.0) f.tol = f.stop == "halving" ? 1e-10 / 40 : 1e-9;
  if (f.graphs.empty()) f.graphs = {"fc"};
  if (f.graphs.size() != 1 || f.graphs[0] == "ff") throw CLI::ValidationError("--graph", "gas takes one of fv, fc");

  GnOptions o;
  o.graph_kind = parse_kind(f.graphs[0]);
  o.single_anchor = f.single_anchor;
  o.inner = bp_options(f, f.seed);

  fs::create_directories(f.out);
  json manifest = manifest_base("gas", f);
  manifest["graph"] = f.graphs[0];
  manifest["seed"] = f.seed;
  manifest["single_anchor"] = f.single_anchor;
  manifest["max_gn_steps"] = o.max_gn_steps;
  manifest["gn_tolerance"] = o.tolerance;
  write_file(fs::path(f.out) / "manifest.json", manifest.dump(2) + "\n");

  const auto exact = solve_gas_exact(*net);
  const auto r = run_modified_gn(net, o, &exact.q);
  std::ostringstream csv;
  write_gn_trace_csv(csv, r);
  write_file(fs::path(f.out) / ("gas_" + f.graphs[0] + ".csv"), csv.str());

  json summary;
  summary["status"] = to_string(r.status);
  summary["gn_steps"] = r.trace.size();
  summary["cumulative_bp_iters"] = r.trace.empty() ? 0 : r.trace.back().cumulative_bp_iters;
  std::size_t worst = 0;
  for (const auto& s : r.trace) worst = std::max(worst, s.bp_iters);
  summary["max_bp_iters_per_step"] = worst;
  summary["delta"] = r.trace.empty() ? json(nullptr) : number_or_null(r.trace.back().delta);
  summary["residual"] = number_or_null(r.state.residual);
  summary["oracle_residual"] = exact.residual;
  write_file(fs::path(f.out) / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

void add_run_flags(CLI::App* sub, Flags& f, bool gas) {
  sub->add_option("network", f.network, "network JSON")->required();
  sub->add_option("--graph", f.graphs, "factor graph, repeatable")
      ->check(CLI::IsMember(gas ? std::vector<std::string>{"fv", "fc"} : std::vector<std::string>{"fv", "fc", "ff"}));
  sub->add_option("--damping", f.damping, "message damping")->check(CLI::IsMember({"off", "coin"}));
  sub->add_option("--seed", f.seed, "first seed (measurements and damping coin)");
  sub->add_option("--max-iters", f.max_iters, "BP sweep cap")->check(CLI::PositiveNumber);
  sub->add_option("--tol", f.tol, "BP stop tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--stop", f.stop, "BP stop rule")->check(CLI::IsMember({"sweep", "halving"}));
  sub->add_option("--out", f.out, "output directory");
  if (gas) {
    sub->add_flag("--single-anchor", f.single_anchor, "seed the v guess from one anchor only");
  } else {
    sub->add_option("--seeds", f.seeds, "number of measurement sets")->check(CLI::PositiveNumber);
    sub->add_option("--pmu", f.pmu, "angle measurements")->check(CLI::IsMember({"on", "off"}));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian belief propagation on supply networks"};
  app.require_subcommand(1);
  Flags f;
  auto* info = app.add_subcommand("graphinfo", "loop and size report for the three factor graphs");
  info->add_option("network", f.network, "network JSON")->required();
  auto* se = app.add_subcommand("se", "DC state estimation experiment");
  add_run_flags(se, f, false);
  auto* gas = app.add_subcommand("gas", "gas steady state by modified Gauss-Newton");
  add_run_flags(gas, f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (info->parsed()) return cmd_graphinfo(f);
    if (se->parsed()) return cmd_se(f);
    return cmd_gas(f);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
