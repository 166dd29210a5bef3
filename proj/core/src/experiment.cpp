#include "supplybp/experiment.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "supplybp/errors.hpp"

namespace supplybp {

SeInstance make_se_instance(std::shared_ptr<const Network> net, const std::vector<double>& truth,
                            const Scenario& scenario) {
  SeInstance inst;
  inst.scenario = scenario;
  const auto m = synthesize_measurements(*net, truth, scenario);
  inst.spec = std::make_shared<const ProblemSpec>(build_se_problem(net, m));
  inst.oracle = exact_marginals(*inst.spec);
  return inst;
}

namespace {

std::pair<double, double> metrics_of(const BeliefSet& b, const SeInstance& inst) {
  try {
    const auto flows = flow_beliefs(b, *inst.spec->net);
    return {delta_mu(flows, inst.oracle.link_flows), delta_sigma(flows, inst.oracle.link_flows)};
  } catch (const Error&) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
}

}  // namespace

SeRun run_se(const SeInstance& inst, GraphKind kind, const BpOptions& opts, bool record_metrics) {
  const auto fg = build(kind, inst.spec);
  MetricHook hook{{"delta_mu", "delta_sigma"}, [&](const BeliefSet& b) {
                    const auto [mu, sigma] = metrics_of(b, inst);
                    return std::vector<double>{mu, sigma};
                  }};
  auto res = run(fg, opts, record_metrics ? &hook : nullptr);

  SeRun out;
  out.kind = kind;
  std::tie(out.delta_mu, out.delta_sigma) = metrics_of(res.beliefs, inst);
  if (res.trace.status == RunStatus::Converged) out.iters_to_tol = res.trace.status_iter;
  if (res.trace.sweeps() > 0) out.seconds_per_iter = res.trace.sweep_seconds / static_cast<double>(res.trace.sweeps());
  out.trace = std::move(res.trace);
  return out;
}

}  // namespace supplybp
