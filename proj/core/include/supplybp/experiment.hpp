#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "supplybp/bp_engine.hpp"
#include "supplybp/factor_graph.hpp"
#include "supplybp/network.hpp"
#include "supplybp/oracle.hpp"
#include "supplybp/power_se.hpp"

namespace supplybp {

// One synthesized state-estimation problem together with its exact answer.
struct SeInstance {
  Scenario scenario;
  std::shared_ptr<const ProblemSpec> spec;
  DenseGaussianSolution oracle;
};

SeInstance make_se_instance(std::shared_ptr<const Network> net, const std::vector<double>& truth,
                            const Scenario& scenario);

struct SeRun {
  GraphKind kind = GraphKind::Fc;
  ConvergenceTrace trace;  // metrics delta_mu, delta_sigma when recorded
  double delta_mu = 0.0;
  double delta_sigma = 0.0;
  std::optional<std::size_t> iters_to_tol;
  double seconds_per_iter = 0.0;
};

// Final metrics come from the last valid beliefs, so a diverged run still
// reports where it was when it blew up.
SeRun run_se(const SeInstance& inst, GraphKind kind, const BpOptions& opts, bool record_metrics = true);

}  // namespace supplybp
