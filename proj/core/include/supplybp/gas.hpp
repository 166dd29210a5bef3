#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "supplybp/bp_engine.hpp"
#include "supplybp/problem.hpp"

namespace supplybp {

// Lower bound on |v_i - v_j| inside the square-root derivative.
inline constexpr double kFlowSlopeClamp = 1e-9;

double gas_flow(double a, double v_i, double v_j);

struct Linearization {
  double q0;
  double dq_dvi;
  double dq_dvj;
};
Linearization linearize_flow(double a, double v_i, double v_j);

using Anchor = std::pair<std::size_t, double>;  // vertex index, known v

std::vector<Anchor> network_anchors(const Network& net);
// Anchor with the lexicographically smallest id.
std::vector<Anchor> first_anchor(const Network& net);

// Breadth-first propagation from the anchors, visiting vertices in ascending
// index order; the first assignment wins. Throws NoAnchor.
std::vector<double> guess_v_from_q(const Network& net, const std::vector<double>& q_star,
                                   const std::vector<Anchor>& anchors);

// Where the weak (variance 1e8) factors of the linearized problem are
// centred. Zero follows the coefficient table literally; LinearizationPoint
// centres them on the current guess so that they vanish at a fixed point.
enum class PriorCentering { Zero, LinearizationPoint };

ProblemSpec build_gn_subproblem(std::shared_ptr<const Network> net, const std::vector<double>& v_star,
                                PriorCentering centering = PriorCentering::LinearizationPoint);

// Flow-only problem: known injections with variance 1, everything else
// variance 1e8 around zero.
ProblemSpec build_flow_only_problem(std::shared_ptr<const Network> net);
std::vector<double> flow_only_initial_guess(std::shared_ptr<const Network> net, const BpOptions& opts = {});

// max over known-injection vertices of |g - sum_j Q_ij(v)| and over anchors
// of |v - v_bar|.
double gas_residual(const Network& net, const std::vector<double>& v);

double delta_gas(const std::vector<double>& q_est, const std::vector<double>& q_oracle);

struct GnState {
  std::vector<double> q_star;
  std::vector<double> v_star;
  std::size_t step = 0;
  double residual = 0.0;
};

struct GnOptions {
  std::size_t max_gn_steps = 20;
  BpOptions inner;
  BpOptions initial{10000, 1e-9, {}, StopRule::SweepDelta};
  GraphKind graph_kind = GraphKind::Fc;
  bool single_anchor = false;
  double tolerance = 1e-6;
  PriorCentering centering = PriorCentering::LinearizationPoint;
};

enum class GnStatus { Converged, MaxSteps, InnerDiverged };
const char* to_string(GnStatus s);

struct GnStep {
  std::size_t step;
  std::size_t bp_iters;
  std::size_t cumulative_bp_iters;
  double delta;  // against the reference flows, NaN without one
  double residual;
  double change;  // max |ΔQ*|, |Δv*| over the step, relative to max |Q*|, |v*|
  RunStatus bp_status;
};

struct GnResult {
  GnState state;
  GnStatus status = GnStatus::MaxSteps;
  std::size_t status_step = 0;
  std::vector<GnStep> trace;
};

GnResult run_modified_gn(std::shared_ptr<const Network> net, const GnOptions& opts,
                         const std::vector<double>* q_reference = nullptr);

void write_gn_trace_csv(std::ostream& os, const GnResult& result);

}  // namespace supplybp
