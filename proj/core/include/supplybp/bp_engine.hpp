#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "supplybp/factor_graph.hpp"
#include "supplybp/gaussian.hpp"

namespace supplybp {

inline constexpr double kInitialMessageVariance = 1e6;
inline constexpr double kDivergenceMean = 1e12;

enum class StopRule { SweepDelta, HalvingDelta };

struct Damping {
  bool enabled = false;
  std::uint64_t seed = 0;

  static Damping off() { return {}; }
  static Damping coin(std::uint64_t seed) { return {true, seed}; }
};

struct BpOptions {
  std::size_t max_iters = 1000;
  double tolerance = 1e-9;
  Damping damping;
  StopRule stop_rule = StopRule::SweepDelta;
};

// Fair coin keyed by (seed, message, iteration). true means "keep the new
// message", false means "blend halfway with the old one".
bool damping_coin(std::uint64_t seed, std::uint64_t message, std::uint64_t iteration);
double damp_value(bool keep_new, double old_value, double new_value);

// Messages per directed factor-graph edge. Ports are (vertex, incident link)
// pairs as numbered by Network. Leaf factors never change, so their
// messages are not stored.
//
// Ff: in[p] is over the flow entering the port's vertex along the link,
//     out[p] over the flow leaving it.
// Fc: pair_in[p] (link variable -> H_i) and pair_out[p] (H_i -> link
//     variable) are over (own copy, neighbour copy).
// Fv: see the field comments.
struct MessageStore {
  GraphKind kind = GraphKind::Ff;
  std::vector<Gaussian1> flow_in, flow_out;
  std::vector<CondGaussian2> pair_in, pair_out;
  std::vector<Gaussian1> self_to_h, h_to_self;  // i -> H_i, H_i -> i
  std::vector<Gaussian1> nb_to_h, h_to_nb;      // per FvNeighbor entry e of i: j -> H_i, H_i -> j
  std::vector<Gaussian1> v_to_link, link_to_v;  // per port: i -> H_ij, H_ij -> i
  std::vector<Gaussian1> vertex_belief;

  std::size_t num_messages() const;
};

// One belief per link in (from, to) orientation. For pair beliefs `diff`
// holds the marginal of x_from - x_to, computed without going through the
// covariance matrix.
struct BeliefSet {
  GraphKind kind = GraphKind::Ff;
  std::vector<Gaussian1> flow;   // Ff
  std::vector<Gaussian2> pair;   // Fc, Fv
  std::vector<Gaussian1> diff;   // Fc, Fv
};

enum class RunStatus { Converged, MaxIters, Diverged };
const char* to_string(RunStatus s);

struct TraceRecord {
  std::size_t iter;
  double belief_delta;
  std::vector<double> metrics;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;
  std::vector<std::string> metric_names;
  RunStatus status = RunStatus::MaxIters;
  // Sweep at which the beliefs reached their final value (Converged) or at
  // which the failure was detected (Diverged).
  std::size_t status_iter = 0;
  std::string reason;
  // wall time in sweep + collect, metric hooks excluded
  double sweep_seconds = 0.0;

  std::size_t sweeps() const { return records.size(); }
};

void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace);

struct RunResult {
  BeliefSet beliefs;
  ConvergenceTrace trace;
  MessageStore store;
};

// Optional per-sweep hook returning one value per metric name.
struct MetricHook {
  std::vector<std::string> names;
  std::function<std::vector<double>(const BeliefSet&)> fn;
};

MessageStore init_messages(const FactorGraph& fg);
// One synchronous sweep. `iteration` (1-based) keys the damping coin.
// Throws NonPositiveVariance / SingularMatrix on invalid messages.
MessageStore sweep(const FactorGraph& fg, const MessageStore& store, const BpOptions& opts,
                   std::size_t iteration);
BeliefSet collect_link_beliefs(const FactorGraph& fg, const MessageStore& store);
RunResult run(const FactorGraph& fg, const BpOptions& opts, const MetricHook* hook = nullptr);

Gaussian1 flow_belief_from_pair(const Gaussian2& belief, double B);
// Flow beliefs per link. Pair beliefs use each link's coefficient as B and
// the difference marginal.
std::vector<Gaussian1> flow_beliefs(const BeliefSet& beliefs, const Network& net);

}  // namespace supplybp
