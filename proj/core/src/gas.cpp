#include "supplybp/gas.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include "supplybp/errors.hpp"

namespace supplybp {

double gas_flow(double a, double v_i, double v_j) {
  const double d = v_i - v_j;
  if (d == 0.0) return 0.0;
  return (d > 0.0 ? a : -a) * std::sqrt(std::fabs(d));
}

Linearization linearize_flow(double a, double v_i, double v_j) {
  const double s = a / (2.0 * std::sqrt(std::max(std::fabs(v_i - v_j), kFlowSlopeClamp)));
  return {gas_flow(a, v_i, v_j), s, -s};
}

std::vector<Anchor> network_anchors(const Network& net) {
  std::vector<Anchor> out;
  for (auto i : net.anchors()) out.emplace_back(i, *net.vertices()[i].vertex_value);
  return out;
}

std::vector<Anchor> first_anchor(const Network& net) {
  auto all = network_anchors(net);
  if (all.empty()) return all;
  const auto it = std::min_element(all.begin(), all.end(), [&](const Anchor& x, const Anchor& y) {
    return net.vertices()[x.first].id < net.vertices()[y.first].id;
  });
  return {*it};
}

std::vector<double> guess_v_from_q(const Network& net, const std::vector<double>& q,
                                   const std::vector<Anchor>& anchors) {
  if (anchors.empty()) throw NoAnchor("no anchor to start from");
  if (q.size() != net.num_links()) throw KeyMismatch("one flow per link required");
  const auto n = net.num_vertices();
  std::vector<double> v(n, 0.0);
  std::vector<bool> done(n, false);
  auto sorted = anchors;
  std::sort(sorted.begin(), sorted.end());
  std::deque<std::size_t> queue;
  for (const auto& [i, val] : sorted) {
    if (done[i]) continue;
    v[i] = val;
    done[i] = true;
    queue.push_back(i);
  }
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (const auto& inc : net.incident(i)) {
      const auto j = inc.neighbor;
      if (done[j]) continue;
      const auto& l = net.links()[inc.link];
      const double qij = l.from == i ? q[inc.link] : -q[inc.link];
      const double r = qij / l.coeff;
      v[j] = v[i] - (qij > 0 ? 1.0 : qij < 0 ? -1.0 : 0.0) * r * r;
      done[j] = true;
      queue.push_back(j);
    }
  }
  return v;
}

ProblemSpec build_gn_subproblem(std::shared_ptr<const Network> net, const std::vector<double>& vs,
                                PriorCentering centering) {
  if (vs.size() != net->num_vertices()) throw KeyMismatch("one guess per vertex required");
  const bool centred = centering == PriorCentering::LinearizationPoint;
  ProblemSpec spec;
  spec.net = net;
  for (std::size_t i = 0; i < net->num_vertices(); ++i) {
    const auto& rec = net->vertices()[i];
    VertexFactor vf;
    const auto inc = net->incident(i);
    if (rec.injection) {
      double z = *rec.injection;
      for (const auto& e : inc) {
        const auto lin = linearize_flow(net->links()[e.link].coeff, vs[i], vs[e.neighbor]);
        z -= lin.q0 - lin.dq_dvi * vs[i] - lin.dq_dvj * vs[e.neighbor];
        vf.c_self += lin.dq_dvi;
        vf.c_port.push_back(lin.dq_dvj);
      }
      vf.z_g = z;
      vf.sigma2_g = 1.0;
    } else {
      vf.c_self = 1.0;
      vf.c_port.assign(inc.size(), 1.0);
      vf.z_g = 0.0;
      if (centred) {
        vf.z_g = vs[i];
        for (const auto& e : inc) vf.z_g += vs[e.neighbor];
      }
      vf.sigma2_g = kUninformativeVariance;
    }
    if (rec.vertex_value) {
      vf.z_v = *rec.vertex_value;
      vf.sigma2_v = 1.0;
    } else {
      vf.z_v = centred ? vs[i] : 0.0;
      vf.sigma2_v = kUninformativeVariance;
    }
    spec.vertex.push_back(std::move(vf));
  }
  for (const auto& l : net->links()) {
    const double z = centred ? vs[l.from] - vs[l.to] : 0.0;
    spec.link.push_back({z, kUninformativeVariance, 1.0, -1.0});
  }
  spec.validate();
  return spec;
}

ProblemSpec build_flow_only_problem(std::shared_ptr<const Network> net) {
  ProblemSpec spec;
  spec.net = net;
  for (std::size_t i = 0; i < net->num_vertices(); ++i) {
    const auto& rec = net->vertices()[i];
    VertexFactor vf;
    vf.c_self = 0.0;
    vf.c_port.assign(net->degree(i), 1.0);
    if (rec.injection) {
      vf.z_g = *rec.injection;
      vf.sigma2_g = 1.0;
    }
    spec.vertex.push_back(std::move(vf));
  }
  spec.link.assign(net->num_links(), LinkFactor{0.0, kUninformativeVariance, 1.0, -1.0});
  spec.validate();
  return spec;
}

std::vector<double> flow_only_initial_guess(std::shared_ptr<const Network> net, const BpOptions& opts) {
  const auto fg = build_ff(std::make_shared<const ProblemSpec>(build_flow_only_problem(net)));
  const auto res = run(fg, opts);
  std::vector<double> q;
  for (const auto& b : res.beliefs.flow) q.push_back(b.mean);
  if (q.size() != net->num_links()) throw NoConvergence("flow-only initial guess failed: " + res.trace.reason);
  return q;
}

double gas_residual(const Network& net, const std::vector<double>& v) {
  std::vector<double> out(net.num_vertices(), 0.0);
  for (const auto& l : net.links()) {
    const double q = gas_flow(l.coeff, v[l.from], v[l.to]);
    out[l.from] += q;
    out[l.to] -= q;
  }
  double r = 0.0;
  for (std::size_t i = 0; i < net.num_vertices(); ++i) {
    const auto& rec = net.vertices()[i];
    if (rec.injection) r = std::max(r, std::fabs(*rec.injection - out[i]));
    if (rec.vertex_value) r = std::max(r, std::fabs(*rec.vertex_value - v[i]));
  }
  return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
}

double delta_gas(const std::vector<double>& q_est, const std::vector<double>& q_oracle) {
  if (q_est.size() != q_oracle.size() || q_est.empty()) throw KeyMismatch("link sets differ");
  double s = 0.0;
  for (std::size_t k = 0; k < q_est.size(); ++k) s += (q_est[k] - q_oracle[k]) * (q_est[k] - q_oracle[k]);
  return s / static_cast<double>(q_est.size());
}

const char* to_string(GnStatus s) {
  switch (s) {
    case GnStatus::Converged: return "converged";
    case GnStatus::MaxSteps: return "max_steps";
    case GnStatus::InnerDiverged: return "inner_diverged";
  }
  return "?";
}

GnResult run_modified_gn(std::shared_ptr<const Network> net, const GnOptions& opts,
                         const std::vector<double>* q_ref) {
  if (opts.max_gn_steps < 1) throw ValidationError("max_gn_steps must be >= 1");
  if (net->kind() != NetworkKind::Gas) throw ValidationError("modified Gauss-Newton needs a gas network");
  const auto seeds = opts.single_anchor ? first_anchor(*net) : network_anchors(*net);

  GnResult res;
  auto& st = res.state;
  st.q_star = flow_only_initial_guess(net, opts.initial);
  st.v_star = guess_v_from_q(*net, st.q_star, seeds);
  std::size_t cumulative = 0;

  for (std::size_t step = 1; step <= opts.max_gn_steps; ++step) {
    const auto spec = std::make_shared<const ProblemSpec>(build_gn_subproblem(net, st.v_star, opts.centering));
    const auto fg = build(opts.graph_kind, spec);
    const auto bp = run(fg, opts.inner);
    cumulative += bp.trace.sweeps();
    if (bp.trace.status == RunStatus::Diverged) {
      res.trace.push_back({step, bp.trace.sweeps(), cumulative, std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                           bp.trace.status});
      res.status = GnStatus::InnerDiverged;
      res.status_step = step;
      st.step = step;
      st.residual = std::numeric_limits<double>::infinity();
      return res;
    }

    std::vector<double> q(net->num_links());
    for (std::size_t k = 0; k < net->num_links(); ++k) {
      const auto& l = net->links()[k];
      const auto lin = linearize_flow(l.coeff, st.v_star[l.from], st.v_star[l.to]);
      const auto& mu = bp.beliefs.pair[k].mean;
      q[k] = lin.q0 + lin.dq_dvi * (mu[0] - st.v_star[l.from]) + lin.dq_dvj * (mu[1] - st.v_star[l.to]);
    }
    auto v = guess_v_from_q(*net, q, seeds);
    // relative to the magnitude of the iterate; v sits in the thousands
    double change = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      change = std::max(change, std::fabs(q[k] - st.q_star[k]));
      scale = std::max(scale, std::fabs(q[k]));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      change = std::max(change, std::fabs(v[i] - st.v_star[i]));
      scale = std::max(scale, std::fabs(v[i]));
    }
    change /= scale;
    st.q_star = std::move(q);
    st.v_star = std::move(v);
    st.step = step;
    st.residual = gas_residual(*net, st.v_star);
    const double delta = q_ref ? delta_gas(st.q_star, *q_ref) : std::numeric_limits<double>::quiet_NaN();
    res.trace.push_back({step, bp.trace.sweeps(), cumulative, delta, st.residual, change, bp.trace.status});

    if (st.residual < opts.tolerance || change < opts.tolerance) {
      res.status = GnStatus::Converged;
      res.status_step = step;
      return res;
    }
  }
  res.status = GnStatus::MaxSteps;
  res.status_step = opts.max_gn_steps;
  return res;
}

void write_gn_trace_csv(std::ostream& os, const GnResult& result) {
  os << "gn_step,bp_iters,delta,residual\n";
  os.precision(17);
  for (const auto& s : result.trace)
    os << s.step << ',' << s.cumulative_bp_iters << ',' << s.delta << ',' << s.residual << '\n';
}

}  // namespace supplybp
