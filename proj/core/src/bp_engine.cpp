#include "supplybp/bp_engine.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <ostream>
#include <utility>

#include "supplybp/errors.hpp"

namespace supplybp {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Damper {
  const Damping& d;
  std::size_t iteration;

  Gaussian1 operator()(std::uint64_t id, const Gaussian1& old_m, const Gaussian1& new_m) const {
    if (!d.enabled || damping_coin(d.seed, id, iteration)) return new_m;
    return {damp_value(false, old_m.mean, new_m.mean), damp_value(false, old_m.variance, new_m.variance)};
  }
  CondGaussian2 operator()(std::uint64_t id, const CondGaussian2& o, const CondGaussian2& n) const {
    if (!d.enabled || damping_coin(d.seed, id, iteration)) return n;
    return {damp_value(false, o.m0, n.m0), damp_value(false, o.v0, n.v0), damp_value(false, o.m1, n.m1),
            damp_value(false, o.slope, n.slope), damp_value(false, o.v1, n.v1)};
  }
};

// Link-factor coefficients from the point of view of one endpoint.
struct LeafView {
  double c_own;
  double c_other;
  double z;
  double sigma2;
};

LeafView leaf_at(const FactorGraph& fg, std::size_t vertex, std::size_t link) {
  const auto& lf = fg.problem->link[link];
  const bool is_from = fg.net().links()[link].from == vertex;
  return is_from ? LeafView{lf.c_from, lf.c_to, lf.z_f, lf.sigma2_f}
                 : LeafView{lf.c_to, lf.c_from, lf.z_f, lf.sigma2_f};
}

// out[k] = sum of x without x[k]
void exclusive_sums(const std::vector<double>& x, std::vector<double>& out) {
  out.assign(x.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = acc;
    acc += x[k];
  }
  acc = 0.0;
  for (std::size_t k = x.size(); k-- > 0;) {
    out[k] += acc;
    acc += x[k];
  }
}

void sweep_ff(const FactorGraph& fg, const MessageStore& prev, MessageStore& next, const Damper& damp) {
  const Network& net = fg.net();
  const auto ports = net.num_ports();
  for (std::size_t i = 0; i < net.num_vertices(); ++i) {
    for (const auto& inc : net.incident(i)) {
      const auto& lf = fg.problem->link[inc.link];
      // flow entering i along the link
      const double z = net.links()[inc.link].to == i ? lf.z_f : -lf.z_f;
      const Gaussian1& h = prev.flow_out[inc.mate_port];
      const double k = 1.0 / (1.0 / h.variance + 1.0 / lf.sigma2_f);
      const Gaussian1 m{k * (h.mean / h.variance + z / lf.sigma2_f), k};
      next.flow_in[inc.port] = damp(inc.port, prev.flow_in[inc.port], m);
    }
  }
  std::vector<double> var, mean, var_x, mean_x;
  for (std::size_t i = 0; i < net.num_vertices(); ++i) {
    const auto& vf = fg.problem->vertex[i];
    const auto inc = net.incident(i);
    var.clear();
    mean.clear();
    for (const auto& in : inc) {
      var.push_back(next.flow_in[in.port].variance);
      mean.push_back(next.flow_in[in.port].mean);
    }
    exclusive_sums(var, var_x);
    exclusive_sums(mean, mean_x);
    for (std::size_t s = 0; s < inc.size(); ++s) {
      const Gaussian1 m{vf.z_g + mean_x[s], vf.sigma2_g + var_x[s]};
      next.flow_out[inc[s].port] = damp(ports + inc[s].port, prev.flow_out[inc[s].port], m);
    }
  }
}

void sweep_fc(const FactorGraph& fg, const MessageStore& prev, MessageStore& next, const Damper& damp) {
  const Network& net = fg.net();
  const auto ports = net.num_ports();
  for (std::size_t i = 0; i < net.num_vertices(); ++i) {
    for (const auto& inc : net.incident(i)) {
      const LeafView lv = leaf_at(fg, i, inc.link);
      // out of the neighbour is over (its own copy, our copy)
      const auto m = observe(prev.pair_out[inc.mate_port], lv.c_other, lv.c_own, lv.z, lv.sigma2).reversed();
      next.pair_in[inc.port] = damp(inc.port, prev.pair_in[inc.port], m);
    }
  }

  // Leave-one-out sums come from prefix/suffix passes rather than total minus
  // own term, so on a tree an outgoing message never depends numerically on
  // the reverse message and the fixed point is reached exactly.
  struct Terms {
    double p = 0, pm = 0, cv = 0, cs = 0, ce = 0;
    void operator+=(const Terms& o) {
      p += o.p;
      pm += o.pm;
      cv += o.cv;
      cs += o.cs;
      ce += o.ce;
    }
  };
  std::vector<Terms> terms, excl;
  for (std::size_t i = 0; i < net.num_vertices(); ++i) {
    const auto& vf = fg.problem->vertex[i];
    const auto inc = net.incident(i);
    const std::size_t d = inc.size();
    terms.resize(d);
    excl.resize(d);
    for (std::size_t s = 0; s < d; ++s) {
      const CondGaussian2& m = next.pair_in[inc[s].port];
      const double p = 1.0 / m.v0;
      const double c = vf.c_port[s];
      terms[s] = {p, p * m.m0, c * c * m.v1, c * m.slope, c * (m.m1 - m.slope * m.m0)};
    }
    Terms acc;
    for (std::size_t s = 0; s < d; ++s) {
      excl[s] = acc;
      acc += terms[s];
    }
    acc = {};
    for (std::size_t s = d; s-- > 0;) {
      excl[s] += acc;
      acc += terms[s];
    }
    const double p0 = 1.0 / vf.sigma2_v, z0 = vf.z_v * p0;
    for (std::size_t s = 0; s < d; ++s) {
      const Terms& x = excl[s];
      const double Pj = p0 + x.p;
      const double u = vf.c_self + x.cs;
      const double w = vf.c_port[s];
      if (!(Pj > 0.0)) throw NonPositiveVariance("vertex factor marginal precision " + std::to_string(Pj));
      if (w == 0.0) throw SingularMatrix("zero injection coefficient on an incident link");
      const double vy = 1.0 / Pj, iw = 1.0 / w;
      const double my = (z0 + x.pm) * vy;
      CondGaussian2 out{my, vy, (vf.z_g - x.ce - u * my) * iw, -u * iw, (vf.sigma2_g + x.cv) * iw * iw};
      out.validate();
      next.pair_out[inc[s].port] = damp(ports + inc[s].port, prev.pair_out[inc[s].port], out);
    }
  }
}

void sweep_fv(const FactorGraph& fg, const MessageStore& prev, MessageStore& next, const Damper& damp) {
  const Network& net = fg.net();
  const auto n = net.num_vertices();
  const auto ports = net.num_ports();
  const auto ne = fg.fv_neighbors.size();
  const std::uint64_t id_self_to_h = 0, id_h_to_self = n, id_nb_to_h = 2 * n, id_h_to_nb = 2 * n + ne,
                      id_v_to_link = 2 * n + 2 * ne, id_link_to_v = 2 * n + 2 * ne + ports;
  // entry of i in the neighbour list of fv_neighbors[e].vertex
  auto mirror = [&](std::size_t e) {
    return fg.fv_offsets[fg.fv_neighbors[e].vertex] + fg.fv_neighbors[e].back;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto& vf = fg.problem->vertex[i];
    double prec = 1.0 / vf.sigma2_v;
    double shift = vf.z_v / vf.sigma2_v;
    auto add = [&](const Gaussian1& g) {
      prec += 1.0 / g.variance;
      shift += g.mean / g.variance;
    };
    add(prev.h_to_self[i]);
    for (std::size_t e = fg.fv_offsets[i]; e < fg.fv_offsets[i + 1]; ++e) add(prev.h_to_nb[mirror(e)]);
    for (const auto& inc : net.incident(i)) add(prev.link_to_v[inc.port]);
    if (!(prec > 0.0) || !std::isfinite(prec)) throw NonPositiveVariance("vertex belief precision");
    const Gaussian1 belief{shift / prec, 1.0 / prec};
    next.vertex_belief[i] = belief;

    next.self_to_h[i] = damp(id_self_to_h + i, prev.self_to_h[i], quotient1(belief, prev.h_to_self[i]));
    for (std::size_t e = fg.fv_offsets[i]; e < fg.fv_offsets[i + 1]; ++e) {
      const auto m = mirror(e);
      next.nb_to_h[m] = damp(id_nb_to_h + m, prev.nb_to_h[m], quotient1(belief, prev.h_to_nb[m]));
    }
    for (const auto& inc : net.incident(i)) {
      const auto p = inc.port;
      next.v_to_link[p] = damp(id_v_to_link + p, prev.v_to_link[p], quotient1(belief, prev.link_to_v[p]));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& vf = fg.problem->vertex[i];
    const Gaussian1& self = next.self_to_h[i];
    double gamma = vf.c_self * vf.c_self * self.variance;
    double eps = vf.c_self * self.mean;
    for (std::size_t e = fg.fv_offsets[i]; e < fg.fv_offsets[i + 1]; ++e) {
      const double c = fg.fv_neighbors[e].coeff;
      gamma += c * c * next.nb_to_h[e].variance;
      eps += c * next.nb_to_h[e].mean;
    }
    const double cs = vf.c_self;
    const Gaussian1 to_self{(vf.z_g - eps + cs * self.mean) / cs,
                            (vf.sigma2_g + gamma - cs * cs * self.variance) / (cs * cs)};
    next.h_to_self[i] = damp(id_h_to_self + i, prev.h_to_self[i], to_self);
    for (std::size_t e = fg.fv_offsets[i]; e < fg.fv_offsets[i + 1]; ++e) {
      const double c = fg.fv_neighbors[e].coeff;
      const Gaussian1& in = next.nb_to_h[e];
      const Gaussian1 out{(vf.z_g - eps + c * in.mean) / c, (vf.sigma2_g + gamma - c * c * in.variance) / (c * c)};
      next.h_to_nb[e] = damp(id_h_to_nb + e, prev.h_to_nb[e], out);
    }
    for (const auto& inc : net.incident(i)) {
      const LeafView lv = leaf_at(fg, i, inc.link);
      const Gaussian1& other = next.v_to_link[inc.mate_port];
      const Gaussian1 out{(lv.z - lv.c_other * other.mean) / lv.c_own,
                          (lv.sigma2 + lv.c_other * lv.c_other * other.variance) / (lv.c_own * lv.c_own)};
      next.link_to_v[inc.port] = damp(id_link_to_v + inc.port, prev.link_to_v[inc.port], out);
    }
  }
}

double max_change(const BeliefSet& a, const BeliefSet& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.flow.size(); ++k) {
    d = std::max({d, std::fabs(a.flow[k].mean - b.flow[k].mean),
                  std::fabs(a.flow[k].variance - b.flow[k].variance)});
  }
  for (std::size_t k = 0; k < a.pair.size(); ++k) {
    const auto& x = a.pair[k];
    const auto& y = b.pair[k];
    d = std::max({d, std::fabs(x.mean[0] - y.mean[0]), std::fabs(x.mean[1] - y.mean[1]),
                  std::fabs(x.cov.xx - y.cov.xx), std::fabs(x.cov.xy - y.cov.xy),
                  std::fabs(x.cov.yy - y.cov.yy)});
  }
  return std::isnan(d) ? INFINITY : d;
}

std::vector<double> belief_means(const BeliefSet& b) {
  std::vector<double> out;
  out.reserve(b.flow.size() + 2 * b.pair.size());
  for (const auto& g : b.flow) out.push_back(g.mean);
  for (const auto& g : b.pair) {
    out.push_back(g.mean[0]);
    out.push_back(g.mean[1]);
  }
  return out;
}

double max_abs_mean(const BeliefSet& b) {
  double m = 0.0;
  for (double x : belief_means(b)) m = std::max(m, std::fabs(x));
  return m;
}

double msd(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

}  // namespace

bool damping_coin(std::uint64_t seed, std::uint64_t message, std::uint64_t iteration) {
  return (mix(mix(mix(seed) ^ message) ^ iteration) >> 63) != 0;
}

double damp_value(bool keep_new, double old_value, double new_value) {
  return keep_new ? new_value : 0.5 * (old_value + new_value);
}

std::size_t MessageStore::num_messages() const {
  return flow_in.size() + flow_out.size() + pair_in.size() + pair_out.size() + self_to_h.size() +
         h_to_self.size() + nb_to_h.size() + h_to_nb.size() + v_to_link.size() + link_to_v.size();
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIters: return "max_iters";
    case RunStatus::Diverged: return "diverged";
  }
  return "?";
}

MessageStore init_messages(const FactorGraph& fg) {
  MessageStore st;
  st.kind = fg.kind;
  const Network& net = fg.net();
  const Gaussian1 g1{0.0, kInitialMessageVariance};
  const CondGaussian2 g2{0.0, kInitialMessageVariance, 0.0, 0.0, kInitialMessageVariance};
  switch (fg.kind) {
    case GraphKind::Ff:
      st.flow_in.assign(net.num_ports(), g1);
      st.flow_out.assign(net.num_ports(), g1);
      break;
    case GraphKind::Fc:
      st.pair_in.assign(net.num_ports(), g2);
      st.pair_out.assign(net.num_ports(), g2);
      break;
    case GraphKind::Fv:
      st.self_to_h.assign(net.num_vertices(), g1);
      st.h_to_self.assign(net.num_vertices(), g1);
      st.nb_to_h.assign(fg.fv_neighbors.size(), g1);
      st.h_to_nb.assign(fg.fv_neighbors.size(), g1);
      st.v_to_link.assign(net.num_ports(), g1);
      st.link_to_v.assign(net.num_ports(), g1);
      st.vertex_belief.assign(net.num_vertices(), g1);
      break;
  }
  return st;
}

namespace {

// Every kernel overwrites all messages of its kind, so `next` only needs the
// right shape; run() ping-pongs two stores instead of copying one per sweep.
void sweep_into(const FactorGraph& fg, const MessageStore& store, MessageStore& next, const BpOptions& opts,
                std::size_t iteration) {
  const Damper damp{opts.damping, iteration};
  switch (fg.kind) {
    case GraphKind::Ff: sweep_ff(fg, store, next, damp); break;
    case GraphKind::Fc: sweep_fc(fg, store, next, damp); break;
    case GraphKind::Fv: sweep_fv(fg, store, next, damp); break;
  }
}

}  // namespace

MessageStore sweep(const FactorGraph& fg, const MessageStore& store, const BpOptions& opts,
                   std::size_t iteration) {
  MessageStore next = store;
  sweep_into(fg, store, next, opts, iteration);
  return next;
}

BeliefSet collect_link_beliefs(const FactorGraph& fg, const MessageStore& st) {
  const Network& net = fg.net();
  BeliefSet out;
  out.kind = fg.kind;
  for (std::size_t k = 0; k < net.num_links(); ++k) {
    const auto& lf = fg.problem->link[k];
    const auto pf = net.from_port(k);
    const auto pt = net.to_port(k);
    const double w = 1.0 / lf.sigma2_f;
    switch (fg.kind) {
      case GraphKind::Ff: {
        const Gaussian1 to_side{-st.flow_out[pt].mean, st.flow_out[pt].variance};
        out.flow.push_back(product1(product1(st.flow_out[pf], to_side), Gaussian1{lf.z_f, lf.sigma2_f}));
        break;
      }
      case GraphKind::Fc: {
        const auto other = observe(st.pair_out[pt], lf.c_to, lf.c_from, lf.z_f, lf.sigma2_f).reversed();
        const auto b = product(st.pair_out[pf], other);
        out.pair.push_back(b.joint());
        out.diff.push_back(b.difference());
        break;
      }
      case GraphKind::Fv: {
        // Inverse of diag(d0, d1) + w c c^T written out so that nothing cancels.
        const Gaussian1& a = st.v_to_link[pf];
        const Gaussian1& b = st.v_to_link[pt];
        const double d0 = 1.0 / a.variance, d1 = 1.0 / b.variance;
        const double c0 = lf.c_from, c1 = lf.c_to;
        const double det = d0 * d1 + w * (d0 * c1 * c1 + d1 * c0 * c0);
        if (!(det > 0.0) || !std::isfinite(det)) throw NonPositiveVariance("link belief precision");
        const Sym2 cov{(d1 + w * c1 * c1) / det, -w * c0 * c1 / det, (d0 + w * c0 * c0) / det};
        const Vec2 mean = mul(cov, {a.mean * d0 + w * lf.z_f * c0, b.mean * d1 + w * lf.z_f * c1});
        if (!std::isfinite(mean[0]) || !std::isfinite(mean[1])) throw NonPositiveVariance("non-finite link belief");
        out.pair.emplace_back(mean, cov, Gaussian2::Unchecked{});
        out.diff.emplace_back(mean[0] - mean[1], (d0 + d1 + w * (c0 + c1) * (c0 + c1)) / det);
        break;
      }
    }
  }
  return out;
}

RunResult run(const FactorGraph& fg, const BpOptions& opts, const MetricHook* hook) {
  if (!(opts.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  RunResult res;
  res.store = init_messages(fg);
  MessageStore spare = res.store;
  res.beliefs = collect_link_beliefs(fg, res.store);
  if (hook) res.trace.metric_names = hook->names;

  std::deque<std::vector<double>> history;  // belief means for sweeps first_kept..t
  std::size_t first_kept = 0;
  if (opts.stop_rule == StopRule::HalvingDelta) history.push_back(belief_means(res.beliefs));

  for (std::size_t t = 1; t <= opts.max_iters; ++t) {
    BeliefSet beliefs;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      sweep_into(fg, res.store, spare, opts, t);
      std::swap(res.store, spare);
      beliefs = collect_link_beliefs(fg, res.store);
    } catch (const Error& e) {
      res.trace.records.push_back({t, INFINITY, {}});
      res.trace.status = RunStatus::Diverged;
      res.trace.status_iter = t;
      res.trace.reason = e.what();
      return res;
    }
    const double delta = max_change(beliefs, res.beliefs);
    res.trace.sweep_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.beliefs = std::move(beliefs);
    TraceRecord rec{t, delta, {}};
    if (hook) rec.metrics = hook->fn(res.beliefs);
    res.trace.records.push_back(std::move(rec));

    if (!(max_abs_mean(res.beliefs) <= kDivergenceMean)) {
      res.trace.status = RunStatus::Diverged;
      res.trace.status_iter = t;
      res.trace.reason = "belief mean exceeds divergence bound";
      return res;
    }
    if (opts.stop_rule == StopRule::SweepDelta) {
      if (delta < opts.tolerance) {
        res.trace.status = RunStatus::Converged;
        res.trace.status_iter = t - 1;
        return res;
      }
    } else {
      history.push_back(belief_means(res.beliefs));
      if (t % 2 == 0 && msd(history.back(), history[t / 2 - first_kept]) < opts.tolerance) {
        res.trace.status = RunStatus::Converged;
        res.trace.status_iter = t;
        return res;
      }
      // sweep (t+1)/2 is the oldest one a later check can ask for
      while (first_kept < (t + 1) / 2) {
        history.pop_front();
        ++first_kept;
      }
    }
  }
  res.trace.status = RunStatus::MaxIters;
  res.trace.status_iter = opts.max_iters;
  return res;
}

Gaussian1 flow_belief_from_pair(const Gaussian2& belief, double B) {
  const double q = belief.cov.xx + belief.cov.yy - 2.0 * belief.cov.xy;
  if (!(q > 0.0)) throw NonPositiveVariance("flow variance from pair belief is not positive");
  return {B * (belief.mean[0] - belief.mean[1]), B * B * q};
}

std::vector<Gaussian1> flow_beliefs(const BeliefSet& beliefs, const Network& net) {
  if (beliefs.kind == GraphKind::Ff) return beliefs.flow;
  std::vector<Gaussian1> out;
  out.reserve(beliefs.diff.size());
  for (std::size_t k = 0; k < beliefs.diff.size(); ++k) {
    const double B = net.links()[k].coeff;
    out.emplace_back(B * beliefs.diff[k].mean, B * B * beliefs.diff[k].variance);
  }
  return out;
}

void write_trace_csv(std::ostream& os, const ConvergenceTrace& trace) {
  os << "iter,belief_delta,status";
  for (const auto& n : trace.metric_names) os << ',' << n;
  os << '\n';
  os.precision(17);
  for (std::size_t r = 0; r < trace.records.size(); ++r) {
    const auto& rec = trace.records[r];
    const bool last = r + 1 == trace.records.size();
    os << rec.iter << ',' << rec.belief_delta << ',' << (last ? to_string(trace.status) : "running");
    for (double m : rec.metrics) os << ',' << m;
    os << '\n';
  }
}

}  // namespace supplybp
