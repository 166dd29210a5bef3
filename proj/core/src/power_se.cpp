#include "supplybp/power_se.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "supplybp/errors.hpp"

namespace supplybp {

using nlohmann::json;

std::vector<double> dc_flows(const Network& net, const std::vector<double>& th) {
  std::vector<double> f;
  f.reserve(net.num_links());
  for (const auto& l : net.links()) f.push_back(l.coeff * (th[l.from] - th[l.to]));
  return f;
}

std::vector<double> dc_injections(const Network& net, const std::vector<double>& th) {
  std::vector<double> g(net.num_vertices(), 0.0);
  const auto f = dc_flows(net, th);
  for (std::size_t k = 0; k < net.num_links(); ++k) {
    g[net.links()[k].from] += f[k];
    g[net.links()[k].to] -= f[k];
  }
  return g;
}

std::vector<double> truth_angles(const Network& net) {
  std::vector<double> th;
  for (const auto& v : net.vertices()) {
    if (!v.vertex_value) throw MissingTruth("vertex '" + v.id + "' has no angle");
    th.push_back(*v.vertex_value);
  }
  return th;
}

MeasurementSet synthesize_measurements(const Network& net, const std::vector<double>& truth,
                                       const Scenario& sc) {
  if (truth.size() != net.num_vertices()) throw MissingTruth("one angle per vertex required");
  for (double t : truth)
    if (!std::isfinite(t)) throw MissingTruth("non-finite angle");
  if (!(sc.flow_injection_sigma2 > 0.0) || !(sc.angle_sigma2 > 0.0))
    throw ValidationError("scenario variances must be > 0");

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> noise_fg(0.0, std::sqrt(sc.flow_injection_sigma2));
  std::normal_distribution<double> noise_a(0.0, std::sqrt(sc.angle_sigma2));

  MeasurementSet m;
  for (double f : dc_flows(net, truth)) m.flows.push_back({f + noise_fg(rng), sc.flow_injection_sigma2});
  for (double g : dc_injections(net, truth)) m.injections.push_back({g + noise_fg(rng), sc.flow_injection_sigma2});
  for (double t : truth) {
    if (sc.with_pmu) m.angles.push_back({t + noise_a(rng), sc.angle_sigma2});
    else m.angles.push_back({});
  }
  return m;
}

ProblemSpec build_se_problem(std::shared_ptr<const Network> net, const MeasurementSet& m) {
  if (m.injections.size() != net->num_vertices() || m.angles.size() != net->num_vertices() ||
      m.flows.size() != net->num_links())
    throw KeyMismatch("measurement set does not cover the network");
  ProblemSpec spec;
  spec.net = net;
  for (std::size_t i = 0; i < net->num_vertices(); ++i) {
    VertexFactor vf;
    vf.z_g = m.injections[i].z;
    vf.sigma2_g = m.injections[i].sigma2;
    for (const auto& inc : net->incident(i)) {
      const double B = net->links()[inc.link].coeff;
      vf.c_self += B;
      vf.c_port.push_back(-B);
    }
    vf.z_v = m.angles[i].z;
    vf.sigma2_v = m.angles[i].sigma2;
    spec.vertex.push_back(std::move(vf));
  }
  for (std::size_t k = 0; k < net->num_links(); ++k) {
    const double B = net->links()[k].coeff;
    spec.link.push_back({m.flows[k].z, m.flows[k].sigma2, B, -B});
  }
  spec.validate();
  return spec;
}

namespace {

template <class F>
double mean_square(const std::vector<Gaussian1>& est, const std::vector<Gaussian1>& oracle, F f) {
  if (est.size() != oracle.size() || est.empty()) throw KeyMismatch("link sets differ");
  double s = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const double d = f(est[k]) - f(oracle[k]);
    s += d * d;
  }
  return s / static_cast<double>(est.size());
}

std::size_t vertex_target(const json& t, const Network& net) {
  const auto id = t.get<std::string>();
  const auto idx = net.index_of(id);
  if (!idx) throw KeyMismatch("unknown vertex '" + id + "'");
  return *idx;
}

}  // namespace

double delta_mu(const std::vector<Gaussian1>& est, const std::vector<Gaussian1>& oracle) {
  return mean_square(est, oracle, [](const Gaussian1& g) { return g.mean; });
}

double delta_sigma(const std::vector<Gaussian1>& est, const std::vector<Gaussian1>& oracle) {
  return mean_square(est, oracle, [](const Gaussian1& g) { return std::sqrt(g.variance); });
}

MeasurementSet parse_measurements(const std::string& text, const Network& net) {
  MeasurementSet m;
  m.injections.assign(net.num_vertices(), {});
  m.angles.assign(net.num_vertices(), {});
  m.flows.assign(net.num_links(), {});
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    for (const auto& [key, _] : doc.items())
      if (key != "injections" && key != "flows" && key != "angles")
        throw ParseError("unknown key '" + key + "' in measurement file");
    auto read = [](const json& e) {
      Measurement r{e.at("z").get<double>(), e.at("sigma2").get<double>()};
      if (!(r.sigma2 > 0.0)) throw ValidationError("measurement variance must be > 0");
      return r;
    };
    for (const auto& e : doc.value("injections", json::array()))
      m.injections[vertex_target(e.at("target"), net)] = read(e);
    for (const auto& e : doc.value("angles", json::array()))
      m.angles[vertex_target(e.at("target"), net)] = read(e);
    for (const auto& e : doc.value("flows", json::array())) {
      const auto& t = e.at("target");
      if (!t.is_array() || t.size() != 2) throw ParseError("flow target must be [from, to]");
      const auto a = vertex_target(t[0], net);
      const auto b = vertex_target(t[1], net);
      const int circuit = e.value("circuit", 1);
      bool found = false;
      for (const auto& inc : net.incident(a)) {
        const auto& l = net.links()[inc.link];
        if (inc.neighbor == b && l.circuit == circuit) {
          Measurement r = read(e);
          if (l.from != a) r.z = -r.z;
          m.flows[inc.link] = r;
          found = true;
          break;
        }
      }
      if (!found) throw KeyMismatch("no link between '" + t[0].get<std::string>() + "' and '" +
                                    t[1].get<std::string>() + "'");
    }
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  return m;
}

MeasurementSet load_measurements(const std::filesystem::path& path, const Network& net) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_measurements(buf.str(), net);
}

std::string to_json(const MeasurementSet& m, const Network& net) {
  json doc{{"injections", json::array()}, {"flows", json::array()}, {"angles", json::array()}};
  const auto& vs = net.vertices();
  for (std::size_t i = 0; i < m.injections.size(); ++i)
    doc["injections"].push_back({{"target", vs[i].id}, {"z", m.injections[i].z}, {"sigma2", m.injections[i].sigma2}});
  for (std::size_t i = 0; i < m.angles.size(); ++i)
    if (m.angles[i].sigma2 < kUninformativeVariance)
      doc["angles"].push_back({{"target", vs[i].id}, {"z", m.angles[i].z}, {"sigma2", m.angles[i].sigma2}});
  for (std::size_t k = 0; k < m.flows.size(); ++k) {
    const auto& l = net.links()[k];
    json e{{"target", {vs[l.from].id, vs[l.to].id}}, {"z", m.flows[k].z}, {"sigma2", m.flows[k].sigma2}};
    if (l.circuit != 1) e["circuit"] = l.circuit;
    doc["flows"].push_back(e);
  }
  return doc.dump(1);
}

}  // namespace supplybp
