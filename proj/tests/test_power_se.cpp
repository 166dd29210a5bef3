#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "supplybp/errors.hpp"
#include "supplybp/power_se.hpp"

using namespace supplybp;

TEST_CASE("DC flows and injections on the path fixture") {
  const auto net = load_network(testing::fixture("path3.json"));
  const std::vector<double> th{0.3, 0.1, 0.0};
  const auto f = dc_flows(net, th);
  CHECK(f[0] == doctest::Approx(2.0));
  CHECK(f[1] == doctest::Approx(1.0));
  const auto g = dc_injections(net, th);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(-1.0));
  CHECK(g[2] == doctest::Approx(-1.0));
}

TEST_CASE("noiseless limit reproduces DC quantities") {
  const auto net = load_network(testing::fixture("ieee300.json"));
  const auto th = truth_angles(net);
  Scenario sc;
  sc.flow_injection_sigma2 = 1e-30;
  sc.angle_sigma2 = 1e-30;
  const auto m = synthesize_measurements(net, th, sc);
  const auto f = dc_flows(net, th);
  const auto g = dc_injections(net, th);
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::fabs(m.flows[k].z - f[k]) < 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::fabs(m.injections[i].z - g[i]) < 1e-12);
    CHECK(std::fabs(m.angles[i].z - th[i]) < 1e-12);
  }
}

TEST_CASE("same seed gives the same measurements") {
  const auto net = load_network(testing::fixture("ieee300.json"));
  const auto th = truth_angles(net);
  Scenario sc;
  sc.seed = 99;
  const auto a = synthesize_measurements(net, th, sc);
  const auto b = synthesize_measurements(net, th, sc);
  for (std::size_t k = 0; k < a.flows.size(); ++k) CHECK(a.flows[k].z == b.flows[k].z);
  for (std::size_t i = 0; i < a.angles.size(); ++i) CHECK(a.angles[i].z == b.angles[i].z);
  sc.seed = 100;
  CHECK(synthesize_measurements(net, th, sc).flows[0].z != a.flows[0].z);
}

TEST_CASE("measurement noise has the scenario variance") {
  const auto net = make_network(NetworkKind::PowerDC, {{"a", 0.0, 0.0}, {"b", 0.0, 0.0}}, {{"a", "b", 1.0}});
  double s_f = 0.0, s_a = 0.0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    Scenario sc;
    sc.seed = static_cast<std::uint64_t>(k);
    const auto m = synthesize_measurements(net, {0.0, 0.0}, sc);
    s_f += m.flows[0].z * m.flows[0].z;
    s_a += m.angles[1].z * m.angles[1].z;
  }
  CHECK(std::fabs(s_f / draws / 1e-3 - 1.0) < 0.05);
  CHECK(std::fabs(s_a / draws / 1e-6 - 1.0) < 0.05);
}

TEST_CASE("no PMU leaves angles uninformative") {
  const auto net = testing::shared(load_network(testing::fixture("path3.json")));
  Scenario sc;
  sc.with_pmu = false;
  const auto m = synthesize_measurements(*net, {0.0, 0.0, 0.0}, sc);
  const auto spec = build_se_problem(net, m);
  for (const auto& vf : spec.vertex) CHECK(vf.sigma2_v == 1e8);
  CHECK(spec.vertex[1].c_self == doctest::Approx(20.0));
  CHECK(spec.link[0].c_from == 10.0);
  CHECK(spec.link[0].c_to == -10.0);
}

TEST_CASE("input errors") {
  const auto net = testing::shared(load_network(testing::fixture("path3.json")));
  CHECK_THROWS_AS(synthesize_measurements(*net, {0.0}, {}), MissingTruth);
  CHECK_THROWS_AS(build_se_problem(net, MeasurementSet{}), KeyMismatch);
  const auto no_truth = make_network(NetworkKind::PowerDC, {{"a", 0.0, std::nullopt}, {"b", 0.0, 0.0}},
                                     {{"a", "b", 1.0}});
  CHECK_THROWS_AS(truth_angles(no_truth), MissingTruth);
}

TEST_CASE("accuracy metrics") {
  std::vector<Gaussian1> a(411, Gaussian1{1.0, 4.0}), b = a;
  CHECK(delta_mu(a, b) == 0.0);
  CHECK(delta_sigma(a, b) == 0.0);
  for (auto& g : b) g.mean += 0.1;
  CHECK(delta_mu(a, b) == doctest::Approx(0.01));
  for (auto& g : b) g.variance = 2.01 * 2.01;
  CHECK(delta_sigma(a, b) == doctest::Approx(1e-4));
  CHECK_THROWS_AS(delta_mu(a, std::vector<Gaussian1>(3)), KeyMismatch);
}

TEST_CASE("measurement file round trip") {
  const auto net = load_network(testing::fixture("path3.json"));
  Scenario sc;
  sc.seed = 4;
  const auto m = synthesize_measurements(net, {0.1, 0.0, -0.1}, sc);
  const auto back = parse_measurements(to_json(m, net), net);
  for (std::size_t k = 0; k < m.flows.size(); ++k) CHECK(back.flows[k].z == m.flows[k].z);
  CHECK(back.angles[2].z == m.angles[2].z);

  const auto flipped = parse_measurements(R"({"flows":[{"target":["2","1"],"z":0.5,"sigma2":0.1}]})", net);
  CHECK(flipped.flows[0].z == -0.5);
  CHECK(flipped.injections[0].sigma2 == 1e8);
  CHECK_THROWS_AS(parse_measurements(R"({"bogus":[]})", net), ParseError);
}
