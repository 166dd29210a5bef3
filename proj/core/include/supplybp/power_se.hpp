#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "supplybp/gaussian.hpp"
#include "supplybp/problem.hpp"

namespace supplybp {

struct Measurement {
  double z = 0.0;
  double sigma2 = kUninformativeVariance;
};

// injections and angles per vertex, flows per link in (from, to) direction.
// Missing entries carry z = 0 and the uninformative variance.
struct MeasurementSet {
  std::vector<Measurement> injections;
  std::vector<Measurement> flows;
  std::vector<Measurement> angles;
};

struct Scenario {
  bool with_pmu = true;
  double flow_injection_sigma2 = 1e-3;
  double angle_sigma2 = 1e-6;
  std::uint64_t seed = 0;
};

// Exact DC quantities for the given angles.
std::vector<double> dc_flows(const Network& net, const std::vector<double>& angles);
std::vector<double> dc_injections(const Network& net, const std::vector<double>& angles);

// Angles from the vertex_value fields. Throws MissingTruth.
std::vector<double> truth_angles(const Network& net);

MeasurementSet synthesize_measurements(const Network& net, const std::vector<double>& truth,
                                       const Scenario& sc);

ProblemSpec build_se_problem(std::shared_ptr<const Network> net, const MeasurementSet& m);

// Throws KeyMismatch when the link counts differ.
double delta_mu(const std::vector<Gaussian1>& est, const std::vector<Gaussian1>& oracle);
double delta_sigma(const std::vector<Gaussian1>& est, const std::vector<Gaussian1>& oracle);

// JSON: {"injections": [{"target": id, "z", "sigma2"}], "flows": [{"target": [from, to], ...}],
// "angles": [...]}. Entries not listed stay uninformative.
MeasurementSet parse_measurements(const std::string& json_text, const Network& net);
MeasurementSet load_measurements(const std::filesystem::path& path, const Network& net);
std::string to_json(const MeasurementSet& m, const Network& net);

}  // namespace supplybp
