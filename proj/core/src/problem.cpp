#include "supplybp/problem.hpp"

#include <cmath>
#include <map>
#include <string>

#include "supplybp/errors.hpp"

namespace supplybp {

namespace {

void check_variance(double s2, const char* what, std::size_t idx) {
  if (!(s2 > 0.0) || !std::isfinite(s2))
    throw ValidationError(std::string(what) + " variance at index " + std::to_string(idx) +
                          " must be > 0");
}

}  // namespace

void ProblemSpec::validate() const {
  if (!net) throw ValidationError("problem has no network");
  if (vertex.size() != net->num_vertices()) throw ValidationError("one vertex factor per vertex required");
  if (link.size() != net->num_links()) throw ValidationError("one link factor per link required");
  for (std::size_t i = 0; i < vertex.size(); ++i) {
    check_variance(vertex[i].sigma2_g, "injection", i);
    check_variance(vertex[i].sigma2_v, "vertex value", i);
    if (vertex[i].c_port.size() != net->degree(i))
      throw ValidationError("vertex factor " + std::to_string(i) + " needs one coefficient per incident link");
  }
  for (std::size_t k = 0; k < link.size(); ++k) check_variance(link[k].sigma2_f, "link", k);
}

std::vector<LinearGaussianFactor> ProblemSpec::linear_factors() const {
  std::vector<LinearGaussianFactor> out;
  out.reserve(2 * vertex.size() + link.size());
  for (std::size_t i = 0; i < vertex.size(); ++i) {
    const auto& vf = vertex[i];
    std::map<std::size_t, double> c{{i, vf.c_self}};
    const auto inc = net->incident(i);
    for (std::size_t s = 0; s < inc.size(); ++s) c[inc[s].neighbor] += vf.c_port[s];
    out.push_back({vf.z_g, vf.sigma2_g, {c.begin(), c.end()}});
    out.push_back({vf.z_v, vf.sigma2_v, {{i, 1.0}}});
  }
  for (std::size_t k = 0; k < link.size(); ++k) {
    const auto& l = net->links()[k];
    out.push_back({link[k].z_f, link[k].sigma2_f, {{l.from, link[k].c_from}, {l.to, link[k].c_to}}});
  }
  return out;
}

}  // namespace supplybp
