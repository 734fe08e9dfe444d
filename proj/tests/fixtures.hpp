#pragma once

#include <string>

#include "sharing/scenario.hpp"
#include "sharing/sweeps.hpp"

namespace fixtures {

// Two prosumers on a two-bus line; the benchmark of the experiments section.
inline sharing::Scenario benchmark(double flow_limit) {
  sharing::Scenario s;
  s.a = 1.0;
  s.network = sharing::Network::build(2, {{0, 1, 1.0, flow_limit}});
  s.prosumers = {{0, {2.5}, 3.0}, {1, {3.5}, 7.0}};
  return s;
}

inline sharing::Scenario triangle(double flow_limit) {
  sharing::Scenario s;
  s.a = 1.0;
  s.network = sharing::triangle_network(flow_limit);
  s.prosumers = {{0, {2.5}, 3.0}, {1, {3.5}, 7.0}, {2, {4.5}, 11.0}};
  return s;
}

inline std::string scenario_path(const std::string& name) {
  return std::string(SHARING_SCENARIO_DIR) + "/" + name;
}

}  // namespace fixtures
