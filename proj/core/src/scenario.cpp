#include "sharing/scenario.hpp"

#include <stdexcept>
#include <string>

namespace sharing {

std::vector<int> Scenario::bus_map() const {
  std::vector<int> map;
  map.reserve(prosumers.size());
  for (const auto& p : prosumers) map.push_back(p.bus);
  return map;
}

Eigen::VectorXd Scenario::demands() const {
  Eigen::VectorXd d(num_prosumers());
  for (int i = 0; i < num_prosumers(); ++i) d(i) = prosumers[i].demand;
  return d;
}

Eigen::MatrixXd Scenario::factors() const {
  const auto map = bus_map();
  return network.prosumer_factors(map);
}

void Scenario::validate(bool require_sharing) const {
  if (!(a > 0.0)) throw std::invalid_argument("price sensitivity a must be positive");
  if (prosumers.empty()) throw std::invalid_argument("scenario has no prosumers");
  if (require_sharing && prosumers.size() < 2) {
    throw std::invalid_argument("sharing needs at least two prosumers");
  }
  for (std::size_t i = 0; i < prosumers.size(); ++i) {
    try {
      prosumers[i].validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("prosumer " + std::to_string(i) + ": " + e.what());
    }
    if (prosumers[i].bus < 0 || prosumers[i].bus >= network.num_buses()) {
      throw std::invalid_argument("prosumer " + std::to_string(i) + " attached to unknown bus " +
                                  std::to_string(prosumers[i].bus));
    }
  }
}

}  // namespace sharing
