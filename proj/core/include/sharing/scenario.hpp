#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sharing/network.hpp"
#include "sharing/prosumer.hpp"

namespace sharing {

/// A sharing market instance: price sensitivity, prosumers and their network.
struct Scenario {
  double a = 1.0;
  std::vector<Prosumer> prosumers;
  Network network;

  int num_prosumers() const { return static_cast<int>(prosumers.size()); }
  std::vector<int> bus_map() const;
  Eigen::VectorXd demands() const;

  /// L x I distribution factors by prosumer.
  Eigen::MatrixXd factors() const;

  /// Checks a > 0, prosumer data and bus indices. With require_sharing the
  /// scenario must also have I >= 2.
  void validate(bool require_sharing = true) const;
};

}  // namespace sharing
