#include "sharing/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace sharing {

namespace {

constexpr double kBalanceTolerance = 1e-9;
constexpr double kBindingTolerance = 1e-7;

void check_connected(int num_buses, const std::vector<Line>& lines, int root) {
  std::vector<std::vector<int>> adjacency(num_buses);
  for (const auto& line : lines) {
    adjacency[line.from_bus].push_back(line.to_bus);
    adjacency[line.to_bus].push_back(line.from_bus);
  }
  std::vector<bool> seen(num_buses, false);
  std::queue<int> frontier;
  frontier.push(root);
  seen[root] = true;
  while (!frontier.empty()) {
    const int bus = frontier.front();
    frontier.pop();
    for (int next : adjacency[bus]) {
      if (!seen[next]) {
        seen[next] = true;
        frontier.push(next);
      }
    }
  }
  for (int bus = 0; bus < num_buses; ++bus) {
    if (!seen[bus]) {
      throw std::invalid_argument("network is disconnected: bus " + std::to_string(bus) +
                                  " is unreachable from bus " + std::to_string(root));
    }
  }
}

}  // namespace

Network Network::build(int num_buses, std::vector<Line> lines, int slack_bus) {
  if (num_buses < 1) {
    throw std::invalid_argument("network needs at least one bus");
  }
  if (slack_bus < 0 || slack_bus >= num_buses) {
    throw std::invalid_argument("slack bus " + std::to_string(slack_bus) + " out of range");
  }
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto& line = lines[l];
    const std::string where = "line " + std::to_string(l) + ": ";
    if (line.from_bus < 0 || line.from_bus >= num_buses || line.to_bus < 0 ||
        line.to_bus >= num_buses) {
      throw std::invalid_argument(where + "bus index out of range");
    }
    if (line.from_bus == line.to_bus) {
      throw std::invalid_argument(where + "from_bus equals to_bus");
    }
    if (!(line.reactance > 0.0)) {
      throw std::invalid_argument(where + "reactance must be positive");
    }
    if (!(line.flow_limit > 0.0)) {
      throw std::invalid_argument(where + "flow limit must be positive");
    }
  }
  check_connected(num_buses, lines, slack_bus);

  Network net;
  net.num_buses_ = num_buses;
  net.slack_bus_ = slack_bus;
  net.lines_ = std::move(lines);

  const int num_lines = net.num_lines();

  std::vector<int> degree(num_buses, 0);
  for (const auto& line : net.lines_) {
    ++degree[line.from_bus];
    ++degree[line.to_bus];
  }
  net.max_degree_ = num_buses > 1 ? *std::max_element(degree.begin(), degree.end()) : 0;

  // Reduced bus index: slack removed.
  auto reduced = [slack_bus](int bus) { return bus < slack_bus ? bus : bus - 1; };
  const int n = num_buses - 1;

  net.ptdf_ = Eigen::MatrixXd::Zero(num_lines, num_buses);
  if (n == 0 || num_lines == 0) {
    return net;
  }

  Eigen::MatrixXd susceptance = Eigen::MatrixXd::Zero(n, n);
  // Line-by-reduced-bus matrix: row l holds (e_from - e_to)^T / x_l.
  Eigen::MatrixXd weighted_incidence = Eigen::MatrixXd::Zero(num_lines, n);
  for (int l = 0; l < num_lines; ++l) {
    const auto& line = net.lines_[l];
    const double y = 1.0 / line.reactance;
    const bool from_in = line.from_bus != slack_bus;
    const bool to_in = line.to_bus != slack_bus;
    if (from_in) {
      const int f = reduced(line.from_bus);
      susceptance(f, f) += y;
      weighted_incidence(l, f) = y;
    }
    if (to_in) {
      const int t = reduced(line.to_bus);
      susceptance(t, t) += y;
      weighted_incidence(l, t) = -y;
    }
    if (from_in && to_in) {
      const int f = reduced(line.from_bus);
      const int t = reduced(line.to_bus);
      susceptance(f, t) -= y;
      susceptance(t, f) -= y;
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(susceptance);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("reduced susceptance matrix is singular");
  }
  // ptdf_reduced = weighted_incidence * B_red^{-1}; B_red is symmetric.
  const Eigen::MatrixXd reduced_ptdf = lu.solve(weighted_incidence.transpose()).transpose();

  for (int bus = 0; bus < num_buses; ++bus) {
    if (bus == slack_bus) continue;
    net.ptdf_.col(bus) = reduced_ptdf.col(reduced(bus));
  }
  return net;
}

double Network::max_flow_limit() const {
  double best = 0.0;
  for (const auto& line : lines_) best = std::max(best, line.flow_limit);
  return best;
}

Eigen::MatrixXd Network::prosumer_factors(std::span<const int> prosumer_bus) const {
  Eigen::MatrixXd factors(num_lines(), static_cast<Eigen::Index>(prosumer_bus.size()));
  for (std::size_t i = 0; i < prosumer_bus.size(); ++i) {
    const int bus = prosumer_bus[i];
    if (bus < 0 || bus >= num_buses_) {
      throw std::invalid_argument("prosumer " + std::to_string(i) + " attached to unknown bus " +
                                  std::to_string(bus));
    }
    factors.col(static_cast<Eigen::Index>(i)) = ptdf_.col(bus);
  }
  return factors;
}

Eigen::VectorXd Network::line_flows(const Eigen::VectorXd& bus_values) const {
  if (bus_values.size() != num_buses_) {
    throw std::invalid_argument("expected " + std::to_string(num_buses_) + " bus values, got " +
                                std::to_string(bus_values.size()));
  }
  const double imbalance = bus_values.sum();
  const double scale = std::max(1.0, bus_values.cwiseAbs().maxCoeff());
  if (std::abs(imbalance) > kBalanceTolerance * scale) {
    throw std::invalid_argument("bus values are unbalanced (sum = " + std::to_string(imbalance) +
                                ")");
  }
  return ptdf_ * bus_values;
}

FlowReport Network::check_flow_limits(const Eigen::VectorXd& bus_values) const {
  const Eigen::VectorXd flows = line_flows(bus_values);
  FlowReport report;
  report.lines.reserve(lines_.size());
  for (int l = 0; l < num_lines(); ++l) {
    LineFlowStatus status;
    status.flow = flows(l);
    status.limit = lines_[l].flow_limit;
    status.slack_lower = status.flow + status.limit;
    status.slack_upper = status.limit - status.flow;
    status.binding_lower = std::abs(status.slack_lower) <= kBindingTolerance;
    status.binding_upper = std::abs(status.slack_upper) <= kBindingTolerance;
    status.violation = std::max(0.0, std::abs(status.flow) - status.limit);
    if (status.violation > kBindingTolerance) report.feasible = false;
    report.max_violation = std::max(report.max_violation, status.violation);
    report.lines.push_back(status);
  }
  return report;
}

Eigen::VectorXd Network::aggregate_to_buses(const Eigen::VectorXd& prosumer_values,
                                            std::span<const int> prosumer_bus) const {
  if (static_cast<std::size_t>(prosumer_values.size()) != prosumer_bus.size()) {
    throw std::invalid_argument("prosumer values and bus map differ in length");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_buses_);
  for (std::size_t i = 0; i < prosumer_bus.size(); ++i) {
    out(prosumer_bus[i]) += prosumer_values(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace sharing
