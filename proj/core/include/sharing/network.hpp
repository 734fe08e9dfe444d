#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sharing {

/// A transmission line of the DC network. Orientation is from_bus -> to_bus;
/// a positive flow travels in that direction.
struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 1.0;  // per-unit, must be > 0
  double flow_limit = 0.0; // |flow| <= flow_limit, must be > 0
};

/// Per-line result of a flow-limit check.
struct LineFlowStatus {
  double flow = 0.0;
  double limit = 0.0;
  double slack_lower = 0.0;  // flow + limit
  double slack_upper = 0.0;  // limit - flow
  bool binding_lower = false;
  bool binding_upper = false;
  double violation = 0.0;    // max(0, |flow| - limit)
};

struct FlowReport {
  std::vector<LineFlowStatus> lines;
  bool feasible = true;
  double max_violation = 0.0;
};

/// Immutable DC network with its power transfer distribution factors.
///
/// ptdf()(l, n) is the flow on line l (in its from->to direction) caused by a
/// unit injection at bus n that is withdrawn at the slack bus. The slack column
/// is identically zero. For any balanced vector the resulting flows do not
/// depend on the choice of slack.
class Network {
 public:
  Network() = default;

  /// Builds the network and its PTDF matrix from the reduced nodal susceptance
  /// matrix. Throws std::invalid_argument on a bad line, an out-of-range slack,
  /// a disconnected graph, or a singular reduced matrix.
  static Network build(int num_buses, std::vector<Line> lines, int slack_bus = 0);

  int num_buses() const { return num_buses_; }
  int num_lines() const { return static_cast<int>(lines_.size()); }
  int slack_bus() const { return slack_bus_; }
  int max_degree() const { return max_degree_; }
  double max_flow_limit() const;

  const std::vector<Line>& lines() const { return lines_; }
  const Eigen::MatrixXd& ptdf() const { return ptdf_; }

  /// L x I matrix of distribution factors seen by each prosumer, i.e. the PTDF
  /// column of the bus that prosumer is attached to.
  Eigen::MatrixXd prosumer_factors(std::span<const int> prosumer_bus) const;

  /// ptdf * bus_values. The vector must have one entry per bus and sum to zero
  /// within 1e-9; throws std::invalid_argument otherwise.
  Eigen::VectorXd line_flows(const Eigen::VectorXd& bus_values) const;

  /// Flow, limit and binding status per line at tolerance 1e-7. Report-only.
  FlowReport check_flow_limits(const Eigen::VectorXd& bus_values) const;

  /// Sums per-prosumer quantities onto their buses.
  Eigen::VectorXd aggregate_to_buses(const Eigen::VectorXd& prosumer_values,
                                     std::span<const int> prosumer_bus) const;

 private:
  int num_buses_ = 0;
  int slack_bus_ = 0;
  int max_degree_ = 0;
  std::vector<Line> lines_;
  Eigen::MatrixXd ptdf_;
};

}  // namespace sharing
