#include "sharing_cli/app.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sharing/clearing.hpp"
#include "sharing/equilibrium.hpp"
#include "sharing/qp.hpp"
#include "sharing/sweeps.hpp"
#include "sharing_cli/scenario_io.hpp"

namespace sharing::cli {

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int precision = 6;
  std::string mode = "sequential";
  std::vector<double> bids;
  std::string grid;
  std::vector<int> counts;
  std::vector<int> partitions;
  int per_count = 0;
  int max_rounds = 500;
  double tolerance = 1e-8;
};

struct Report {
  std::string command;
  std::string digest;
  std::vector<std::string> outputs;
  long long iterations = 0;
  nlohmann::json extra = nlohmann::json::object();
};

std::string columns(const std::string& prefix, int n, std::vector<std::string>& names) {
  for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return prefix;
}

CsvWriter start_csv(const Options& opt, const ScenarioFile& file, std::uint64_t seed) {
  CsvWriter csv(opt.precision);
  csv.comment("input_digest=" + file.digest + " seed=" + std::to_string(seed));
  return csv;
}

std::string bool_cell(bool v) { return v ? "1" : "0"; }

Eigen::VectorXd md_at(const Scenario& s, const Eigen::VectorXd& q) {
  Eigen::VectorXd md(s.num_prosumers());
  for (int i = 0; i < s.num_prosumers(); ++i) {
    md(i) = 2.0 * s.prosumers[i].c_bar() * (s.prosumers[i].demand - q(i));
  }
  return md;
}

void cmd_clear(const Options& opt, const ScenarioFile& file, CsvWriter& csv, Report& report) {
  const auto& s = file.scenario;
  Eigen::VectorXd bids;
  if (!opt.bids.empty()) {
    bids = Eigen::Map<const Eigen::VectorXd>(opt.bids.data(), opt.bids.size());
  } else if (file.bids) {
    bids = *file.bids;
  } else {
    throw CLI::ValidationError("--bids", "no bids given on the command line or in the file");
  }
  if (bids.size() != s.num_prosumers()) {
    throw CLI::ValidationError("--bids", "expected " + std::to_string(s.num_prosumers()) + " bids");
  }
  s.validate(true);
  const auto clearing = clear_market(s.network, {bids, s.a}, s.bus_map());
  const auto regulated = regulate_prices(clearing, md_at(s, clearing.q), s.a);
  const auto settlement = settle(regulated, clearing);
  report.iterations += clearing.iterations;

  csv.comment("eta=" + csv.format(clearing.eta) + " revenue=" + csv.format(settlement.revenue));
  csv.header({"record", "index", "bid", "lambda", "lambda_c", "q", "s", "flow", "limit",
              "alpha_lower", "alpha_upper", "binding"});
  for (int i = 0; i < s.num_prosumers(); ++i) {
    csv.row({std::string("prosumer"), (long long)i, bids(i), clearing.lambda(i), regulated(i),
             clearing.q(i), settlement.cost(i), {}, {}, {}, {}, {}});
  }
  for (int l = 0; l < s.network.num_lines(); ++l) {
    const bool binding = std::find(clearing.binding_lines.begin(), clearing.binding_lines.end(),
                                   l) != clearing.binding_lines.end();
    csv.row({std::string("line"), (long long)l, {}, {}, {}, {}, {}, clearing.flows(l),
             s.network.lines()[l].flow_limit, clearing.alpha_lower(l), clearing.alpha_upper(l),
             bool_cell(binding)});
  }
}

void cmd_gne(const Options&, const ScenarioFile& file, CsvWriter& csv, Report& report) {
  const auto& s = file.scenario;
  const auto gne = solve_gne(s);
  const auto diag = verify_equilibrium(gne, s);
  report.iterations += gne.iterations;

  csv.comment("kappa=" + csv.format(gne.kappa) + " revenue=" + csv.format(gne.platform_revenue) +
              " congestion_rent=" + csv.format(diag.congestion_rent) +
              " decomposition_residual=" + csv.format(diag.decomposition_residual) +
              " per_capita_gap=" + csv.format(diag.per_capita_gap) +
              " gap_bound=" + csv.format(diag.gap_bound) +
              " pareto_ok=" + bool_cell(diag.pareto_ok));
  csv.header({"record", "index", "resource", "bus", "p", "bid", "q", "lambda", "lambda_c",
              "disutility", "sharing_cost", "cost", "baseline", "flow", "limit", "tau_lower",
              "tau_upper"});
  for (int i = 0; i < s.num_prosumers(); ++i) {
    csv.row({std::string("prosumer"), (long long)i, {}, (long long)s.prosumers[i].bus,
             gne.output(i), gne.bids(i), gne.q(i), gne.clearing.lambda(i),
             gne.regulated_prices(i), gne.disutility(i), gne.sharing_cost(i), gne.cost(i),
             diag.baseline(i), {}, {}, {}, {}});
  }
  for (int i = 0; i < s.num_prosumers(); ++i) {
    for (int k = 0; k < gne.p[i].size(); ++k) {
      csv.row({std::string("resource"), (long long)i, (long long)k, (long long)s.prosumers[i].bus,
               gne.p[i](k), {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}});
    }
  }
  for (int l = 0; l < s.network.num_lines(); ++l) {
    csv.row({std::string("line"), (long long)l, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {},
             gne.flows(l), s.network.lines()[l].flow_limit, gne.tau_lower(l), gne.tau_upper(l)});
  }
  csv.row({std::string("total"), {}, {}, {}, gne.output.sum(), {}, {}, {}, {},
           gne.total_disutility, gne.sharing_cost.sum(), gne.cost.sum(), diag.baseline.sum(), {},
           {}, {}, {}});
}

void cmd_sco(const Options&, const ScenarioFile& file, CsvWriter& csv, Report& report) {
  const auto& s = file.scenario;
  const auto sco = solve_social_optimum(s);
  report.iterations += sco.iterations;
  csv.comment("kappa=" + csv.format(sco.kappa) +
              " price_variance=" + csv.format(price_variance(sco.nodal_prices)));
  csv.header({"record", "index", "resource", "bus", "p", "nodal_price", "disutility", "flow",
              "limit", "tau_lower", "tau_upper"});
  for (int i = 0; i < s.num_prosumers(); ++i) {
    csv.row({std::string("prosumer"), (long long)i, {}, (long long)s.prosumers[i].bus,
             sco.output(i), sco.nodal_prices(i), disutility(s.prosumers[i], sco.p[i]), {}, {}, {},
             {}});
  }
  for (int i = 0; i < s.num_prosumers(); ++i) {
    for (int k = 0; k < sco.p[i].size(); ++k) {
      csv.row({std::string("resource"), (long long)i, (long long)k, (long long)s.prosumers[i].bus,
               sco.p[i](k), {}, {}, {}, {}, {}, {}});
    }
  }
  for (int l = 0; l < s.network.num_lines(); ++l) {
    csv.row({std::string("line"), (long long)l, {}, {}, {}, {}, {}, sco.flows(l),
             s.network.lines()[l].flow_limit, sco.tau_lower(l), sco.tau_upper(l)});
  }
  csv.row({std::string("total"), {}, {}, {}, sco.output.sum(), {}, sco.total_disutility, {}, {},
           {}, {}});
}

void cmd_brd(const Options& opt, const ScenarioFile& file, CsvWriter& csv, Report& report) {
  const auto& s = file.scenario;
  BrdOptions brd;
  brd.mode = opt.mode == "simultaneous" ? BrdMode::simultaneous : BrdMode::sequential;
  brd.max_rounds = opt.max_rounds;
  brd.tolerance = opt.tolerance;
  Eigen::VectorXd start = Eigen::VectorXd::Zero(s.num_prosumers());
  if (!opt.bids.empty()) {
    if (static_cast<int>(opt.bids.size()) != s.num_prosumers()) {
      throw CLI::ValidationError("--bids", "expected " + std::to_string(s.num_prosumers()) +
                                               " starting bids");
    }
    start = Eigen::Map<const Eigen::VectorXd>(opt.bids.data(), opt.bids.size());
  }
  const auto result = best_response_dynamics(s, start, brd);
  report.iterations += result.rounds;
  report.extra["converged"] = result.converged;
  report.extra["rounds"] = result.rounds;

  csv.comment("mode=" + opt.mode + " converged=" + bool_cell(result.converged) +
              " rounds=" + std::to_string(result.rounds) +
              " last_change=" + csv.format(result.last_change));
  std::vector<std::string> names{"round"};
  columns("b", s.num_prosumers(), names);
  names.push_back("change");
  csv.header(names);
  for (std::size_t t = 0; t < result.trajectory.size(); ++t) {
    std::vector<Cell> row{(long long)t};
    for (int i = 0; i < s.num_prosumers(); ++i) row.push_back(result.trajectory[t](i));
    if (t == 0) {
      row.push_back(Cell{});
    } else {
      row.push_back((result.trajectory[t] - result.trajectory[t - 1]).cwiseAbs().maxCoeff());
    }
    csv.row(row);
  }
}

std::vector<double> parse_grid(const std::string& text) {
  // start:stop:step or a comma list
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
    if (parts.size() != 3) throw CLI::ValidationError("--grid", "expected start:stop:step");
    return linear_grid(parts[0], parts[1], parts[2]);
  }
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
  return grid;
}

void cmd_sweep_flow(const Options& opt, const ScenarioFile& file, CsvWriter& csv,
                    Report& report) {
  std::vector<double> grid = file.flow_grid;
  if (!opt.grid.empty()) {
    try {
      grid = parse_grid(opt.grid);
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("--grid", e.what());
    }
  }
  if (grid.empty()) throw CLI::ValidationError("--grid", "no flow grid given");
  const auto rows = flow_sweep(file.scenario, grid);
  const int n = file.scenario.num_prosumers();
  std::vector<std::string> names{"F",          "sco_cost",    "smk_cost", "relative_diff",
                                 "sco_variance", "smk_variance"};
  columns("sco_price_", n, names);
  columns("smk_price_", n, names);
  csv.header(names);
  for (const auto& r : rows) {
    report.iterations += r.gne_iterations;
    std::vector<Cell> row{r.flow_limit,   r.sco_cost,     r.smk_cost,
                          r.relative_diff, r.sco_variance, r.smk_variance};
    for (int i = 0; i < n; ++i) row.push_back(r.sco_prices(i));
    for (int i = 0; i < n; ++i) row.push_back(r.smk_prices(i));
    csv.row(row);
  }
}

void cmd_sweep_count(const Options& opt, const ScenarioFile& file, std::uint64_t seed,
                     CsvWriter& csv, Report& report) {
  std::vector<int> counts = opt.counts.empty() ? file.counts : opt.counts;
  if (counts.empty()) counts = {2, 5, 10, 20, 30};
  const int per_count = opt.per_count > 0 ? opt.per_count : file.per_count;
  const auto& r = file.ranges;
  csv.comment("c_range=[" + csv.format(r.c_min) + "," + csv.format(r.c_max) + "] demand_range=[" +
              csv.format(r.demand_min) + "," + csv.format(r.demand_max) +
              "] resources=" + std::to_string(r.resources) +
              " per_count=" + std::to_string(per_count));
  const auto rows = count_sweep(file.scenario, counts, seed, r, per_count);
  csv.header({"I", "avg_gap", "min_gap", "max_gap", "avg_relative", "bound", "scenarios",
              "redraws"});
  for (const auto& row : rows) {
    report.iterations += row.gne_iterations;
    csv.row({(long long)row.num_prosumers, row.avg_gap, row.min_gap, row.max_gap,
             row.avg_relative, row.bound, (long long)row.scenarios, (long long)row.redraws});
  }
}

void cmd_partition(const Options& opt, const ScenarioFile& file, CsvWriter& csv,
                   Report& report) {
  std::vector<int> parts = opt.partitions.empty() ? file.partitions : opt.partitions;
  if (parts.empty()) parts = {1, 2};
  const auto& s = file.scenario;
  const auto gne = solve_gne(s);
  report.iterations += gne.iterations;
  csv.header({"M", "prosumers", "before_disutility", "after_disutility", "change"});
  for (int m : parts) {
    Scenario split;
    try {
      split = equal_partition(s, gne, m);
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("--M", e.what());
    }
    const auto after = solve_gne(split);
    report.iterations += after.iterations;
    csv.row({(long long)m, (long long)split.num_prosumers(), gne.total_disutility,
             after.total_disutility, after.total_disutility - gne.total_disutility});
  }
}

void cmd_verify(const Options&, const ScenarioFile& file, CsvWriter& csv, Report& report) {
  const auto& s = file.scenario;
  const auto gne = solve_gne(s);
  const auto d = verify_equilibrium(gne, s);
  report.iterations += gne.iterations;
  const auto continuum = detect_continuum(s);
  csv.comment("continuum: " + continuum.summary);
  csv.header({"check", "value", "limit", "pass"});
  auto check = [&](const std::string& name, double value, double limit) {
    csv.row({name, value, limit, bool_cell(value <= limit)});
  };
  check("pareto_margin", d.pareto_margin, 1e-7);
  check("decomposition_residual", d.decomposition_residual, 1e-6);
  check("regulation_residual", d.regulation_residual, 1e-6);
  check("revenue_residual", d.revenue_residual, 1e-6);
  check("negative_revenue", -d.platform_revenue, 1e-7);
  check("negative_gap", -d.per_capita_gap, 1e-7);
  check("gap_over_bound", d.per_capita_gap - d.gap_bound, 1e-7);
  check("marginal_residual", d.marginal_residual, 1e-8);
  check("loop_closure_residual", d.loop_closure_residual, 1e-6);
  report.extra["continuum"] = continuum.summary;
}

void write_output(const Options& opt, const std::string& text, std::ostream& out,
                  Report& report) {
  if (opt.out.empty() || opt.out == "-") {
    out << text;
    report.outputs.push_back("-");
    return;
  }
  std::ofstream f(opt.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + opt.out);
  f << text;
  report.outputs.push_back(opt.out);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network-constrained energy sharing market"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    sub->add_option("--out", opt.out, "Output CSV path (default stdout)");
    sub->add_option("--seed", opt.seed, "Random seed")->each([&](const std::string&) {
      opt.seed_given = true;
    });
    sub->add_option("--precision", opt.precision, "Significant digits in CSV")
        ->check(CLI::Range(1, 17));
  };
  auto* clear = app.add_subcommand("clear", "Clear the market at given bids");
  add_common(clear);
  clear->add_option("--bids", opt.bids, "Bids, one per prosumer")->delimiter(',');
  auto* gne = app.add_subcommand("gne", "Equilibrium of the regulated market");
  add_common(gne);
  auto* sco = app.add_subcommand("sco", "Social optimum");
  add_common(sco);
  auto* brd = app.add_subcommand("brd", "Best-response dynamics");
  add_common(brd);
  brd->add_option("--mode", opt.mode)->check(CLI::IsMember({"sequential", "simultaneous"}));
  brd->add_option("--bids", opt.bids, "Starting bids (default zeros)")->delimiter(',');
  brd->add_option("--max-rounds", opt.max_rounds)->check(CLI::PositiveNumber);
  brd->add_option("--tol", opt.tolerance)->check(CLI::PositiveNumber);
  auto* sweep_flow = app.add_subcommand("sweep-flow", "Sweep a common line limit");
  add_common(sweep_flow);
  sweep_flow->add_option("--grid", opt.grid, "start:stop:step or comma list");
  auto* sweep_count = app.add_subcommand("sweep-count", "Sweep the number of prosumers");
  add_common(sweep_count);
  sweep_count->add_option("--counts", opt.counts, "Prosumer counts")->delimiter(',');
  sweep_count->add_option("--per-count", opt.per_count, "Scenarios per count")
      ->check(CLI::PositiveNumber);
  auto* partition = app.add_subcommand("partition", "Equal partition and re-solve");
  add_common(partition);
  partition->add_option("--M", opt.partitions, "Partition counts")->delimiter(',');
  auto* verify = app.add_subcommand("verify", "Equilibrium diagnostics");
  add_common(verify);

  const auto started = std::chrono::steady_clock::now();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  Report report;
  report.command = app.get_subcommands().front()->get_name();
  try {
    const auto file = load_scenario(opt.scenario);
    report.digest = file.digest;
    const std::uint64_t seed = opt.seed_given ? opt.seed : file.seed.value_or(0);
    CsvWriter csv = start_csv(opt, file, seed);
    const auto& cmd = report.command;
    if (cmd == "clear") {
      cmd_clear(opt, file, csv, report);
    } else if (cmd == "gne") {
      cmd_gne(opt, file, csv, report);
    } else if (cmd == "sco") {
      cmd_sco(opt, file, csv, report);
    } else if (cmd == "brd") {
      cmd_brd(opt, file, csv, report);
    } else if (cmd == "sweep-flow") {
      cmd_sweep_flow(opt, file, csv, report);
    } else if (cmd == "sweep-count") {
      cmd_sweep_count(opt, file, seed, csv, report);
    } else if (cmd == "partition") {
      cmd_partition(opt, file, csv, report);
    } else {
      cmd_verify(opt, file, csv, report);
    }
    write_output(opt, csv.str(), out, report);
  } catch (const ParseError& e) {
    err << "error: " << opt.scenario << ": " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const qp::InfeasibleError& e) {
    err << "infeasible: " << e.what() << " (certificate: "
        << (e.is_equality() ? "equality row " : "range row ") << e.constraint() << ")\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  nlohmann::json j = {{"command", report.command},
                      {"input_digest", report.digest},
                      {"outputs", report.outputs},
                      {"wall_time_s", wall},
                      {"solver_iterations", report.iterations}};
  for (const auto& item : report.extra.items()) j[item.key()] = item.value();
  err << j.dump() << "\n";
  return kOk;
}

}  // namespace sharing::cli
