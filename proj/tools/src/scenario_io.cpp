#include "sharing_cli/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sharing::cli {

using nlohmann::json;

ParseError::ParseError(const std::string& message, int line, int column, std::string pointer)
    : std::runtime_error(message), line_(line), column_(column), pointer_(std::move(pointer)) {}

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw ParseError((pointer.empty() ? std::string("/") : pointer) + ": " + what, 0, 0, pointer);
}

void allow_keys(const json& obj, const std::string& pointer,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(pointer, "expected an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!keys.count(item.key())) fail(pointer + "/" + item.key(), "unknown key");
  }
}

const json& require(const json& obj, const char* key, const std::string& pointer) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(pointer + "/" + key, "missing required key");
  return *it;
}

double number(const json& v, const std::string& pointer) {
  if (!v.is_number()) fail(pointer, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& pointer) {
  if (!v.is_number_integer()) fail(pointer, "expected an integer");
  return v.get<int>();
}

double number_or(const json& obj, const char* key, const std::string& pointer, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, pointer + "/" + key);
}

const json& array(const json& v, const std::string& pointer) {
  if (!v.is_array()) fail(pointer, "expected an array");
  return v;
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t k = 0; k < end; ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

Network parse_network(const json& j) {
  const std::string at = "/network";
  allow_keys(j, at, {"buses", "slack", "lines"});
  const int buses = integer(require(j, "buses", at), at + "/buses");
  const int slack = j.contains("slack") ? integer(j["slack"], at + "/slack") : 0;
  std::vector<Line> lines;
  const auto& list = array(require(j, "lines", at), at + "/lines");
  for (std::size_t l = 0; l < list.size(); ++l) {
    const std::string p = at + "/lines/" + std::to_string(l);
    allow_keys(list[l], p, {"from", "to", "reactance", "flow_limit"});
    Line line;
    line.from_bus = integer(require(list[l], "from", p), p + "/from");
    line.to_bus = integer(require(list[l], "to", p), p + "/to");
    line.reactance = number_or(list[l], "reactance", p, 1.0);
    line.flow_limit = number(require(list[l], "flow_limit", p), p + "/flow_limit");
    lines.push_back(line);
  }
  try {
    return Network::build(buses, std::move(lines), slack);
  } catch (const std::invalid_argument& e) {
    fail(at, e.what());
  }
}

void parse_sweep(const json& j, ScenarioFile& file) {
  const std::string at = "/sweep";
  allow_keys(j, at, {"flow_grid", "counts", "per_count", "partition", "seed", "random"});
  if (j.contains("flow_grid")) {
    const auto& g = j["flow_grid"];
    const std::string p = at + "/flow_grid";
    if (g.is_array()) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        file.flow_grid.push_back(number(g[k], p + "/" + std::to_string(k)));
      }
    } else {
      allow_keys(g, p, {"start", "stop", "step"});
      try {
        file.flow_grid = linear_grid(number(require(g, "start", p), p + "/start"),
                                     number(require(g, "stop", p), p + "/stop"),
                                     number(require(g, "step", p), p + "/step"));
      } catch (const std::invalid_argument& e) {
        fail(p, e.what());
      }
    }
  }
  if (j.contains("counts")) {
    const auto& c = array(j["counts"], at + "/counts");
    for (std::size_t k = 0; k < c.size(); ++k) {
      file.counts.push_back(integer(c[k], at + "/counts/" + std::to_string(k)));
    }
  }
  if (j.contains("per_count")) file.per_count = integer(j["per_count"], at + "/per_count");
  if (j.contains("partition")) {
    const auto& m = array(j["partition"], at + "/partition");
    for (std::size_t k = 0; k < m.size(); ++k) {
      file.partitions.push_back(integer(m[k], at + "/partition/" + std::to_string(k)));
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(at + "/seed", "expected a non-negative integer");
    file.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("random")) {
    const std::string p = at + "/random";
    const auto& r = j["random"];
    allow_keys(r, p, {"c_min", "c_max", "demand_min", "demand_max", "resources"});
    auto& rr = file.ranges;
    rr.c_min = number_or(r, "c_min", p, rr.c_min);
    rr.c_max = number_or(r, "c_max", p, rr.c_max);
    rr.demand_min = number_or(r, "demand_min", p, rr.demand_min);
    rr.demand_max = number_or(r, "demand_max", p, rr.demand_max);
    if (r.contains("resources")) rr.resources = integer(r["resources"], p + "/resources");
  }
}

}  // namespace

ScenarioFile parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    std::string what = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] " prefix.
    if (auto pos = what.find("] "); pos != std::string::npos) what = what.substr(pos + 2);
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + what,
                     line, column, "");
  }

  ScenarioFile file;
  file.digest = fnv1a64_hex(text);
  allow_keys(root, "", {"a", "network", "prosumers", "bids", "sweep"});
  file.scenario.a = number(require(root, "a", ""), "/a");
  file.scenario.network = parse_network(require(root, "network", ""));

  const auto& list = array(require(root, "prosumers", ""), "/prosumers");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string p = "/prosumers/" + std::to_string(i);
    allow_keys(list[i], p, {"bus", "c", "D"});
    Prosumer prosumer;
    prosumer.bus = integer(require(list[i], "bus", p), p + "/bus");
    const auto& c = array(require(list[i], "c", p), p + "/c");
    for (std::size_t k = 0; k < c.size(); ++k) {
      prosumer.c.push_back(number(c[k], p + "/c/" + std::to_string(k)));
    }
    prosumer.demand = number(require(list[i], "D", p), p + "/D");
    file.scenario.prosumers.push_back(std::move(prosumer));
  }
  try {
    file.scenario.validate(false);
  } catch (const std::invalid_argument& e) {
    fail("/prosumers", e.what());
  }

  if (root.contains("bids")) {
    const auto& b = array(root["bids"], "/bids");
    if (static_cast<int>(b.size()) != file.scenario.num_prosumers()) {
      fail("/bids", "expected one bid per prosumer");
    }
    Eigen::VectorXd bids(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      bids(i) = number(b[i], "/bids/" + std::to_string(i));
    }
    file.bids = bids;
  }
  if (root.contains("sweep")) parse_sweep(root["sweep"], file);
  return file;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path, 0, 0, "");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

void CsvWriter::comment(const std::string& text) { out_ += "# " + text + "\n"; }

void CsvWriter::header(const std::vector<std::string>& names) {
  columns_ = names.size();
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) out_ += ',';
    out_ += names[k];
  }
  out_ += '\n';
}

std::string CsvWriter::format(double value) const {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision_, value);
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (columns_ && cells.size() != columns_) {
    throw std::logic_error("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(columns_));
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out_ += ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            out_ += format(v);
          } else if constexpr (std::is_same_v<T, long long>) {
            out_ += std::to_string(v);
          } else if constexpr (std::is_same_v<T, std::string>) {
            out_ += v;
          }
        },
        cells[k]);
  }
  out_ += '\n';
}

}  // namespace sharing::cli
