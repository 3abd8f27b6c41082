#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stclear/audit.hpp"
#include "stclear/error.hpp"
#include "stclear/market.hpp"
#include "stclear/settlement.hpp"

namespace stclear::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kFormat = "stclear-instance";
inline constexpr int kVersion = 1;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::Schema, path + ": " + message);
}

/// Rejects keys outside `allowed` and requires every key in `required`.
inline void check_keys(const Json& obj, const std::string& path, std::initializer_list<std::string_view> allowed,
                       std::initializer_list<std::string_view> required) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) schema_error(path, "unknown field '" + key + "'");
  }
  for (std::string_view key : required) {
    if (!obj.contains(std::string(key))) schema_error(path, "missing field '" + std::string(key) + "'");
  }
}

inline const Json& field(const Json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(path, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string get_string(const Json& obj, const std::string& path, const char* key) {
  const Json& v = field(obj, path, key);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline double get_number(const Json& obj, const std::string& path, const char* key) {
  const Json& v = field(obj, path, key);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  return v.get<double>();
}

inline std::size_t get_index(const Json& obj, const std::string& path, const char* key) {
  const Json& v = field(obj, path, key);
  if (!v.is_number_unsigned()) schema_error(path + "." + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline const Json& get_array(const Json& obj, const std::string& path, const char* key, bool required) {
  static const Json empty = Json::array();
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) schema_error(path, std::string("missing field '") + key + "'");
    return empty;
  }
  if (!it->is_array()) schema_error(path + "." + key, "expected an array");
  return *it;
}

inline SpaceTimeNode get_location(const Json& obj, const std::string& path) {
  check_keys(obj, path, {"node", "time"}, {"node", "time"});
  return {get_string(obj, path, "node"), get_index(obj, path, "time")};
}

inline std::map<std::string, double> get_yields(const Json& obj, const std::string& path, const char* key) {
  const Json& v = field(obj, path, key);
  if (!v.is_object()) schema_error(path + "." + key, "expected an object of product yields");
  std::map<std::string, double> out;
  for (const auto& [p, gamma] : v.items()) {
    if (!gamma.is_number()) schema_error(path + "." + key + "." + p, "expected a number");
    out.emplace(p, gamma.get<double>());
  }
  return out;
}

inline Json location_json(const SpaceTimeNode& s) { return Json{{"node", s.node}, {"time", s.time}}; }

}  // namespace detail

/// Structural parse only; run validate() for semantic checks.
inline MarketInstance parse_instance(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Schema, std::string("malformed JSON: ") + e.what());
  }
  using namespace detail;
  const std::string root = "instance";
  check_keys(doc, root,
             {"format", "version", "products", "nodes", "times", "step", "arcs", "suppliers", "consumers",
              "transporters", "technologies", "metadata"},
             {"format", "version", "products", "nodes", "times"});
  if (get_string(doc, root, "format") != kFormat) schema_error(root + ".format", "expected '" + std::string(kFormat) + "'");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kVersion) {
    schema_error(root + ".version", "unsupported version");
  }

  MarketInstance inst;
  for (const char* key : {"products", "nodes"}) {
    const Json& arr = get_array(doc, root, key, true);
    auto& target = std::string_view(key) == "products" ? inst.products : inst.nodes;
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (!arr[k].is_string()) schema_error(root + "." + key + "[" + std::to_string(k) + "]", "expected a string");
      target.push_back(arr[k].get<std::string>());
    }
  }
  inst.grid.times.clear();
  const Json& times = get_array(doc, root, "times", true);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!times[k].is_number()) schema_error(root + ".times[" + std::to_string(k) + "]", "expected a number");
    inst.grid.times.push_back(times[k].get<double>());
  }
  inst.grid.step = doc.contains("step") ? get_number(doc, root, "step") : 1.0;

  const Json& arcs = get_array(doc, root, "arcs", false);
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const std::string path = root + ".arcs[" + std::to_string(k) + "]";
    check_keys(arcs[k], path, {"from", "to"}, {"from", "to"});
    inst.arcs.push_back({get_location(arcs[k]["from"], path + ".from"), get_location(arcs[k]["to"], path + ".to")});
  }

  auto point_stakeholders = [&](const char* key, auto& target) {
    const Json& arr = get_array(doc, root, key, false);
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string path = root + "." + key + "[" + std::to_string(k) + "]";
      const Json& o = arr[k];
      check_keys(o, path, {"id", "node", "time", "product", "capacity", "bid"},
                 {"id", "node", "time", "product", "capacity", "bid"});
      target.push_back({get_string(o, path, "id"),
                        {get_string(o, path, "node"), get_index(o, path, "time")},
                        get_string(o, path, "product"),
                        get_number(o, path, "capacity"),
                        get_number(o, path, "bid")});
    }
  };
  point_stakeholders("suppliers", inst.suppliers);
  point_stakeholders("consumers", inst.consumers);

  const Json& transporters = get_array(doc, root, "transporters", false);
  for (std::size_t k = 0; k < transporters.size(); ++k) {
    const std::string path = root + ".transporters[" + std::to_string(k) + "]";
    const Json& o = transporters[k];
    check_keys(o, path, {"id", "from", "to", "product", "capacity", "bid"}, {"id", "from", "to", "product", "capacity", "bid"});
    inst.transporters.push_back({get_string(o, path, "id"),
                                 {get_location(o["from"], path + ".from"), get_location(o["to"], path + ".to")},
                                 get_string(o, path, "product"),
                                 get_number(o, path, "capacity"),
                                 get_number(o, path, "bid")});
  }

  const Json& technologies = get_array(doc, root, "technologies", false);
  for (std::size_t k = 0; k < technologies.size(); ++k) {
    const std::string path = root + ".technologies[" + std::to_string(k) + "]";
    const Json& o = technologies[k];
    check_keys(o, path, {"id", "node", "time", "inputs", "outputs", "reference", "capacity", "bid"},
               {"id", "node", "time", "inputs", "outputs", "reference", "capacity", "bid"});
    TechnologyProvider m;
    m.id = get_string(o, path, "id");
    m.location = {get_string(o, path, "node"), get_index(o, path, "time")};
    m.inputs = get_yields(o, path, "inputs");
    m.outputs = get_yields(o, path, "outputs");
    m.reference = get_string(o, path, "reference");
    m.capacity = get_number(o, path, "capacity");
    m.bid = get_number(o, path, "bid");
    inst.technologies.push_back(std::move(m));
  }

  if (doc.contains("metadata")) {
    const Json& md = doc["metadata"];
    if (!md.is_object()) schema_error(root + ".metadata", "expected an object");
    for (const auto& [key, value] : md.items()) {
      if (!value.is_string()) schema_error(root + ".metadata." + key, "expected a string");
      inst.metadata.emplace(key, value.get<std::string>());
    }
  }
  return inst;
}

/// Canonical text: fixed key order, two-space indent, trailing newline.
inline std::string emit_instance(const MarketInstance& inst) {
  Json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["products"] = inst.products;
  doc["nodes"] = inst.nodes;
  doc["times"] = inst.grid.times;
  doc["step"] = inst.grid.step;
  doc["arcs"] = Json::array();
  for (const Arc& a : inst.arcs) {
    doc["arcs"].push_back(Json{{"from", detail::location_json(a.base)}, {"to", detail::location_json(a.receiving)}});
  }
  auto point = [](const auto& s) {
    return Json{{"id", s.id}, {"node", s.location.node}, {"time", s.location.time},
                {"product", s.product}, {"capacity", s.capacity}, {"bid", s.bid}};
  };
  doc["suppliers"] = Json::array();
  for (const auto& s : inst.suppliers) doc["suppliers"].push_back(point(s));
  doc["consumers"] = Json::array();
  for (const auto& c : inst.consumers) doc["consumers"].push_back(point(c));
  doc["transporters"] = Json::array();
  for (const auto& l : inst.transporters) {
    doc["transporters"].push_back(Json{{"id", l.id},
                                       {"from", detail::location_json(l.arc.base)},
                                       {"to", detail::location_json(l.arc.receiving)},
                                       {"product", l.product},
                                       {"capacity", l.capacity},
                                       {"bid", l.bid}});
  }
  doc["technologies"] = Json::array();
  for (const auto& m : inst.technologies) {
    Json inputs = Json::object();
    for (const auto& [p, g] : m.inputs) inputs[p] = g;
    Json outputs = Json::object();
    for (const auto& [p, g] : m.outputs) outputs[p] = g;
    doc["technologies"].push_back(Json{{"id", m.id},
                                       {"node", m.location.node},
                                       {"time", m.location.time},
                                       {"inputs", inputs},
                                       {"outputs", outputs},
                                       {"reference", m.reference},
                                       {"capacity", m.capacity},
                                       {"bid", m.bid}});
  }
  Json md = Json::object();
  for (const auto& [k, v] : inst.metadata) md[k] = v;
  doc["metadata"] = md;
  return doc.dump(2) + "\n";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

/// Parses and validates; semantic problems raise Validation.
inline MarketInstance load_instance(const std::filesystem::path& path) {
  MarketInstance inst = parse_instance(read_file(path));
  const auto report = validate(inst);
  if (!report.ok()) throw Error(ErrorCode::Validation, report.summary());
  return inst;
}

inline void save_instance(const std::filesystem::path& path, const MarketInstance& inst) {
  write_file(path, emit_instance(inst));
}

/// Fixed 9-decimal rendering; negative zero prints as zero.
inline std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// RFC 4180 quoting when needed.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        fields.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

inline std::string allocations_csv(const SettlementReport& report) {
  std::string out = "stakeholder,class,allocation,capacity,saturation\n";
  for (const auto& s : report.stakeholders) {
    out += csv_field(s.id) + "," + std::string(to_string(s.cls)) + "," + fixed(s.allocation) + "," +
           fixed(s.capacity) + "," + std::string(to_string(s.saturation)) + "\n";
  }
  return out;
}

/// Rows follow the clearing-row order, i.e. sorted by (time, node, product).
inline std::string prices_csv(const ClearingSolution& solution) {
  std::string out = "node,time,product,price\n";
  for (std::size_t r = 0; r < solution.index().rows(); ++r) {
    const NodeProduct& key = solution.index().row(r);
    out += csv_field(key.node) + "," + std::to_string(key.time) + "," + csv_field(key.product) + "," +
           (solution.prices[r] ? fixed(*solution.prices[r]) : std::string("undefined")) + "\n";
  }
  return out;
}

inline std::string settlement_csv(const SettlementReport& report) {
  std::string out = "stakeholder,price,profit\n";
  for (const auto& s : report.stakeholders) out += csv_field(s.id) + "," + fixed(s.price) + "," + fixed(s.profit) + "\n";
  return out;
}

inline std::string streams_csv(const RevenueStreams& s) {
  std::string out = "revenue_stream,value\n";
  out += "Consumer total," + fixed(s.consumers) + "\n";
  out += "Supplier total," + fixed(s.suppliers) + "\n";
  out += "Transport (temporal) total," + fixed(s.temporal_transport) + "\n";
  out += "Transport (spatial) total," + fixed(s.spatial_transport) + "\n";
  if (s.has_spatiotemporal) out += "Transport (spatiotemporal) subtotal," + fixed(s.spatiotemporal_transport) + "\n";
  out += "Technologies total," + fixed(s.technologies) + "\n";
  out += "Grand Total," + fixed(s.grand_total) + "\n";
  return out;
}

inline Json audit_json(const AuditReport& report) {
  Json doc;
  doc["passed"] = report.passed();
  doc["solver_status"] = std::string(to_string(report.solver_status));
  doc["surplus"] = report.surplus;
  doc["checks"] = Json::array();
  for (const auto& c : report.checks) {
    doc["checks"].push_back(Json{{"name", c.name},
                                 {"status", std::string(to_string(c.status))},
                                 {"residual", c.residual},
                                 {"tolerance", c.tolerance},
                                 {"offender", c.offender},
                                 {"detail", c.detail}});
  }
  return doc;
}

inline void write_solution(const std::filesystem::path& dir, const ClearingSolution& solution,
                           const SettlementReport& settlement, const AuditReport* audit = nullptr) {
  std::filesystem::create_directories(dir);
  write_file(dir / "allocations.csv", allocations_csv(settlement));
  write_file(dir / "prices.csv", prices_csv(solution));
  write_file(dir / "settlement.csv", settlement_csv(settlement));
  write_file(dir / "streams.csv", streams_csv(settlement.streams));
  if (audit) write_file(dir / "audit.json", audit_json(*audit).dump(2) + "\n");
}

namespace detail {

inline std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path,
                                                        std::initializer_list<std::string_view> header) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) schema_error(path.string(), "empty file");
  const auto columns = split_csv_line(line);
  if (!std::equal(columns.begin(), columns.end(), header.begin(), header.end())) {
    schema_error(path.string(), "unexpected header '" + line + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) schema_error(path.string() + ":" + std::to_string(number), "wrong field count");
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    schema_error(where, "invalid number '" + text + "'");
  }
}

}  // namespace detail

/// Rebuilds a solution from allocations.csv and prices.csv in `dir`.
/// Stakeholders or prices absent from the files are zero / undefined.
inline ClearingSolution read_solution(const std::filesystem::path& dir, const MarketInstance& instance) {
  const ClearingProgram program = assemble_primal(instance);
  std::vector<double> allocation(program.index.columns(), 0.0);
  std::vector<std::optional<double>> prices(program.index.rows());

  const auto alloc_path = dir / "allocations.csv";
  for (const auto& row : detail::read_table(alloc_path, {"stakeholder", "class", "allocation", "capacity", "saturation"})) {
    const auto j = program.index.column_of(row[0]);
    if (!j) detail::schema_error(alloc_path.string(), "unknown stakeholder '" + row[0] + "'");
    allocation[*j] = detail::parse_double(row[2], alloc_path.string());
  }
  const auto price_path = dir / "prices.csv";
  for (const auto& row : detail::read_table(price_path, {"node", "time", "product", "price"})) {
    const std::size_t t = static_cast<std::size_t>(detail::parse_double(row[1], price_path.string()));
    const auto r = program.index.row_of({t, row[0], row[2]});
    if (!r) detail::schema_error(price_path.string(), "no clearing row for " + row[0] + "@" + row[1] + ":" + row[2]);
    if (row[3] != "undefined") prices[*r] = detail::parse_double(row[3], price_path.string());
  }
  return solution_from_values(instance, std::move(allocation), std::move(prices));
}

}  // namespace stclear::io
