#include "trapimp/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "trapimp/errors.hpp"

namespace trapimp {

namespace {

using json = nlohmann::json;

const char* kCsvHeader = "sweep_var,value,level_index,energy,parity,flags";

std::string quote(const std::string& s) { return json(s).dump(); }

std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

double parse_double(const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0') throw ConfigError("malformed number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(sep, pos);
    out.push_back(line.substr(pos, end - pos));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

template <class F>
void with_output(const std::string& path, F write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write(f);
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.get<double>();
}

// A scattering length may be a number or the strings "inf" / "-inf".
double get_length(const json& j, const std::string& key) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("'" + key + "' must be a number, \"inf\" or \"-inf\"");
  }
  return get_number(j, key);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= k == a;
    if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("unknown format '" + s + "' (csv, json)");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Parity parity_from_string(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  if (s == "none") return Parity::none;
  throw ConfigError("unknown parity '" + s + "'");
}

void write_csv(const ScanTable& table, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : table.rows)
    os << r.sweep_var << ',' << format_double(r.value) << ',' << r.level_index << ',' << format_double(r.energy)
       << ',' << to_string(r.parity) << ',' << r.flags << '\n';
}

void write_json(const ScanTable& table, std::ostream& os) {
  os << "{\n  \"version\": " << kSchemaVersion << ",\n  \"kind\": \"levels\",\n  \"rows\": [";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    os << (i ? ",\n    " : "\n    ") << "{\"sweep_var\": " << quote(r.sweep_var)
       << ", \"value\": " << json_number(r.value) << ", \"level_index\": " << r.level_index
       << ", \"energy\": " << json_number(r.energy) << ", \"parity\": " << quote(to_string(r.parity))
       << ", \"flags\": " << quote(r.flags) << "}";
  }
  os << (table.rows.empty() ? "]" : "\n  ]") << ",\n  \"diagnostics\": [";
  for (std::size_t i = 0; i < table.diagnostics.size(); ++i)
    os << (i ? ", " : "") << quote(table.diagnostics[i]);
  os << "]\n}\n";
}

ScanTable read_csv(std::istream& is) {
  ScanTable t;
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw ConfigError("CSV header does not match the level schema");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw ConfigError("CSV row needs 6 fields: " + line);
    ScanRow r;
    r.sweep_var = f[0];
    r.value = parse_double(f[1]);
    r.level_index = std::stoi(f[2]);
    r.energy = parse_double(f[3]);
    r.parity = parity_from_string(f[4]);
    r.flags = f[5];
    t.rows.push_back(r);
  }
  return t;
}

ScanTable read_json(std::istream& is) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.contains("version")) throw ConfigError("JSON table has no version field");
  if (j["version"] != kSchemaVersion) throw ConfigError("unsupported table version");
  ScanTable t;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : j.at("rows")) {
    ScanRow row;
    row.sweep_var = r.at("sweep_var").get<std::string>();
    row.value = r.at("value").is_null() ? nan : r.at("value").get<double>();
    row.level_index = r.at("level_index").get<int>();
    row.energy = r.at("energy").is_null() ? nan : r.at("energy").get<double>();
    row.parity = parity_from_string(r.at("parity").get<std::string>());
    row.flags = r.at("flags").get<std::string>();
    t.rows.push_back(row);
  }
  if (j.contains("diagnostics"))
    for (const auto& d : j["diagnostics"]) t.diagnostics.push_back(d.get<std::string>());
  return t;
}

void write_crossings_csv(const std::vector<CrossingRecord>& recs, const std::string& sweep_var, std::ostream& os) {
  os << "sweep_var,value,gap,lower_level,upper_level,lower_energy,upper_energy,lower_parity,upper_parity\n";
  for (const auto& c : recs)
    os << sweep_var << ',' << format_double(c.value) << ',' << format_double(c.gap) << ',' << c.lower_level << ','
       << c.upper_level << ',' << format_double(c.lower_energy) << ',' << format_double(c.upper_energy) << ','
       << to_string(c.lower_parity) << ',' << to_string(c.upper_parity) << '\n';
}

void write_crossings_json(const std::vector<CrossingRecord>& recs, const std::string& sweep_var, std::ostream& os) {
  os << "{\n  \"version\": " << kSchemaVersion << ",\n  \"kind\": \"crossings\",\n  \"sweep_var\": "
     << quote(sweep_var) << ",\n  \"crossings\": [";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& c = recs[i];
    os << (i ? ",\n    " : "\n    ") << "{\"value\": " << json_number(c.value) << ", \"gap\": " << json_number(c.gap)
       << ", \"lower_level\": " << c.lower_level << ", \"upper_level\": " << c.upper_level
       << ", \"lower_energy\": " << json_number(c.lower_energy) << ", \"upper_energy\": "
       << json_number(c.upper_energy) << ", \"lower_parity\": " << quote(to_string(c.lower_parity))
       << ", \"upper_parity\": " << quote(to_string(c.upper_parity)) << "}";
  }
  os << (recs.empty() ? "]" : "\n  ]") << "\n}\n";
}

void write_cut_csv(const std::vector<CutSample>& cut, std::ostream& os) {
  os << "x,z,value,flags\n";
  for (const auto& s : cut)
    os << format_double(s.x) << ',' << format_double(s.z) << ',' << format_double(s.value) << ','
       << (s.refused ? "refused" : "") << '\n';
}

void write_cut_json(const std::vector<CutSample>& cut, std::ostream& os) {
  os << "{\n  \"version\": " << kSchemaVersion << ",\n  \"kind\": \"cut\",\n  \"samples\": [";
  for (std::size_t i = 0; i < cut.size(); ++i) {
    const auto& s = cut[i];
    os << (i ? ",\n    " : "\n    ") << "{\"x\": " << json_number(s.x) << ", \"z\": " << json_number(s.z)
       << ", \"value\": " << json_number(s.value) << ", \"refused\": " << (s.refused ? "true" : "false") << "}";
  }
  os << (cut.empty() ? "]" : "\n  ]") << "\n}\n";
}

void export_table(const ScanTable& table, Format f, const std::string& path) {
  with_output(path, [&](std::ostream& os) { f == Format::csv ? write_csv(table, os) : write_json(table, os); });
}

ScanTable ingest_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return is_json ? read_json(f) : read_csv(f);
}

double PhysicalUnits::length() const {
  const double hbar = 1.054571817e-34;
  return std::sqrt(hbar / (mass * omega));
}

double PhysicalUnits::energy() const { return 1.054571817e-34 * omega; }

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  check_keys(j, "config", {"impurities", "scan", "solver", "physical"});
  Config c;
  double L = 1.0, U = 1.0;
  if (j.contains("physical")) {
    const auto& p = j["physical"];
    check_keys(p, "physical", {"mass", "omega"});
    PhysicalUnits u{get_number(p.at("mass"), "mass"), get_number(p.at("omega"), "omega")};
    if (!(u.mass > 0.0 && u.omega > 0.0)) throw ConfigError("physical mass and omega must be positive");
    c.physical = u;
    L = u.length();
    U = u.energy();
  }
  if (j.contains("impurities")) {
    if (!j["impurities"].is_array()) throw ConfigError("'impurities' must be an array");
    for (const auto& im : j["impurities"]) {
      check_keys(im, "impurity", {"position", "scattering_length"});
      const auto& p = im.at("position");
      if (!p.is_array() || p.size() != 3) throw ConfigError("impurity position must be [x, y, z]");
      Impurity imp;
      imp.position = Vec3(get_number(p[0], "position"), get_number(p[1], "position"), get_number(p[2], "position")) / L;
      imp.scattering_length = get_length(im.at("scattering_length"), "scattering_length") / L;
      c.system.impurities.push_back(imp);
    }
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "solver", {"points_per_unit", "tolerance", "pole_exclusion", "refine_dips"});
    if (s.contains("points_per_unit")) c.solver.points_per_unit = get_number(s["points_per_unit"], "points_per_unit");
    if (s.contains("tolerance")) c.solver.tolerance = get_number(s["tolerance"], "tolerance");
    if (s.contains("pole_exclusion")) c.solver.pole_exclusion = get_number(s["pole_exclusion"], "pole_exclusion");
    if (s.contains("refine_dips")) {
      if (!s["refine_dips"].is_boolean()) throw ConfigError("'refine_dips' must be a boolean");
      c.solver.refine_dips = s["refine_dips"].get<bool>();
    }
    c.solver.validate();
  }
  c.scan.solver = c.solver;
  if (j.contains("scan")) {
    const auto& s = j["scan"];
    check_keys(s, "scan", {"sweep", "lo", "hi", "steps", "scattering_length", "separation_2d", "dz", "e_min", "e_max",
                           "free_branches", "jump_tolerance", "threads"});
    if (s.contains("sweep")) {
      if (!s["sweep"].is_string()) throw ConfigError("'sweep' must be a string");
      c.scan.var = sweep_var_from_string(s["sweep"].get<std::string>());
    }
    // the swept quantity is a length for every sweep variable
    if (s.contains("lo")) c.scan.lo = get_number(s["lo"], "lo") / L;
    if (s.contains("hi")) c.scan.hi = get_number(s["hi"], "hi") / L;
    if (s.contains("steps")) {
      if (!s["steps"].is_number_integer()) throw ConfigError("'steps' must be an integer");
      c.scan.steps = s["steps"].get<int>();
    }
    if (s.contains("scattering_length"))
      c.scan.scattering_length = get_length(s["scattering_length"], "scattering_length") / L;
    if (s.contains("separation_2d")) c.scan.separation_2d = get_number(s["separation_2d"], "separation_2d") / L;
    if (s.contains("dz")) c.scan.dz = get_number(s["dz"], "dz") / L;
    if (s.contains("e_min")) c.scan.e_min = get_number(s["e_min"], "e_min") / U;
    if (s.contains("e_max")) c.scan.e_max = get_number(s["e_max"], "e_max") / U;
    if (s.contains("free_branches")) {
      if (!s["free_branches"].is_boolean()) throw ConfigError("'free_branches' must be a boolean");
      c.scan.free_branches = s["free_branches"].get<bool>();
    }
    if (s.contains("jump_tolerance")) c.scan.jump_tolerance = get_number(s["jump_tolerance"], "jump_tolerance") / U;
    if (s.contains("threads")) {
      if (!s["threads"].is_number_integer()) throw ConfigError("'threads' must be an integer");
      c.scan.threads = s["threads"].get<int>();
    }
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace trapimp
