#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trapimp/scan.hpp"

// Tables as CSV (header sweep_var,value,level_index,energy,parity,flags) or
// JSON with the same fields and a version number. Floats use 17 significant
// digits, so ingesting an export reproduces it bit for bit.

namespace trapimp {

constexpr int kSchemaVersion = 1;

enum class Format { csv, json };
Format format_from_string(const std::string& s);

std::string format_double(double v);

void write_csv(const ScanTable& table, std::ostream& os);
void write_json(const ScanTable& table, std::ostream& os);
ScanTable read_csv(std::istream& is);
ScanTable read_json(std::istream& is);

void write_crossings_csv(const std::vector<CrossingRecord>& recs, const std::string& sweep_var, std::ostream& os);
void write_crossings_json(const std::vector<CrossingRecord>& recs, const std::string& sweep_var, std::ostream& os);

void write_cut_csv(const std::vector<CutSample>& cut, std::ostream& os);
void write_cut_json(const std::vector<CutSample>& cut, std::ostream& os);

/// Writes to `path`, or to stdout when path is empty or "-". IoError on failure.
void export_table(const ScanTable& table, Format f, const std::string& path);
ScanTable ingest_table(const std::string& path);

Parity parity_from_string(const std::string& s);

/// Physical units: lengths in metres and energies in joules in the config are
/// converted to l0 = √(ħ/mω) and ħω on load.
struct PhysicalUnits {
  double mass = 0.0;   ///< kg
  double omega = 0.0;  ///< rad/s
  double length() const;
  double energy() const;
};

struct Config {
  SystemSpec system;
  ScanSpec scan;
  RootOptions solver;
  std::optional<PhysicalUnits> physical;
};

/// Parses the JSON config; unknown keys and malformed values raise ConfigError.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

}  // namespace trapimp
