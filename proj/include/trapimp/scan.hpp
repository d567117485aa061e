#pragma once

#include <string>
#include <vector>

#include "trapimp/solver.hpp"

// Parameter sweeps over a pair of impurities at (0,0,d+dz) and (0,0,-d),
// level tracking, avoided-crossing detection and wave-function cuts.

namespace trapimp {

enum class SweepVar { separation_2d, scattering_a, asym_dz };

const char* to_string(SweepVar v);
SweepVar sweep_var_from_string(const std::string& s);  ///< ConfigError on unknown names

struct ScanSpec {
  SweepVar var = SweepVar::separation_2d;
  double lo = 1.0;
  double hi = 8.0;
  int steps = 71;
  /// Fixed parameters; the swept one is overridden per point.
  double scattering_length = 0.4;
  double separation_2d = 6.0;
  double dz = 0.0;
  double e_min = -1.0;
  double e_max = 5.0;
  bool free_branches = false;
  /// Tracked levels that move by more than this between adjacent points are flagged.
  double jump_tolerance = 0.5;
  /// 0 uses the hardware concurrency.
  int threads = 0;
  RootOptions solver;

  void validate() const;
  double value(int i) const;
  SystemSpec system(double value) const;
};

struct ScanRow {
  std::string sweep_var;
  double value = 0.0;
  /// Tracked level index; -1 for rows that are not tracked (free-space
  /// branches, unaffected oscillator levels, failed points).
  int level_index = -1;
  double energy = 0.0;
  Parity parity = Parity::none;
  /// '|'-separated tags: pole_adjacent, degenerate, unaffected, free, jump, error:<msg>.
  std::string flags;

  bool has_flag(const std::string& f) const;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  std::vector<std::string> diagnostics;
};

ScanTable run_scan(const ScanSpec& scan);

/// Tracked levels as (value, energy) series, indexed by level_index.
struct LevelSeries {
  int level_index = -1;
  Parity parity = Parity::none;
  std::vector<double> values;
  std::vector<double> energies;
};
std::vector<LevelSeries> tracked_levels(const ScanTable& table);

struct CrossingRecord {
  double value = 0.0;  ///< sweep value at the minimum gap
  double gap = 0.0;
  int lower_level = -1;
  int upper_level = -1;
  Parity lower_parity = Parity::none;
  Parity upper_parity = Parity::none;
  double lower_energy = 0.0;
  double upper_energy = 0.0;
};

struct CrossingOptions {
  bool refine = true;
  /// Golden-section tolerance on the sweep variable.
  double value_tolerance = 1e-4;
  /// A minimum must lie below both neighbours by this fraction of the gap.
  double prominence = 1e-4;
};

/// Local minima of gaps between energy-adjacent tracked levels of the same
/// parity, refined by re-solving between the neighbouring sweep points.
std::vector<CrossingRecord> detect_crossings(const ScanTable& table, const ScanSpec& scan,
                                             const CrossingOptions& opt = {});

enum class Rendering { raw, pole_tamed };
enum class CutKind { z_axis, xz_plane };

const char* to_string(Rendering r);
const char* to_string(CutKind k);

struct CutSpec {
  CutKind kind = CutKind::z_axis;
  Rendering rendering = Rendering::pole_tamed;
  double lo = -6.0, hi = 6.0;  ///< z range (and x range for plane cuts)
  int points = 241;
  /// Raw samples closer than this to an impurity are refused.
  double exclusion = 1e-6;
};

struct CutSample {
  double x = 0.0, z = 0.0;
  double value = 0.0;  ///< NaN for refused samples
  bool refused = false;
};

/// Samples of the normalized state. pole_tamed multiplies by Π_i|r - d_i|
/// (|z² - d²| on the axis of a symmetric pair), finite at the impurities.
std::vector<CutSample> wavefunction_cut(const Solver& solver, const SpectralState& state, const CutSpec& cut);

}  // namespace trapimp
