#include "trapimp/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "trapimp/errors.hpp"
#include "trapimp/freespace.hpp"

namespace trapimp {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

struct PointResult {
  RootScan scan;
  std::vector<FreeBoundState> free;
  std::string error;
};

PointResult solve_point(const ScanSpec& scan, double v) {
  PointResult out;
  try {
    const SystemSpec spec = scan.system(v);
    spec.validate();
    Solver solver(spec);
    out.scan = solver.find_roots(scan.e_min, scan.e_max, scan.solver);
    if (scan.free_branches) out.free = free_bound_states(spec);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

// Order-preserving alignment of sorted track energies with sorted root
// energies; unmatched entries cost `gap` each.
std::vector<int> align(const std::vector<double>& tracks, const std::vector<double>& roots, double gap) {
  const std::size_t n = tracks.size(), m = roots.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, inf));
  std::vector<std::vector<int>> how(n + 1, std::vector<int>(m + 1, 0));
  c[0][0] = 0.0;
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= m; ++j) {
      if (i > 0 && c[i - 1][j] + gap < c[i][j]) {
        c[i][j] = c[i - 1][j] + gap;
        how[i][j] = 1;
      }
      if (j > 0 && c[i][j - 1] + gap < c[i][j]) {
        c[i][j] = c[i][j - 1] + gap;
        how[i][j] = 2;
      }
      if (i > 0 && j > 0) {
        const double d = std::abs(tracks[i - 1] - roots[j - 1]);
        if (d <= gap && c[i - 1][j - 1] + d < c[i][j]) {
          c[i][j] = c[i - 1][j - 1] + d;
          how[i][j] = 3;
        }
      }
    }
  std::vector<int> match(m, -1);  // root -> track position
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (how[i][j] == 3) {
      match[j - 1] = static_cast<int>(i - 1);
      --i;
      --j;
    } else if (how[i][j] == 1) {
      --i;
    } else {
      --j;
    }
  }
  return match;
}

template <class F>
double golden_min(F f, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

}  // namespace

const char* to_string(SweepVar v) {
  switch (v) {
    case SweepVar::separation_2d: return "separation_2d";
    case SweepVar::scattering_a: return "scattering_a";
    case SweepVar::asym_dz: return "asym_dz";
  }
  return "?";
}

SweepVar sweep_var_from_string(const std::string& s) {
  for (SweepVar v : {SweepVar::separation_2d, SweepVar::scattering_a, SweepVar::asym_dz})
    if (s == to_string(v)) return v;
  throw ConfigError("unknown sweep variable '" + s + "' (separation_2d, scattering_a, asym_dz)");
}

const char* to_string(Rendering r) { return r == Rendering::raw ? "raw" : "pole_tamed"; }
const char* to_string(CutKind k) { return k == CutKind::z_axis ? "z" : "xz"; }

void ScanSpec::validate() const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw ConfigError("scan range needs lo < hi");
  if (steps < 2) throw ConfigError("scan needs at least 2 steps");
  if (!(std::isfinite(e_min) && std::isfinite(e_max) && e_min < e_max))
    throw ConfigError("level window needs finite e_min < e_max");
  if (!(jump_tolerance > 0.0)) throw ConfigError("jump_tolerance must be positive");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  solver.validate();
  system(lo).validate();
  system(hi).validate();
}

double ScanSpec::value(int i) const { return lo + (hi - lo) * i / (steps - 1); }

SystemSpec ScanSpec::system(double v) const {
  double a = scattering_length, sep = separation_2d, z = dz;
  switch (var) {
    case SweepVar::separation_2d: sep = v; break;
    case SweepVar::scattering_a: a = v; break;
    case SweepVar::asym_dz: z = v; break;
  }
  return SystemSpec::pair(0.5 * sep, a, z);
}

bool ScanRow::has_flag(const std::string& f) const {
  std::size_t pos = 0;
  while (pos <= flags.size()) {
    const std::size_t end = std::min(flags.find('|', pos), flags.size());
    if (flags.compare(pos, end - pos, f) == 0 && end - pos == f.size()) return true;
    pos = end + 1;
  }
  return false;
}

ScanTable run_scan(const ScanSpec& scan) {
  scan.validate();
  const int n = scan.steps;
  std::vector<PointResult> results(n);
  int nthreads = scan.threads > 0 ? scan.threads : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp(nthreads, 1, n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) results[i] = solve_point(scan, scan.value(i));
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ScanTable table;
  const std::string var = to_string(scan.var);
  struct Track {
    int id;
    Parity parity;
    double energy;
  };
  std::vector<Track> alive;
  int next_id = 0;
  for (int i = 0; i < n; ++i) {
    const double v = scan.value(i);
    const PointResult& r = results[i];
    if (!r.error.empty()) {
      table.rows.push_back({var, v, -1, kNaN, Parity::none, "error:" + sanitize(r.error)});
      table.diagnostics.push_back(var + "=" + fmt(v) + ": " + r.error);
      alive.clear();
      continue;
    }
    for (const auto& d : r.scan.diagnostics) table.diagnostics.push_back(var + "=" + fmt(v) + ": " + d);

    std::vector<Track> next_alive;
    std::vector<ScanRow> rows;
    for (Parity p : {Parity::even, Parity::odd, Parity::none}) {
      std::vector<const SpectralState*> roots;
      for (const auto& s : r.scan.roots)
        if (s.parity == p) roots.push_back(&s);
      std::vector<Track> tracks;
      for (const auto& t : alive)
        if (t.parity == p) tracks.push_back(t);
      if (roots.empty() && tracks.empty()) continue;
      std::vector<double> te, re;
      for (const auto& t : tracks) te.push_back(t.energy);
      for (const auto* s : roots) re.push_back(s->energy);
      const auto match = align(te, re, 2.0 * scan.jump_tolerance);
      for (std::size_t j = 0; j < roots.size(); ++j) {
        const SpectralState& s = *roots[j];
        std::string flags;
        auto add = [&](const std::string& f) { flags += (flags.empty() ? "" : "|") + f; };
        int id;
        if (match[j] >= 0) {
          const Track& t = tracks[match[j]];
          id = t.id;
          if (std::abs(s.energy - t.energy) > scan.jump_tolerance) {
            add("jump");
            table.diagnostics.push_back(var + "=" + fmt(v) + ": level " + std::to_string(id) + " moved by " +
                                        fmt(s.energy - t.energy));
          }
        } else {
          id = next_id++;
        }
        if (s.pole_adjacent) add("pole_adjacent");
        if (s.degenerate) add("degenerate");
        next_alive.push_back({id, p, s.energy});
        rows.push_back({var, v, id, s.energy, p, flags});
      }
    }
    alive = next_alive;
    std::stable_sort(rows.begin(), rows.end(), [](const ScanRow& a, const ScanRow& b) { return a.energy < b.energy; });
    for (const auto& u : r.scan.unaffected)
      rows.push_back({var, v, -1, u.energy, u.parity, "unaffected|multiplicity=" + std::to_string(u.multiplicity)});
    for (const auto& f : r.free) rows.push_back({var, v, -1, f.energy, f.parity, "free"});
    table.rows.insert(table.rows.end(), rows.begin(), rows.end());
  }
  return table;
}

std::vector<LevelSeries> tracked_levels(const ScanTable& table) {
  std::map<int, LevelSeries> m;
  for (const auto& r : table.rows) {
    if (r.level_index < 0) continue;
    auto& s = m[r.level_index];
    s.level_index = r.level_index;
    s.parity = r.parity;
    s.values.push_back(r.value);
    s.energies.push_back(r.energy);
  }
  std::vector<LevelSeries> out;
  for (auto& [id, s] : m) out.push_back(std::move(s));
  return out;
}

std::vector<CrossingRecord> detect_crossings(const ScanTable& table, const ScanSpec& scan, const CrossingOptions& opt) {
  // Per sweep point: energy-adjacent pairs of tracked levels within a parity.
  struct Pair {
    double lo_e, hi_e;
  };
  std::vector<double> values;
  std::vector<std::map<std::pair<int, int>, Pair>> pairs;
  std::map<int, Parity> parity_of;
  {
    std::size_t k = 0;
    while (k < table.rows.size()) {
      const double v = table.rows[k].value;
      std::map<Parity, std::vector<const ScanRow*>> by_parity;
      for (; k < table.rows.size() && table.rows[k].value == v; ++k)
        if (table.rows[k].level_index >= 0) by_parity[table.rows[k].parity].push_back(&table.rows[k]);
      std::map<std::pair<int, int>, Pair> pm;
      for (auto& [p, rows] : by_parity) {
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->energy < b->energy; });
        for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
          pm[{rows[j]->level_index, rows[j + 1]->level_index}] = {rows[j]->energy, rows[j + 1]->energy};
          parity_of[rows[j]->level_index] = p;
          parity_of[rows[j + 1]->level_index] = p;
        }
      }
      values.push_back(v);
      pairs.push_back(std::move(pm));
    }
  }

  std::vector<CrossingRecord> out;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    for (const auto& [key, here] : pairs[i]) {
      auto prev = pairs[i - 1].find(key), next = pairs[i + 1].find(key);
      if (prev == pairs[i - 1].end() || next == pairs[i + 1].end()) continue;
      const double g = here.hi_e - here.lo_e;
      const double gp = prev->second.hi_e - prev->second.lo_e, gn = next->second.hi_e - next->second.lo_e;
      const double margin = opt.prominence * g + 1e-12;
      if (!(gp > g + margin && gn > g + margin)) continue;

      CrossingRecord rec;
      rec.value = values[i];
      rec.gap = g;
      rec.lower_level = key.first;
      rec.upper_level = key.second;
      rec.lower_parity = rec.upper_parity = parity_of[key.first];
      rec.lower_energy = here.lo_e;
      rec.upper_energy = here.hi_e;

      if (opt.refine) {
        const double v0 = values[i - 1], v1 = values[i], v2 = values[i + 1];
        const double m0 = 0.5 * (prev->second.lo_e + prev->second.hi_e), m1 = 0.5 * (here.lo_e + here.hi_e),
                     m2 = 0.5 * (next->second.lo_e + next->second.hi_e);
        const double e_lo = std::min({prev->second.lo_e, here.lo_e, next->second.lo_e});
        const double e_hi = std::max({prev->second.hi_e, here.hi_e, next->second.hi_e});
        const double pad = 0.5 * (e_hi - e_lo) + 0.1;
        const Parity p = rec.lower_parity;
        auto probe = [&](double v, CrossingRecord* fill) {
          const double mid = v <= v1 ? m0 + (m1 - m0) * (v - v0) / (v1 - v0) : m1 + (m2 - m1) * (v - v1) / (v2 - v1);
          Solver solver(scan.system(v));
          const RootScan rs = solver.find_roots(e_lo - pad, e_hi + pad, scan.solver);
          std::vector<double> e;
          for (const auto& s : rs.roots)
            if (s.parity == p) e.push_back(s.energy);
          double best = std::numeric_limits<double>::infinity(), gap = best;
          for (std::size_t j = 0; j + 1 < e.size(); ++j) {
            const double dm = std::abs(0.5 * (e[j] + e[j + 1]) - mid);
            if (dm < best) {
              best = dm;
              gap = e[j + 1] - e[j];
              if (fill) {
                fill->lower_energy = e[j];
                fill->upper_energy = e[j + 1];
              }
            }
          }
          return gap;
        };
        try {
          const double vm = golden_min([&](double v) { return probe(v, nullptr); }, v0, v2, opt.value_tolerance);
          CrossingRecord refined = rec;
          const double gm = probe(vm, &refined);
          if (gm <= g) {
            refined.value = vm;
            refined.gap = gm;
            rec = refined;
          }
        } catch (const Error&) {
          // keep the grid estimate
        }
      }
      out.push_back(rec);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.value != b.value ? a.value < b.value : a.lower_energy < b.lower_energy;
  });
  return out;
}

std::vector<CutSample> wavefunction_cut(const Solver& solver, const SpectralState& state_in, const CutSpec& cut) {
  if (!(cut.lo < cut.hi) || cut.points < 2) throw ConfigError("cut needs lo < hi and at least 2 points");
  if (!(cut.exclusion > 0.0)) throw ConfigError("cut exclusion must be positive");
  const SpectralState state = state_in.norm > 0.0 ? state_in : solver.normalize(state_in);
  const auto pos = solver.spec().positions();

  auto sample = [&](double x, double z) {
    const Vec3 r(x, 0.0, z);
    CutSample s{x, z, 0.0, false};
    int near = -1;
    for (std::size_t i = 0; i < pos.size(); ++i)
      if ((r - pos[i]).norm() < cut.exclusion) near = static_cast<int>(i);
    if (cut.rendering == Rendering::raw) {
      if (near >= 0) {
        s.value = kNaN;
        s.refused = true;
      } else {
        s.value = solver.wavefunction(state, r);
      }
      return s;
    }
    auto tamed = [&](const Vec3& q) {
      double f = 1.0;
      for (const auto& d : pos) f *= (q - d).norm();
      return f * solver.wavefunction(state, q);
    };
    if (near < 0) {
      s.value = tamed(r);
    } else {
      // two-sided limit along the cut direction(s)
      const Vec3 c = pos[near];
      const double h = cut.exclusion;
      double acc = tamed(c + h * Vec3::UnitZ()) + tamed(c - h * Vec3::UnitZ());
      int cnt = 2;
      if (cut.kind == CutKind::xz_plane) {
        acc += tamed(c + h * Vec3::UnitX()) + tamed(c - h * Vec3::UnitX());
        cnt += 2;
      }
      s.value = acc / cnt;
    }
    return s;
  };

  std::vector<CutSample> out;
  auto grid = [&](int i) { return cut.lo + (cut.hi - cut.lo) * i / (cut.points - 1); };
  if (cut.kind == CutKind::z_axis) {
    for (int i = 0; i < cut.points; ++i) out.push_back(sample(0.0, grid(i)));
  } else {
    for (int i = 0; i < cut.points; ++i)
      for (int j = 0; j < cut.points; ++j) out.push_back(sample(grid(i), grid(j)));
  }
  return out;
}

}  // namespace trapimp
