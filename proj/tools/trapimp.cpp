#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>

#include "trapimp/errors.hpp"
#include "trapimp/freespace.hpp"
#include "trapimp/io.hpp"
#include "trapimp/scan.hpp"
#include "trapimp/variational.hpp"

using namespace trapimp;

namespace {

struct Common {
  std::string config;
  std::string format = "csv";
  std::string out = "-";
  std::optional<double> a, separation, dz, e_min, e_max, lo, hi;
  std::optional<int> steps, threads;
  std::optional<std::string> sweep;
  bool free_branches = false;
};

void add_geometry(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "JSON configuration file");
  sub->add_option("-f,--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("-o,--out", c.out, "output path ('-' for stdout)");
  sub->add_option("-a,--scattering-length", c.a, "scattering length a [l0]");
  sub->add_option("-s,--separation", c.separation, "impurity separation 2d [l0]");
  sub->add_option("--dz", c.dz, "displacement of the first impurity along z [l0]");
  sub->add_option("--emin", c.e_min, "lower end of the energy window [hbar omega]");
  sub->add_option("--emax", c.e_max, "upper end of the energy window [hbar omega]");
  sub->add_option("--threads", c.threads, "worker threads (0: all cores)");
}

void add_sweep(CLI::App* sub, Common& c) {
  sub->add_option("--sweep", c.sweep, "separation_2d, scattering_a or asym_dz");
  sub->add_option("--lo", c.lo, "sweep start");
  sub->add_option("--hi", c.hi, "sweep end");
  sub->add_option("--steps", c.steps, "number of sweep points");
}

// Config file first, then flags on top.
Config resolve(const Common& c) {
  Config cfg = c.config.empty() ? Config{} : load_config(c.config);
  ScanSpec& s = cfg.scan;
  if (c.a) s.scattering_length = *c.a;
  if (c.separation) s.separation_2d = *c.separation;
  if (c.dz) s.dz = *c.dz;
  if (c.e_min) s.e_min = *c.e_min;
  if (c.e_max) s.e_max = *c.e_max;
  if (c.lo) s.lo = *c.lo;
  if (c.hi) s.hi = *c.hi;
  if (c.steps) s.steps = *c.steps;
  if (c.threads) s.threads = *c.threads;
  if (c.sweep) s.var = sweep_var_from_string(*c.sweep);
  if (c.free_branches) s.free_branches = true;
  if (cfg.system.impurities.empty() || c.a || c.separation || c.dz)
    cfg.system = SystemSpec::pair(0.5 * s.separation_2d, s.scattering_length, s.dz);
  cfg.system.validate();
  return cfg;
}

template <class F>
void emit(const Common& c, F write) {
  if (c.out.empty() || c.out == "-") {
    write(std::cout);
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw IoError("cannot open '" + c.out + "' for writing");
  write(f);
  f.flush();
  if (!f) throw IoError("write to '" + c.out + "' failed");
}

void emit_table(const Common& c, const ScanTable& t) { export_table(t, format_from_string(c.format), c.out); }

ScanTable spectrum_table(const RootScan& rs) {
  ScanTable t;
  int idx = 0;
  for (const auto& s : rs.roots) {
    std::string flags;
    if (s.pole_adjacent) flags = "pole_adjacent";
    if (s.degenerate) flags += flags.empty() ? "degenerate" : "|degenerate";
    t.rows.push_back({"none", 0.0, idx++, s.energy, s.parity, flags});
  }
  for (const auto& u : rs.unaffected)
    t.rows.push_back({"none", 0.0, -1, u.energy, u.parity, "unaffected|multiplicity=" + std::to_string(u.multiplicity)});
  t.diagnostics = rs.diagnostics;
  return t;
}

int run(int argc, char** argv) {
  CLI::App app{"Trapped atom with static zero-range impurities"};
  app.require_subcommand(1);
  Common c;

  auto* spectrum = app.add_subcommand("spectrum", "eigenenergies of one configuration");
  add_geometry(spectrum, c);

  auto* scan = app.add_subcommand("scan", "tracked levels over a parameter sweep");
  add_geometry(scan, c);
  add_sweep(scan, c);
  scan->add_flag("--free", c.free_branches, "add the trap-free bound branches");

  auto* crossings = app.add_subcommand("crossings", "avoided crossings along a sweep");
  add_geometry(crossings, c);
  add_sweep(crossings, c);
  bool no_refine = false;
  crossings->add_flag("--no-refine", no_refine, "report grid minima without re-solving");

  auto* bound = app.add_subcommand("bound-states", "bound states of the pair without the trap");
  add_geometry(bound, c);
  add_sweep(bound, c);

  auto* variational = app.add_subcommand("variational", "two- or three-state variational levels");
  add_geometry(variational, c);
  add_sweep(variational, c);
  int basis_size = 3;
  bool single = false;
  variational->add_option("--basis", basis_size, "2 (bound orbitals) or 3 (plus trap ground state)")
      ->check(CLI::IsMember({2, 3}));
  variational->add_flag("--single", single, "evaluate the fixed geometry only");

  auto* wave = app.add_subcommand("wavefunction", "cut through a normalized eigenstate");
  add_geometry(wave, c);
  int level = 0;
  std::optional<double> near_energy;
  std::string cut_kind = "z", render = "pole_tamed";
  CutSpec cut;
  wave->add_option("--level", level, "index of the root in the energy window (ascending)");
  wave->add_option("--energy", near_energy, "pick the root closest to this energy");
  wave->add_option("--cut", cut_kind, "z (axis) or xz (plane)")->check(CLI::IsMember({"z", "xz"}));
  wave->add_option("--render", render, "raw or pole_tamed")->check(CLI::IsMember({"raw", "pole_tamed"}));
  wave->add_option("--from", cut.lo, "cut start [l0]");
  wave->add_option("--to", cut.hi, "cut end [l0]");
  wave->add_option("--points", cut.points, "samples per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const Config cfg = resolve(c);

  if (spectrum->parsed()) {
    Solver solver(cfg.system);
    emit_table(c, spectrum_table(solver.find_roots(cfg.scan.e_min, cfg.scan.e_max, cfg.solver)));
  } else if (scan->parsed()) {
    emit_table(c, run_scan(cfg.scan));
  } else if (crossings->parsed()) {
    const ScanTable t = run_scan(cfg.scan);
    CrossingOptions opt;
    opt.refine = !no_refine;
    const auto recs = detect_crossings(t, cfg.scan, opt);
    for (const auto& d : t.diagnostics) std::cerr << "warning: " << d << '\n';
    emit(c, [&](std::ostream& os) {
      c.format == "csv" ? write_crossings_csv(recs, to_string(cfg.scan.var), os)
                        : write_crossings_json(recs, to_string(cfg.scan.var), os);
    });
  } else if (bound->parsed()) {
    ScanSpec s = cfg.scan;
    if (s.var != SweepVar::separation_2d) throw ConfigError("bound-states sweeps the separation only");
    s.validate();
    std::vector<double> d;
    for (int i = 0; i < s.steps; ++i) d.push_back(0.5 * s.value(i));
    ScanTable t;
    for (const auto& br : bound_states_free(s.scattering_length, d))
      for (const auto& smp : br.samples)
        t.rows.push_back({"separation_2d", 2.0 * smp.half_separation, br.parity == Parity::even ? 0 : 1, smp.energy,
                          br.parity, "free"});
    std::stable_sort(t.rows.begin(), t.rows.end(), [](const ScanRow& x, const ScanRow& y) { return x.value < y.value; });
    for (Parity p : {Parity::even, Parity::odd})
      if (auto th = threshold_half_separation(s.scattering_length, p, 0.5 * s.lo, 0.5 * s.hi))
        t.diagnostics.push_back(std::string(to_string(p)) + " threshold at separation_2d=" + format_double(2.0 * *th));
    emit_table(c, t);
  } else if (variational->parsed()) {
    ScanTable t;
    auto one = [&](const std::string& var, double v, const SystemSpec& spec) {
      const auto basis = basis_size == 2 ? VariationalBasis::two_state(spec) : VariationalBasis::three_state(spec);
      const auto sol = solve_variational(basis, spec);
      for (int k = 0; k < sol.energies.size(); ++k)
        t.rows.push_back({var, v, k, sol.energies(k), sol.parities[k], "variational" + std::to_string(basis_size)});
      for (const auto& w : sol.warnings) t.diagnostics.push_back(var + "=" + format_double(v) + ": " + w);
    };
    if (single) {
      one("none", 0.0, cfg.system);
    } else {
      cfg.scan.validate();
      for (int i = 0; i < cfg.scan.steps; ++i) {
        const double v = cfg.scan.value(i);
        one(to_string(cfg.scan.var), v, cfg.scan.system(v));
      }
    }
    emit_table(c, t);
  } else if (wave->parsed()) {
    Solver solver(cfg.system);
    const RootScan rs = solver.find_roots(cfg.scan.e_min, cfg.scan.e_max, cfg.solver);
    if (rs.roots.empty()) throw SolverError("no roots in the energy window");
    std::size_t pick = 0;
    if (near_energy) {
      for (std::size_t i = 1; i < rs.roots.size(); ++i)
        if (std::abs(rs.roots[i].energy - *near_energy) < std::abs(rs.roots[pick].energy - *near_energy)) pick = i;
    } else {
      if (level < 0 || level >= static_cast<int>(rs.roots.size()))
        throw ConfigError("--level out of range: " + std::to_string(rs.roots.size()) + " roots in the window");
      pick = static_cast<std::size_t>(level);
    }
    cut.kind = cut_kind == "z" ? CutKind::z_axis : CutKind::xz_plane;
    cut.rendering = render == "raw" ? Rendering::raw : Rendering::pole_tamed;
    const SpectralState st = solver.normalize(solver.solve_state(rs.roots[pick]));
    std::cerr << "state: E=" << format_double(st.energy) << " parity=" << to_string(st.parity) << '\n';
    const auto samples = wavefunction_cut(solver, st, cut);
    emit(c, [&](std::ostream& os) { c.format == "csv" ? write_cut_csv(samples, os) : write_cut_json(samples, os); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  }
}
