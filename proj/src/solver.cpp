#include "trapimp/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "trapimp/errors.hpp"
#include "trapimp/oscillator.hpp"

namespace trapimp {

namespace {

// Step of the symmetric differences used for the regular part at a level and
// for ∂_E G̃; neighbouring levels are at least 1/2 away.
constexpr double kLevelStep = 1e-3;

double sector_determinant(const Eigen::MatrixXd& reduced, const Eigen::MatrixXd& basis) {
  if (basis.cols() == 0) return 1.0;
  const Eigen::MatrixXd m = basis.transpose() * reduced * basis;
  return m.cols() <= 4 ? m.determinant() : m.partialPivLu().determinant();
}

int count_shell_states(int shell, int parity) {
  // states (n1, n2, n3) of the shell with (-1)^n3 = parity, parity = ±1
  int count = 0;
  for (int n3 = 0; n3 <= shell; ++n3)
    if ((n3 % 2 == 0) == (parity > 0)) count += shell - n3 + 1;
  return count;
}

Eigen::VectorXd fix_sign(Eigen::VectorXd v) {
  const double n = v.norm();
  if (n == 0.0) return v;
  v /= n;
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(imax)) * (1.0 + 1e-12)) imax = i;
  if (v(imax) < 0) v = -v;
  return v;
}

}  // namespace

void RootOptions::validate() const {
  if (!(points_per_unit >= 1.0)) throw ConfigError("points_per_unit must be >= 1");
  if (!(tolerance > 0.0)) throw ConfigError("root tolerance must be positive");
  if (!(pole_exclusion > 0.0 && pole_exclusion < 0.1)) throw ConfigError("pole_exclusion must be in (0, 0.1)");
  if (!(rank_tol >= 0.0)) throw ConfigError("rank_tol must be nonnegative");
  if (!(degeneracy_tol >= 0.0)) throw ConfigError("degeneracy_tol must be nonnegative");
}

Solver::Solver(SystemSpec spec, const SpecFnAccuracy& acc) : spec_(std::move(spec)), acc_(acc) {
  spec_.validate();
  acc_.validate();
  sectors_ = parity_sectors(spec_);
  pos_ = spec_.positions();
  inv_gamma_ = spec_.inverse_couplings();
}

const Eigen::MatrixXd& Solver::shell_matrix(int shell) const {
  auto it = shell_cache_.find(shell);
  if (it == shell_cache_.end()) it = shell_cache_.emplace(shell, shell_values(shell, pos_)).first;
  return it->second;
}

Eigen::MatrixXd Solver::green_matrix_at(const GreenContext& ctx) const {
  const int n = static_cast<int>(pos_.size());
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = ctx.reg_diag(pos_[i]);
    for (int j = 0; j < i; ++j) g(i, j) = g(j, i) = ctx(pos_[i], pos_[j]);
  }
  return g;
}

Eigen::MatrixXd Solver::regular_green_matrix(int shell) const {
  auto it = regular_cache_.find(shell);
  if (it != regular_cache_.end()) return it->second;
  const double e = shell_energy(shell);
  auto average = [&](double h) {
    return Eigen::MatrixXd(0.5 * (green_matrix_at(GreenContext(e + h, acc_)) +
                                  green_matrix_at(GreenContext(e - h, acc_))));
  };
  Eigen::MatrixXd r = (4.0 * average(0.5 * kLevelStep) - average(kLevelStep)) / 3.0;
  regular_cache_.emplace(shell, r);
  return r;
}

Eigen::MatrixXd Solver::green_matrix(double energy) const {
  if (is_shell_energy(energy)) return regular_green_matrix(nearest_shell(energy));
  return green_matrix_at(GreenContext(energy, acc_));
}

Eigen::MatrixXd Solver::reduced_matrix(double energy) const {
  Eigen::MatrixXd m = green_matrix(energy);
  m.diagonal() -= inv_gamma_;
  return m;
}

Eigen::MatrixXd Solver::dmatrix(double energy) const {
  if ((inv_gamma_.array() == 0.0).any())
    throw ConfigError("D(E) needs finite couplings; use the reduced matrix at unitarity");
  const Eigen::VectorXd gamma = inv_gamma_.cwiseInverse();
  return reduced_matrix(energy) * gamma.asDiagonal();
}

double Solver::det(double energy) const { return dmatrix(energy).determinant(); }

double Solver::det_reduced(double energy) const { return reduced_matrix(energy).determinant(); }

double Solver::sector_det(double energy, Parity p) const {
  return sector_determinant(reduced_matrix(energy), sectors_.basis(p));
}

std::vector<Parity> Solver::parities() const {
  if (!sectors_.symmetric) return {Parity::none};
  if (sectors_.odd.cols() == 0) return {Parity::even};
  return {Parity::even, Parity::odd};
}

int Solver::sector_rank(int shell, Parity p, double tol) const {
  const Eigen::MatrixXd& b = sectors_.basis(p);
  if (b.cols() == 0) return 0;
  const Eigen::MatrixXd vs = b.transpose() * shell_matrix(shell);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(vs);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

std::vector<UnaffectedLevel> Solver::unaffected_levels(double e_min, double e_max,
                                                       const RootOptions& opt) const {
  std::vector<UnaffectedLevel> out;
  const int n_lo = std::max(0, static_cast<int>(std::ceil(e_min - 1.5)));
  for (int n = n_lo; shell_energy(n) <= e_max; ++n) {
    for (Parity p : parities()) {
      const int states = p == Parity::none ? shell_degeneracy(n)
                                           : count_shell_states(n, p == Parity::even ? 1 : -1);
      const int m = states - sector_rank(n, p, opt.rank_tol);
      if (m > 0) out.push_back({shell_energy(n), m, p});
    }
  }
  return out;
}

RootScan Solver::find_roots(double e_min, double e_max, const RootOptions& opt) const {
  opt.validate();
  if (!(std::isfinite(e_min) && std::isfinite(e_max) && e_min < e_max))
    throw ConfigError("find_roots: need a finite window e_min < e_max");
  RootScan scan;
  const std::vector<Parity> sectors = parities();
  const double delta = opt.pole_exclusion;

  // Levels inside the window and the sectors in which each one is a pole.
  struct Level {
    int shell;
    double energy;
    std::vector<bool> active;
  };
  std::vector<Level> levels;
  const int n_lo = std::max(0, static_cast<int>(std::ceil(e_min - 1.5)));
  for (int n = n_lo; shell_energy(n) <= e_max; ++n) {
    Level lv{n, shell_energy(n), {}};
    bool any = false;
    for (Parity p : sectors) {
      const bool a = sector_rank(n, p, opt.rank_tol) > 0;
      lv.active.push_back(a);
      any |= a;
    }
    if (any) levels.push_back(lv);
  }

  // Grid over the window with the exclusion windows of every active level
  // removed; `seg` records which gap between levels a point lies in.
  std::vector<double> grid;
  std::vector<int> seg;
  for (std::size_t s = 0; s <= levels.size(); ++s) {
    const double lo = s == 0 ? e_min : std::max(e_min, levels[s - 1].energy + delta);
    const double hi = s == levels.size() ? e_max : std::min(e_max, levels[s].energy - delta);
    if (!(hi > lo)) continue;
    const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) * opt.points_per_unit)) + 1);
    for (int i = 0; i < n; ++i) {
      grid.push_back(i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1));
      seg.push_back(static_cast<int>(s));
    }
  }
  std::vector<Eigen::MatrixXd> mats(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) mats[i] = reduced_matrix(grid[i]);

  for (std::size_t si = 0; si < sectors.size(); ++si) {
    const Parity p = sectors[si];
    const Eigen::MatrixXd& basis = sectors_.basis(p);
    if (basis.cols() == 0) continue;
    auto f = [&](double e) { return sector_determinant(reduced_matrix(e), basis); };
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = sector_determinant(mats[i], basis);
    // Consecutive points are comparable unless a level that is a pole of this
    // sector separates them.
    auto comparable = [&](std::size_t i, std::size_t j) {
      for (int s = seg[i]; s < seg[j]; ++s)
        if (levels[s].active[si]) return false;
      return true;
    };

    std::vector<SpectralState> found;
    auto bisect = [&](double a, double b, double fa, double fb) {
      const double scale = std::max(std::abs(fa), std::abs(fb));
      while (b - a > opt.tolerance) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = f(m);
        if (fm == 0.0) {
          a = b = m;
          fa = fb = 0.0;
          break;
        }
        if ((fm < 0) == (fa < 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
          fb = fm;
        }
      }
      if (std::min(std::abs(fa), std::abs(fb)) > scale) {
        std::ostringstream os;
        os << "sign change in [" << a << ", " << b << "] (" << to_string(p)
           << ") is a pole, not a root; discarded";
        scan.diagnostics.push_back(os.str());
        return;
      }
      SpectralState st;
      st.energy = std::abs(fa) <= std::abs(fb) ? a : b;
      st.parity = p;
      found.push_back(st);
    };

    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      if (!comparable(i, i + 1)) continue;
      if (vals[i] == 0.0) {
        SpectralState st;
        st.energy = grid[i];
        st.parity = p;
        found.push_back(st);
        continue;
      }
      if ((vals[i] < 0) != (vals[i + 1] < 0) && vals[i + 1] != 0.0) bisect(grid[i], grid[i + 1], vals[i], vals[i + 1]);
    }
    if (!grid.empty() && vals.back() == 0.0) {
      SpectralState st;
      st.energy = grid.back();
      st.parity = p;
      found.push_back(st);
    }

    if (opt.refine_dips) {
      for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (!comparable(i - 1, i) || !comparable(i, i + 1)) continue;
        const double l = vals[i - 1], c = vals[i], r = vals[i + 1];
        if ((l < 0) != (c < 0) || (c < 0) != (r < 0) || c == 0.0) continue;
        if (!(std::abs(c) < std::abs(l) && std::abs(c) < std::abs(r))) continue;
        // Golden-section search for the minimum of |f| between the neighbours.
        const double sgn = c < 0 ? -1.0 : 1.0;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = grid[i - 1], b = grid[i + 1];
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = sgn * f(x1), f2 = sgn * f(x2);
        bool crossed = f1 <= 0 || f2 <= 0;
        double xm = f1 < f2 ? x1 : x2, fmin = std::min(f1, f2);
        while (!crossed && b - a > opt.tolerance) {
          if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = sgn * f(x1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = sgn * f(x2);
          }
          if (f1 < fmin) fmin = f1, xm = x1;
          if (f2 < fmin) fmin = f2, xm = x2;
          crossed = fmin <= 0;
        }
        if (!crossed) continue;
        const double fx = sgn * fmin;
        if (fx == 0.0) {
          SpectralState st;
          st.energy = xm;
          st.parity = p;
          found.push_back(st);
          continue;
        }
        bisect(grid[i - 1], xm, l, fx);
        bisect(xm, grid[i + 1], fx, r);
      }
    }

    // Roots inside the exclusion window of a pole: to first order in ε = E - E_N,
    // D̃ = V Vᵀ/ε + B, singular when -ε is a nonzero eigenvalue of Vᵀ B⁻¹ V.
    for (const Level& lv : levels) {
      if (!lv.active[si]) continue;
      Eigen::MatrixXd breg = regular_green_matrix(lv.shell);
      breg.diagonal() -= inv_gamma_;
      const Eigen::MatrixXd bs = basis.transpose() * breg * basis;
      const Eigen::MatrixXd vs = basis.transpose() * shell_matrix(lv.shell);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(bs);
      if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "regular part singular at level " << lv.energy << " (" << to_string(p)
           << "); roots next to this pole were not resolved";
        scan.diagnostics.push_back(os.str());
        continue;
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(vs, Eigen::ComputeThinU | Eigen::ComputeThinV);
      int rank = 0;
      while (rank < svd.singularValues().size() && svd.singularValues()(rank) > opt.rank_tol) ++rank;
      const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
      const Eigen::VectorXd sig = svd.singularValues().head(rank);
      Eigen::MatrixXd k = sig.asDiagonal() * (u.transpose() * lu.solve(u)) * sig.asDiagonal();
      k = 0.5 * (k + k.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
      for (int j = 0; j < rank; ++j) {
        const double eps = -es.eigenvalues()(j);
        if (std::abs(eps) > delta) continue;
        const double e = lv.energy + eps;
        if (e < e_min || e > e_max) continue;
        const Eigen::VectorXd y = svd.matrixV().leftCols(rank) * es.eigenvectors().col(j);
        SpectralState st;
        st.energy = e;
        st.parity = p;
        st.pole_adjacent = true;
        st.shell = lv.shell;
        st.pole_offset = eps;
        st.shell_coeffs = fix_sign(y);
        st.amplitudes = fix_sign(basis * lu.solve(vs * y));
        st.k = st.amplitudes.cwiseProduct(inv_gamma_);
        found.push_back(st);
      }
    }

    std::sort(found.begin(), found.end(),
              [](const SpectralState& a, const SpectralState& b) { return a.energy < b.energy; });
    for (const auto& st : found) {
      auto& roots = scan.roots;
      bool dup = false;
      for (auto& prev : roots)
        if (prev.parity == st.parity && std::abs(prev.energy - st.energy) <= 2.0 * opt.tolerance) {
          if (st.pole_adjacent) prev = st;
          dup = true;
        }
      if (!dup) roots.push_back(st);
    }
  }

  std::sort(scan.roots.begin(), scan.roots.end(),
            [](const SpectralState& a, const SpectralState& b) { return a.energy < b.energy; });
  for (std::size_t i = 0; i + 1 < scan.roots.size(); ++i)
    if (scan.roots[i + 1].energy - scan.roots[i].energy < opt.degeneracy_tol)
      scan.roots[i].degenerate = scan.roots[i + 1].degenerate = true;
  scan.unaffected = unaffected_levels(e_min, e_max, opt);
  return scan;
}

SpectralState Solver::solve_state(double energy, Parity hint) const {
  std::vector<Parity> candidates = parities();
  if (hint != Parity::none && sectors_.symmetric) candidates = {hint};
  const Eigen::MatrixXd d = reduced_matrix(energy);
  double best = std::numeric_limits<double>::infinity();
  SpectralState st;
  st.energy = energy;
  for (Parity p : candidates) {
    const Eigen::MatrixXd& basis = sectors_.basis(p);
    if (basis.cols() == 0) continue;
    const Eigen::MatrixXd m = basis.transpose() * d * basis;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index last = sv.size() - 1;
    const double smax = sv(0);
    const double rel = smax > 0 ? sv(last) / smax : 0.0;
    if (rel < best) {
      best = rel;
      if (last > 0 && sv(last - 1) <= 1e-7 * smax) {
        std::ostringstream os;
        os << "two-dimensional null space at E = " << energy << ": directions "
           << (basis * svd.matrixV().col(last)).transpose() << " and "
           << (basis * svd.matrixV().col(last - 1)).transpose();
        throw SolverError(os.str());
      }
      st.parity = p;
      st.amplitudes = fix_sign(basis * svd.matrixV().col(last));
    }
  }
  if (st.amplitudes.size() == 0) throw SolverError("solve_state: empty amplitude space");
  st.k = st.amplitudes.cwiseProduct(inv_gamma_);
  return st;
}

SpectralState Solver::solve_state(const SpectralState& root) const {
  if (root.pole_adjacent) {
    SpectralState st = root;
    st.k = st.amplitudes.cwiseProduct(inv_gamma_);
    return st;
  }
  SpectralState st = solve_state(root.energy, root.parity);
  st.degenerate = root.degenerate;
  return st;
}

Eigen::MatrixXd Solver::green_derivative(double energy) const {
  // The nearest level's pole is differentiated analytically; what is left is
  // analytic within 1/2 of E and handled by a five-point difference.
  const int n = nearest_shell(energy);
  const double en = shell_energy(n);
  const Eigen::MatrixXd& v = shell_matrix(n);
  const Eigen::MatrixXd pole = v * v.transpose();
  double h = kLevelStep;
  for (int tries = 0; tries < 20; ++tries) {
    bool clear = true;
    for (int k : {-2, -1, 1, 2})
      if (std::abs(energy + k * h - en) < 1e-6) clear = false;
    if (clear) break;
    h *= 1.37;
  }
  auto rest = [&](double e) { return Eigen::MatrixXd(green_matrix(e) - pole / (e - en)); };
  Eigen::MatrixXd d = (8.0 * (rest(energy + h) - rest(energy - h)) - (rest(energy + 2 * h) - rest(energy - 2 * h))) /
                      (12.0 * h);
  const double eps = energy - en;
  if (eps != 0.0) d -= pole / (eps * eps);
  return d;
}

double Solver::norm_integral(const SpectralState& state) const {
  if (state.pole_adjacent) return state.shell_coeffs.squaredNorm();
  const Eigen::VectorXd& c = state.amplitudes;
  if (c.size() != static_cast<Eigen::Index>(pos_.size())) throw SolverError("state has no amplitudes");
  return -c.dot(green_derivative(state.energy) * c);
}

SpectralState Solver::normalize(const SpectralState& state) const {
  SpectralState st = state.amplitudes.size() ? state : solve_state(state);
  if (st.pole_adjacent) {
    st.shell_coeffs = fix_sign(st.shell_coeffs);
    st.norm = 1.0;
    return st;
  }
  st.amplitudes = fix_sign(st.amplitudes);
  st.k = st.amplitudes.cwiseProduct(inv_gamma_);
  const double integral = norm_integral(st);
  if (!(integral > 0.0) || !std::isfinite(integral)) {
    std::ostringstream os;
    os << "normalization integral " << integral << " at E = " << st.energy << " is not positive";
    throw SolverError(os.str());
  }
  st.norm = 1.0 / std::sqrt(integral);
  return st;
}

double Solver::wavefunction(const SpectralState& state, const Vec3& r) const {
  const double scale = state.norm > 0 ? state.norm : 1.0;
  if (state.pole_adjacent) {
    const Eigen::MatrixXd phi = shell_values(state.shell, {r});
    return scale * phi.row(0).dot(state.shell_coeffs);
  }
  for (std::size_t i = 0; i < pos_.size(); ++i)
    if ((r - pos_[i]).norm() <= 1e-12 * std::max(1.0, pos_[i].norm()))
      throw PoleError("wavefunction diverges at an impurity", state.energy);
  const Eigen::VectorXd& c = state.amplitudes;
  auto sum_at = [&](const GreenContext& ctx) {
    double s = 0.0;
    for (std::size_t i = 0; i < pos_.size(); ++i) s += c(i) * ctx(pos_[i], r);
    return s;
  };
  double psi;
  if (is_shell_energy(state.energy)) {
    const double e = state.energy;
    auto average = [&](double h) {
      return 0.5 * (sum_at(GreenContext(e + h, acc_)) + sum_at(GreenContext(e - h, acc_)));
    };
    psi = (4.0 * average(0.5 * kLevelStep) - average(kLevelStep)) / 3.0;
  } else {
    psi = sum_at(GreenContext(state.energy, acc_));
  }
  return scale * psi;
}

Eigen::MatrixXd build_dmatrix(const SystemSpec& spec, double energy) {
  if (is_shell_energy(energy)) throw PoleError("build_dmatrix: E is an oscillator level", energy);
  return Solver(spec).dmatrix(energy);
}

double det_d(const SystemSpec& spec, double energy) { return build_dmatrix(spec, energy).determinant(); }

RootScan find_roots(const SystemSpec& spec, double e_min, double e_max, const RootOptions& opt) {
  return Solver(spec).find_roots(e_min, e_max, opt);
}

SpectralState solve_state(const SystemSpec& spec, double energy) { return Solver(spec).solve_state(energy); }

SpectralState normalize(const SpectralState& state, const SystemSpec& spec) {
  return Solver(spec).normalize(state);
}

double wavefunction(const SpectralState& state, const SystemSpec& spec, const Vec3& r) {
  return Solver(spec).wavefunction(state, r);
}

}  // namespace trapimp
