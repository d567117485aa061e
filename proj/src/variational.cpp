#include "trapimp/variational.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "trapimp/errors.hpp"
#include "trapimp/quadrature.hpp"

namespace trapimp {

namespace {

const double kPhi0Norm = std::pow(M_PI, -0.75);

double bound_norm(double a) { return 1.0 / std::sqrt(2.0 * M_PI * a); }

// ∫_{-1}^{1} g(|r|²/2) dcosθ for |r|² = D² + ρ² + 2Dρ cosθ, with g = e^{-w}
// (moment 0) or w e^{-w} (moment 1).
double angular(double D, double rho, int moment) {
  const double w_lo = 0.5 * (D - rho) * (D - rho);
  const double delta = 2.0 * D * rho;  // w_hi - w_lo
  if (delta < 1e-8) {
    const double w = 0.5 * rho * rho;
    return 2.0 * (moment == 0 ? 1.0 : w) * std::exp(-w);
  }
  const double em = -std::expm1(-delta);  // 1 - e^{-Δ}
  if (moment == 0) return std::exp(-w_lo) * em / (0.5 * delta);
  return std::exp(-w_lo) * ((w_lo + 1.0) * em - delta * std::exp(-delta)) / (0.5 * delta);
}

// ⟨φ0| f |ψ_b⟩ with f = 1 (moment 0) or r²/2 (moment 1)
double bound_trap(const Orbital& b, int moment) {
  const double D = b.center.norm(), mu = 1.0 / b.scattering_length;
  auto f = [&](double rho) { return rho * std::exp(-mu * rho) * angular(D, rho, moment); };
  const double hi = D + 40.0;
  double v = integrate(f, 0.0, D > 0 ? D : 1.0, 1e-15, 1e-13).value;
  v += integrate(f, D > 0 ? D : 1.0, hi, 1e-15, 1e-13).value;
  return kPhi0Norm * bound_norm(b.scattering_length) * 2.0 * M_PI * v;
}

// Bound-bound elements in prolate coordinates about the two centres:
// ρ1 = R(λ+ν)/2, ρ2 = R(λ-ν)/2, d³r/(ρ1ρ2) = (R/2) dλ dν dφ.
double bound_bound_numeric(const Orbital& a, const Orbital& b, int moment) {
  const double R = (a.center - b.center).norm();
  const double m1 = 1.0 / a.scattering_length, m2 = 1.0 / b.scattering_length;
  const Vec3 mid = 0.5 * (a.center + b.center);
  const Vec3 e = (b.center - a.center) / R;
  const double m2n = mid.squaredNorm(), max = mid.dot(e);
  const double h = 0.5 * R;
  auto inner = [&](double lam) {
    auto g = [&](double nu) {
      const double ex = std::exp(-h * ((m1 + m2) * lam + (m1 - m2) * nu));
      if (moment == 0) return ex;
      return ex * 0.5 * (m2n + 2.0 * max * h * lam * nu + h * h * (lam * lam + nu * nu - 1.0));
    };
    return integrate(g, -1.0, 1.0, 1e-16, 1e-13).value;
  };
  const double lmax = 1.0 + 60.0 / (R * std::min(m1, m2));
  const double v = integrate(inner, 1.0, lmax, 1e-16, 1e-12).value;
  return bound_norm(a.scattering_length) * bound_norm(b.scattering_length) * h * 2.0 * M_PI * v;
}

}  // namespace

double Orbital::value(const Vec3& r) const {
  if (kind == Kind::trap_ground) return kPhi0Norm * std::exp(-0.5 * r.squaredNorm());
  const double rho = (r - center).norm();
  return std::exp(-rho / scattering_length) / (std::sqrt(2.0 * M_PI * scattering_length) * rho);
}

double Orbital::own_energy() const {
  return kind == Kind::trap_ground ? 1.5 : -0.5 / (scattering_length * scattering_length);
}

VariationalBasis VariationalBasis::two_state(const SystemSpec& spec) {
  VariationalBasis b;
  for (const auto& imp : spec.impurities) b.orbitals.push_back(Orbital::bound(imp.position, imp.scattering_length));
  return b;
}

VariationalBasis VariationalBasis::three_state(const SystemSpec& spec) {
  VariationalBasis b = two_state(spec);
  b.orbitals.push_back(Orbital::trap_ground());
  return b;
}

void VariationalBasis::validate() const {
  if (orbitals.empty()) throw ConfigError("variational basis is empty");
  int n_trap = 0;
  for (std::size_t i = 0; i < orbitals.size(); ++i) {
    const auto& o = orbitals[i];
    if (o.kind == Orbital::Kind::trap_ground) {
      ++n_trap;
      continue;
    }
    if (!(o.scattering_length > 0.0) || std::isinf(o.scattering_length))
      throw ConfigError("bound orbitals need a finite positive scattering length");
    if (!o.center.allFinite()) throw ConfigError("orbital centre must be finite");
    for (std::size_t j = 0; j < i; ++j)
      if (orbitals[j].kind == Orbital::Kind::bound && orbitals[j].center == o.center)
        throw ConfigError("two bound orbitals on one impurity");
  }
  if (n_trap > 1) throw ConfigError("at most one trap ground-state orbital");
}

double overlap(const Orbital& a, const Orbital& b) {
  using K = Orbital::Kind;
  if (a.kind == K::trap_ground && b.kind == K::trap_ground) return 1.0;
  if (a.kind == K::trap_ground) return bound_trap(b, 0);
  if (b.kind == K::trap_ground) return bound_trap(a, 0);
  const double R = (a.center - b.center).norm();
  const double m1 = 1.0 / a.scattering_length, m2 = 1.0 / b.scattering_length;
  const double nn = bound_norm(a.scattering_length) * bound_norm(b.scattering_length);
  if (a.scattering_length == b.scattering_length) return std::exp(-R * m1);
  // 4π (e^{-μ1 R} - e^{-μ2 R}) / (R (μ2² - μ1²)), → 4π/(μ1+μ2) as R → 0
  if (R * std::abs(m1 - m2) < 1e-8) return nn * 4.0 * M_PI / (m1 + m2) * std::exp(-0.5 * (m1 + m2) * R);
  return nn * 4.0 * M_PI * (std::exp(-m1 * R) - std::exp(-m2 * R)) / (R * (m2 * m2 - m1 * m1));
}

double trap_element(const Orbital& a, const Orbital& b) {
  using K = Orbital::Kind;
  if (a.kind == K::trap_ground && b.kind == K::trap_ground) return 0.75;
  if (a.kind == K::trap_ground) return bound_trap(b, 1);
  if (b.kind == K::trap_ground) return bound_trap(a, 1);
  const double R = (a.center - b.center).norm();
  if (R == 0.0 && a.scattering_length == b.scattering_length)
    return 0.5 * (a.center.squaredNorm() + 0.5 * a.scattering_length * a.scattering_length);
  if (a.scattering_length != b.scattering_length) return bound_bound_numeric(a, b, 1);
  const double al = a.scattering_length, x = R / al;
  const double m2 = (0.5 * (a.center + b.center)).squaredNorm();
  return R / (2.0 * al) * std::exp(-x) *
         (m2 / x + 0.25 * R * R * (1.0 / (3.0 * x) + 2.0 / (x * x) + 2.0 / (x * x * x)));
}

Eigen::MatrixXd overlap_matrix(const VariationalBasis& basis) {
  basis.validate();
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (int j = 0; j < i; ++j) s(i, j) = s(j, i) = overlap(basis.orbitals[i], basis.orbitals[j]);
  }
  return s;
}

Eigen::MatrixXd hamiltonian_matrix(const VariationalBasis& basis, const SystemSpec& spec) {
  basis.validate();
  spec.validate();
  for (const auto& o : basis.orbitals) {
    if (o.kind != Orbital::Kind::bound) continue;
    bool match = false;
    for (const auto& imp : spec.impurities)
      match |= (imp.position - o.center).norm() <= 1e-12 * std::max(1.0, o.center.norm()) &&
               imp.scattering_length == o.scattering_length;
    if (!match) throw ConfigError("bound orbital does not sit on an impurity with its scattering length");
  }
  const int n = static_cast<int>(basis.size());
  const auto& orb = basis.orbitals;
  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double s = i == j ? 1.0 : overlap(orb[i], orb[j]);
      double v = orb[j].own_energy() * s;
      if (orb[j].kind == Orbital::Kind::bound) v += trap_element(orb[i], orb[j]);
      if (i != j && orb[i].kind == Orbital::Kind::bound)
        v -= std::sqrt(2.0 * M_PI / orb[i].scattering_length) * orb[j].value(orb[i].center);
      h(i, j) = v;
    }
  return 0.5 * (h + h.transpose());
}

VariationalSolution solve_variational(const VariationalBasis& basis, const SystemSpec& spec) {
  VariationalSolution sol;
  sol.overlap = overlap_matrix(basis);
  sol.hamiltonian = hamiltonian_matrix(basis, spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(sol.overlap, Eigen::EigenvaluesOnly);
  sol.min_overlap_eigenvalue = se.eigenvalues()(0);
  if (sol.min_overlap_eigenvalue < kMinOverlapEig) {
    std::ostringstream os;
    os << "variational basis is nearly linearly dependent (min eig S = " << sol.min_overlap_eigenvalue
       << "); orbitals overlap too strongly";
    throw SolverError(os.str());
  }
  if (sol.min_overlap_eigenvalue < kWarnOverlapEig) {
    std::ostringstream os;
    os << "overlap matrix poorly conditioned (min eig " << sol.min_overlap_eigenvalue
       << "): impurity distance comparable to the scattering length";
    sol.warnings.push_back(os.str());
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sol.hamiltonian, sol.overlap);
  sol.energies = ges.eigenvalues();
  sol.amplitudes = ges.eigenvectors();

  // Parity from the orbital permutation induced by the mirror, if any.
  const auto mirror = find_mirror(spec);
  const int n = static_cast<int>(basis.size());
  std::vector<int> perm(n, -1);
  if (mirror) {
    for (int i = 0; i < n; ++i) {
      const auto& o = basis.orbitals[i];
      if (o.kind == Orbital::Kind::trap_ground) {
        perm[i] = i;
        continue;
      }
      const Vec3 img = o.center - 2.0 * o.center.dot(mirror->normal) * mirror->normal;
      for (int j = 0; j < n; ++j)
        if (basis.orbitals[j].kind == Orbital::Kind::bound &&
            (basis.orbitals[j].center - img).norm() <= 1e-12 * std::max(1.0, img.norm()))
          perm[i] = j;
    }
  }
  const bool permutable = mirror && std::find(perm.begin(), perm.end(), -1) == perm.end();
  for (int k = 0; k < n; ++k) {
    Parity p = Parity::none;
    if (permutable) {
      const Eigen::VectorXd v = sol.amplitudes.col(k);
      Eigen::VectorXd pv(n);
      for (int i = 0; i < n; ++i) pv(perm[i]) = v(i);
      if ((v - pv).norm() <= 1e-8 * v.norm())
        p = Parity::even;
      else if ((v + pv).norm() <= 1e-8 * v.norm())
        p = Parity::odd;
    }
    sol.parities.push_back(p);
  }
  return sol;
}

}  // namespace trapimp
