#include "trapimp/freespace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "trapimp/errors.hpp"

namespace trapimp {

namespace {

Eigen::MatrixXd free_reduced(const SystemSpec& spec, double kappa) {
  const int n = static_cast<int>(spec.size());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = kappa / (2.0 * M_PI) - spec.impurities[i].inverse_coupling();
    for (int j = 0; j < i; ++j) {
      const double dist = (spec.impurities[i].position - spec.impurities[j].position).norm();
      m(i, j) = m(j, i) = -std::exp(-kappa * dist) / (2.0 * M_PI * dist);
    }
  }
  return m;
}

double sector_det(const Eigen::MatrixXd& m, const Eigen::MatrixXd& basis) {
  if (basis.cols() == 0) return 1.0;
  const Eigen::MatrixXd s = basis.transpose() * m * basis;
  return s.partialPivLu().determinant();
}

// Bisection of a bracketed sign change down to adjacent doubles.
template <class F>
double bisect(F f, double a, double b, double fa) {
  for (int it = 0; it < 400; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

std::vector<Parity> sector_list(const ParitySectors& s) {
  if (!s.symmetric) return {Parity::none};
  if (s.odd.cols() == 0) return {Parity::even};
  return {Parity::even, Parity::odd};
}

}  // namespace

double green_free(const Vec3& r, const Vec3& r_prime, double energy) {
  if (!(energy < 0.0)) throw DomainError("green_free: needs E < 0 (bound region)");
  const double dist = (r - r_prime).norm();
  if (dist == 0.0) throw DomainError("green_free: coincident points");
  const double kappa = std::sqrt(-2.0 * energy);
  return -std::exp(-kappa * dist) / (2.0 * M_PI * dist);
}

double green_free_reg_diag(double energy) {
  if (!(energy < 0.0)) throw DomainError("green_free_reg_diag: needs E < 0 (bound region)");
  return std::sqrt(-2.0 * energy) / (2.0 * M_PI);
}

double free_sector_det(const SystemSpec& spec, double kappa, Parity p) {
  return sector_det(free_reduced(spec, kappa), parity_sectors(spec).basis(p));
}

std::vector<FreeBoundState> free_bound_states(const SystemSpec& spec) {
  spec.validate();
  const ParitySectors sectors = parity_sectors(spec);
  // A root needs an eigenvalue of the reduced matrix to vanish; Gershgorin
  // bounds κ by max_i (1/a_i + Σ_j 1/|d_i - d_j|).
  double kmax = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    double k = 2.0 * M_PI * spec.impurities[i].inverse_coupling();
    for (std::size_t j = 0; j < spec.size(); ++j)
      if (j != i) k += 1.0 / (spec.impurities[i].position - spec.impurities[j].position).norm();
    kmax = std::max(kmax, k);
  }
  std::vector<FreeBoundState> out;
  if (kmax <= 0.0) return out;
  kmax += 1.0;
  const int n = 4000;
  for (Parity p : sector_list(sectors)) {
    const Eigen::MatrixXd& basis = sectors.basis(p);
    if (basis.cols() == 0) continue;
    auto f = [&](double k) { return sector_det(free_reduced(spec, k), basis); };
    double prev_k = 0.0, prev_f = f(0.0);
    for (int i = 1; i <= n; ++i) {
      const double k = kmax * i / n;
      const double fk = f(k);
      if (fk == 0.0) {
        out.push_back({-0.5 * k * k, k, p});
      } else if (prev_f != 0.0 && (fk < 0) != (prev_f < 0)) {
        const double root = bisect(f, prev_k, k, prev_f);
        out.push_back({-0.5 * root * root, root, p});
      }
      prev_k = k;
      prev_f = fk;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
  return out;
}

std::optional<double> pair_kappa(double half_separation, double scattering_length, Parity p) {
  if (p == Parity::none) throw DomainError("pair_kappa: parity must be even or odd");
  if (!(half_separation > 0.0) || scattering_length == 0.0 || std::isnan(scattering_length))
    throw DomainError("pair_kappa: need d > 0 and a != 0");
  const double inv_a = std::isinf(scattering_length) ? 0.0 : 1.0 / scattering_length;
  const double s = p == Parity::even ? 1.0 : -1.0;
  const double d = half_separation;
  auto f = [&](double k) { return k - inv_a - s * std::exp(-2.0 * k * d) / (2.0 * d); };
  const double f0 = f(0.0);
  if (!(f0 < 0.0)) return std::nullopt;
  const double hi = std::max(inv_a, 0.0) + 1.0 / (2.0 * d) + 1.0;
  return bisect(f, 0.0, hi, f0);
}

std::vector<BoundBranch> bound_states_free(double scattering_length, const std::vector<double>& half_separations) {
  BoundBranch even{Parity::even, {}}, odd{Parity::odd, {}};
  for (double d : half_separations) {
    for (const auto& st : free_bound_states(SystemSpec::pair(d, scattering_length))) {
      BoundBranch& b = st.parity == Parity::odd ? odd : even;
      b.samples.push_back({d, st.energy, st.kappa});
    }
  }
  return {even, odd};
}

std::vector<BoundBranch> bound_states_free(const SystemSpec& spec) {
  double d = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      d = std::max(d, 0.5 * (spec.impurities[i].position - spec.impurities[j].position).norm());
  std::vector<BoundBranch> out;
  for (const auto& st : free_bound_states(spec)) {
    auto it = std::find_if(out.begin(), out.end(), [&](const BoundBranch& b) { return b.parity == st.parity; });
    if (it == out.end()) {
      out.push_back({st.parity, {}});
      it = out.end() - 1;
    }
    it->samples.push_back({d, st.energy, st.kappa});
  }
  return out;
}

std::optional<double> threshold_half_separation(double scattering_length, Parity p, double d_lo, double d_hi,
                                                double tol) {
  if (!(d_lo > 0.0 && d_hi > d_lo)) throw DomainError("threshold search needs 0 < d_lo < d_hi");
  auto h = [&](double d) {
    SystemSpec s;
    s.impurities = {{Vec3(0, 0, d), scattering_length}, {Vec3(0, 0, -d), scattering_length}};
    return sector_det(free_reduced(s, 0.0), parity_sectors(s).basis(p));
  };
  double a = d_lo, b = d_hi, fa = h(a);
  const double fb = h(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0) == (fb < 0)) return std::nullopt;
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = h(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace trapimp
