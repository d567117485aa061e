#include "trapimp/green.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trapimp/errors.hpp"
#include "trapimp/oscillator.hpp"
#include "trapimp/quadrature.hpp"

namespace trapimp {

namespace {

const double kPrefactor = -0.5 * std::pow(M_PI, -1.5);

// family parameter a_1: 3/4 - E/2 for the even part, 1/4 - E/2 for the odd part
double a_n(double a1, int n) { return a1 + n - 1; }
double b_n(int n) { return n + 0.5; }

}  // namespace

ProlateCoords prolate_coords(const Vec3& r, const Vec3& r_prime) {
  const double P = 0.5 * (r - r_prime).norm();
  const double Q = 0.5 * (r + r_prime).norm();
  const double dot = r.dot(r_prime);
  ProlateCoords pc;
  pc.xi = (P + Q) * (P + Q);
  pc.eta = (P - Q) * (P - Q);
  pc.sign_factor = dot > 0 ? 1.0 : (dot < 0 ? -1.0 : 0.0);
  return pc;
}

std::optional<double> lambda_factor(int n, double energy) {
  if (n != 1) throw DomainError("lambda_factor: only n = 1 is defined");
  GammaValue g = log_gamma(0.75 - 0.5 * energy);
  if (g.pole) return std::nullopt;
  return kPrefactor * g.value();
}

bool is_shell_energy(double energy, double tol) {
  const double n = energy - 1.5;
  if (n < -tol) return false;
  return std::abs(n - std::round(n)) <= tol;
}

int nearest_shell(double energy) { return std::max(0, static_cast<int>(std::lround(energy - 1.5))); }

GreenContext::GreenContext(double energy, const SpecFnAccuracy& acc) : energy_(energy), acc_(acc) {
  acc_.validate();
  at_level_ = is_shell_energy(energy);
  if (!at_level_) {
    lam_ = kPrefactor * gamma_fn(0.75 - 0.5 * energy);
    lam_a_ = kPrefactor * gamma_fn(1.75 - 0.5 * energy);
    lam_b_ = kPrefactor * gamma_fn(1.25 - 0.5 * energy);
  }

  const double a_even = 0.75 - 0.5 * energy;
  const double a_odd = 0.25 - 0.5 * energy;
  // numerator N = 2 Λa ξη[(2/3)U1 M2 + U2 M1] + 2 t Λ'a' [(2/3) η U1' M2' + ξ U2' M1']
  even_terms_[0] = {{2.0 / 3.0, 1, 1, 1, 2}, {1.0, 1, 1, 2, 1}};
  odd_terms_[0] = {{2.0 / 3.0, 0, 1, 1, 2}, {1.0, 1, 0, 2, 1}};
  // D = ∂ξ - ∂η with U_i' = -a_i U_{i+1} and M_j' = (a_j/b_j) M_{j+1}
  auto apply_d = [](const TermList& in, double a1) {
    TermList out;
    auto add = [&out](double coef, int p, int q, int i, int j) {
      for (Term& t : out)
        if (t.p == p && t.q == q && t.i == i && t.j == j) {
          t.coef += coef;
          return;
        }
      out.push_back({coef, p, q, i, j});
    };
    for (const Term& t : in) {
      if (t.p > 0) add(t.coef * t.p, t.p - 1, t.q, t.i, t.j);
      add(-t.coef * a_n(a1, t.i), t.p, t.q, t.i + 1, t.j);
      if (t.q > 0) add(-t.coef * t.q, t.p, t.q - 1, t.i, t.j);
      add(-t.coef * a_n(a1, t.j) / b_n(t.j), t.p, t.q, t.i, t.j + 1);
    }
    return out;
  };
  for (int k = 1; k < 5; ++k) {
    even_terms_[k] = apply_d(even_terms_[k - 1], a_even);
    odd_terms_[k] = apply_d(odd_terms_[k - 1], a_odd);
  }
}

void GreenContext::require_regular() const {
  if (!at_level_) return;
  std::ostringstream os;
  os << "Green's function evaluated at the oscillator level E = " << energy_;
  throw PoleError(os.str(), energy_);
}

double GreenContext::degenerate_sum(const TermList& terms, double c, const std::vector<double>& u,
                                    const std::vector<double>& m) const {
  double s = 0.0;
  for (const Term& t : terms) s += t.coef * std::pow(c, t.p + t.q) * u[t.i] * m[t.j];
  return s;
}

GreenEval GreenContext::evaluate(const Vec3& r, const Vec3& r_prime) const {
  const double P = 0.5 * (r - r_prime).norm();
  const double Q = 0.5 * (r + r_prime).norm();
  if (P == 0.0) throw DomainError("green_ho: coincident points (use reg_diag for the regular part)");
  require_regular();
  if (!std::isfinite(P) || !std::isfinite(Q)) throw DomainError("green_ho: non-finite point");
  GreenEval out;
  out.energy = energy_;
  // G falls off like e^{-2PQ}; far beyond the double range it is zero.
  if (2.0 * P * Q > kUnderflowExponent) return out;
  const double t = r.dot(r_prime);
  const double xi = (P + Q) * (P + Q);
  const double eta = (P - Q) * (P - Q);
  const double c = P * P + Q * Q;
  const double h = 2.0 * P * Q;  // (ξ - η)/2
  const double E = energy_;

  if (2.0 * h >= kDegenerateThreshold * std::min(c, 1.0)) {
    const double u1 = f_shorthand(ConfluentKind::U, 1, E, xi, acc_);
    const double u2 = f_shorthand(ConfluentKind::U, 2, E, xi, acc_);
    const double m1 = f_shorthand(ConfluentKind::M, 1, E, eta, acc_);
    const double m2 = f_shorthand(ConfluentKind::M, 2, E, eta, acc_);
    const double v1 = f_shorthand(ConfluentKind::U, 1, E + 1, xi, acc_);
    const double v2 = f_shorthand(ConfluentKind::U, 2, E + 1, xi, acc_);
    const double w1 = f_shorthand(ConfluentKind::M, 1, E + 1, eta, acc_);
    const double w2 = f_shorthand(ConfluentKind::M, 2, E + 1, eta, acc_);
    const double num = 2.0 * xi * eta * lam_a_ * (2.0 / 3.0 * u1 * m2 + u2 * m1) +
                       2.0 * t * lam_b_ * (2.0 / 3.0 * eta * v1 * w2 + xi * v2 * w1);
    out.value = std::exp(-0.5 * (xi + eta)) * (lam_ * u1 * m1 + num / (4.0 * P * Q));
    out.branch = GreenBranch::full_formula;
    return out;
  }

  // ξ ≈ η: expand the numerator in h at fixed t. Its h⁰ coefficient follows
  // from the Wronskian of U and M and equals -(c + t) e^c / (2π √c), with
  // c + t = 2Q² exactly.
  // at an exact antipode h = 0 and only the first derivative survives
  const int kmax = h == 0.0 ? 1 : 4;
  const int nmax = kmax + 2;
  std::vector<double> u(nmax + 1), m(nmax + 1), v(nmax + 1), w(nmax + 1);
  for (int n = 1; n <= nmax; ++n) {
    u[n] = f_shorthand(ConfluentKind::U, n, E, c, acc_);
    m[n] = f_shorthand(ConfluentKind::M, n, E, c, acc_);
    v[n] = f_shorthand(ConfluentKind::U, n, E + 1, c, acc_);
    w[n] = f_shorthand(ConfluentKind::M, n, E + 1, c, acc_);
  }
  std::array<double, 5> nk{};
  for (int k = 1; k <= kmax; ++k)
    nk[k] = 2.0 * lam_a_ * degenerate_sum(even_terms_[k], c, u, m) +
            2.0 * t * lam_b_ * degenerate_sum(odd_terms_[k], c, v, w);
  const double series = nk[1] / 2.0 + nk[2] * h / 4.0 + nk[3] * h * h / 12.0 + nk[4] * h * h * h / 48.0;
  const double lead = h == 0.0 ? u[1] * m[1]
                               : f_shorthand(ConfluentKind::U, 1, E, xi, acc_) *
                                     f_shorthand(ConfluentKind::M, 1, E, eta, acc_);
  out.value = std::exp(-c) * (lam_ * lead + series);
  if (Q > 0.0) out.value -= Q / (4.0 * M_PI * std::sqrt(c) * P);
  out.branch = t > 0 ? GreenBranch::coincidence_expansion : GreenBranch::antipodal_limit;
  return out;
}

double GreenContext::g0_direct(double R, double sign_factor) const {
  require_regular();
  const double c = R * R;
  const double t = sign_factor * c;
  const double E = energy_;
  std::vector<double> u(4), m(4), v(4), w(4);
  for (int n = 1; n <= 3; ++n) {
    u[n] = f_shorthand(ConfluentKind::U, n, E, c, acc_);
    m[n] = f_shorthand(ConfluentKind::M, n, E, c, acc_);
    v[n] = f_shorthand(ConfluentKind::U, n, E + 1, c, acc_);
    w[n] = f_shorthand(ConfluentKind::M, n, E + 1, c, acc_);
  }
  const double n1 = 2.0 * lam_a_ * degenerate_sum(even_terms_[1], c, u, m) +
                    2.0 * t * lam_b_ * degenerate_sum(odd_terms_[1], c, v, w);
  return std::exp(-c) * (lam_ * u[1] * m[1] + 0.5 * n1);
}

double GreenContext::origin_value() const {
  // closed form at d = 0: Γ(3/4 - E/2) / (π Γ(1/4 - E/2))
  return gamma_fn(0.75 - 0.5 * energy_) * rgamma(0.25 - 0.5 * energy_) / M_PI;
}

CoincidenceExpansion GreenContext::expansion(double R, double sign_factor) const {
  if (R < 0.0) throw DomainError("green_expansion: R must be nonnegative");
  CoincidenceExpansion ce;
  ce.center_R = R;
  ce.g1 = -(1.0 + sign_factor) / (4.0 * M_PI);
  if (sign_factor == 1.0 && R < kOriginRadius) {
    ce.g0 = reg_diag(Vec3(0.0, 0.0, R));
    return ce;
  }
  if (R == 0.0) throw DomainError("green_expansion: R = 0 requires sign_factor = +1");
  ce.g0 = g0_direct(R, sign_factor);
  return ce;
}

double GreenContext::reg_diag(const Vec3& d) const {
  const double R = d.norm();
  if (R == 0.0) return origin_value();
  if (R >= kOriginRadius) return g0_direct(R, 1.0);
  // g0 is even and smooth in R; the direct formula cancels O(1/R) terms here
  const double g_origin = origin_value();
  const double g_edge = g0_direct(kOriginRadius, 1.0);
  const double s = R / kOriginRadius;
  return g_origin + (g_edge - g_origin) * s * s;
}

GreenEval green_ho(const Vec3& r, const Vec3& r_prime, double energy) {
  return GreenContext(energy).evaluate(r, r_prime);
}

CoincidenceExpansion green_expansion(double R, double energy, double sign_factor) {
  return GreenContext(energy).expansion(R, sign_factor);
}

double green_reg_diag(const Vec3& d, double energy) { return GreenContext(energy).reg_diag(d); }

double green_spectral_sum(const Vec3& r, const Vec3& r_prime, double energy, int n_max) {
  Eigen::VectorXd s = shell_sums(r, r_prime, n_max);
  double g = 0.0;
  for (int N = 0; N <= n_max; ++N) {
    const double de = energy - shell_energy(N);
    if (de == 0.0) throw PoleError("green_spectral_sum: energy on an oscillator level", energy);
    g += s(N) / de;
  }
  return g;
}

namespace {

double shell_tail(const Eigen::VectorXd& s, double energy, double t_cut) {
  double g = 0.0;
  for (int N = 0; N < s.size(); ++N) {
    const double de = energy - shell_energy(N);
    if (de == 0.0) throw PoleError("spectral oracle: energy on an oscillator level", energy);
    g += s(N) * std::exp(de * t_cut) / de;
  }
  return g;
}

// log(sinh(t)/t), accurate for small t
double log_sinhc(double t) {
  if (t < 1e-2) {
    const double t2 = t * t;
    return std::log1p(t2 / 6.0 + t2 * t2 / 120.0 + t2 * t2 * t2 / 5040.0);
  }
  return std::log(std::sinh(t) / t);
}

}  // namespace

double green_spectral_oracle(const Vec3& r, const Vec3& r_prime, double energy, int n_shells,
                             double t_cut) {
  const double delta2 = (r - r_prime).squaredNorm();
  const double sum2 = r.squaredNorm() + r_prime.squaredNorm();
  // t = u², so the integrand stays bounded as t → 0
  auto integrand = [&](double uu) {
    if (uu == 0.0) return 0.0;
    const double t = uu * uu;
    const double sh = std::sinh(t);
    const double sh2 = std::sinh(0.5 * t);
    const double expo = energy * t - (delta2 + sum2 * 2.0 * sh2 * sh2) / (2.0 * sh);
    return 2.0 * uu * std::pow(2.0 * M_PI * sh, -1.5) * std::exp(expo);
  };
  QuadResult q = integrate(integrand, 0.0, std::sqrt(t_cut), 1e-15, 1e-13);
  return -q.value + shell_tail(shell_sums(r, r_prime, n_shells), energy, t_cut);
}

double green_reg_diag_oracle(const Vec3& d, double energy, int n_shells, double t_cut) {
  const double d2 = d.squaredNorm();
  // e^{Et} K_t(d,d) - (2πt)^{-3/2} = (2πt)^{-3/2} expm1(Et - d² tanh(t/2) - (3/2) log(sinh t / t))
  auto integrand = [&](double uu) {
    if (uu == 0.0) return 2.0 * std::pow(2.0 * M_PI, -1.5) * (energy - 0.5 * d2);
    const double t = uu * uu;
    const double x = energy * t - d2 * std::tanh(0.5 * t) - 1.5 * log_sinhc(t);
    return 2.0 * uu * std::pow(2.0 * M_PI * t, -1.5) * std::expm1(x);
  };
  QuadResult q = integrate(integrand, 0.0, std::sqrt(t_cut), 1e-15, 1e-13);
  return -q.value + 2.0 * std::pow(2.0 * M_PI, -1.5) / std::sqrt(t_cut) +
         shell_tail(shell_sums(d, d, n_shells), energy, t_cut);
}

}  // namespace trapimp
