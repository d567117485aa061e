#include <Eigen/Geometry>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "trapimp/errors.hpp"
#include "trapimp/green.hpp"
#include "trapimp/oscillator.hpp"

using namespace trapimp;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// G_E = -∫_0^∞ e^{Et} K_t dt for E below the ground level, K_t the Mehler kernel
double mehler_green(const Vec3& r, const Vec3& rp, double E) {
  const double d2 = (r - rp).squaredNorm(), s2 = r.squaredNorm() + rp.squaredNorm();
  auto f = [&](double t) {
    if (t == 0 || t > 600) return 0.0;
    const double sh = std::sinh(t), h = std::sinh(t / 2);
    return std::pow(2 * M_PI * sh, -1.5) * std::exp(E * t - (d2 + 2 * s2 * h * h) / (2 * sh));
  };
  boost::math::quadrature::exp_sinh<double> q;
  return -q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("prolate coordinates") {
  auto a = prolate_coords({0, 0, 1}, {0, 0, 1});
  CHECK(a.xi == doctest::Approx(1.0));
  CHECK(a.eta == doctest::Approx(1.0));
  CHECK(a.sign_factor == 1.0);
  auto b = prolate_coords({0, 0, 1}, {0, 0, -1});
  CHECK(b.xi == doctest::Approx(1.0));
  CHECK(b.eta == doctest::Approx(1.0));
  CHECK(b.sign_factor == -1.0);
  auto c = prolate_coords({0, 0, 2}, {0, 0, 0.5});
  CHECK(c.xi == doctest::Approx(4.0));
  CHECK(c.eta == doctest::Approx(0.25));
  CHECK(prolate_coords({1, 0, 0}, {0, 1, 0}).sign_factor == 0.0);
}

TEST_CASE("lambda factor") {
  CHECK(*lambda_factor(1, 0.5) == doctest::Approx(-1.0 / (2 * M_PI)).epsilon(1e-14));
  CHECK(!lambda_factor(1, 1.5).has_value());
  CHECK(*lambda_factor(1, -0.5) == doctest::Approx(-0.5 * std::pow(M_PI, -1.5)).epsilon(1e-14));
  CHECK_THROWS_AS(GreenContext(2.5).evaluate(Vec3(0, 0, 1), Vec3(1, 0, 0)), PoleError);
  CHECK_THROWS_AS(GreenContext(1.5).reg_diag(Vec3(0, 0, 1)), PoleError);
  CHECK_THROWS_AS(GreenContext(1.5).reg_diag(Vec3::Zero()), PoleError);
  CHECK(is_shell_energy(4.5));
  CHECK(!is_shell_energy(0.5));
}

TEST_CASE("closed form matches the propagator integral below the ground level") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ue(-5.0, 1.4);
  for (int i = 0; i < 20; ++i) {
    Vec3 r(u(rng), u(rng), u(rng)), rp(u(rng), u(rng), u(rng));
    double E = ue(rng);
    CHECK(rel(green_ho(r, rp, E).value, mehler_green(r, rp, E)) < 1e-9);
  }
}

TEST_CASE("spectral oracle agrees with the propagator integral") {
  Vec3 r(0.3, -0.2, 0.7), rp(-0.1, 0.5, -0.4);
  for (double E : {-2.0, 0.4, 1.2}) CHECK(rel(green_spectral_oracle(r, rp, E), mehler_green(r, rp, E)) < 1e-10);
}

TEST_CASE("axis example against the spectral oracle") {
  Vec3 r(0, 0, 0.7), rp(0, 0, -0.4);
  auto g = green_ho(r, rp, 0.9);
  CHECK(g.branch == GreenBranch::full_formula);
  CHECK(g.energy == 0.9);
  CHECK(rel(g.value, green_spectral_oracle(r, rp, 0.9)) < 1e-6);
}

TEST_CASE("above the ground level and between poles") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.5, 2.5), ue(1.6, 7.4);
  for (int i = 0; i < 30; ++i) {
    Vec3 r(u(rng), u(rng), u(rng)), rp(u(rng), u(rng), u(rng));
    double E = ue(rng);
    if (is_shell_energy(E, 0.02)) continue;
    CHECK(rel(green_ho(r, rp, E).value, green_spectral_oracle(r, rp, E)) < 1e-9);
  }
}

TEST_CASE("symmetry and rotational invariance") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    Vec3 r(u(rng), u(rng), u(rng)), rp(u(rng), u(rng), u(rng));
    Eigen::Matrix3d rot =
        Eigen::Quaterniond(Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).normalized()).toRotationMatrix();
    double E = 0.77 + i * 0.31;
    if (is_shell_energy(E, 0.01)) continue;
    GreenContext ctx(E);
    double g = ctx(r, rp);
    CHECK(rel(ctx(rp, r), g) < 1e-12);
    CHECK(rel(ctx(rot * r, rot * rp), g) < 1e-10);
  }
}

TEST_CASE("coincidence expansion") {
  Vec3 d(0.3, -0.4, 1.1);
  for (double E : {-1.7, 0.9, 2.2, 4.1}) {
    GreenContext ctx(E);
    auto ce = ctx.expansion(d.norm(), 1.0);
    CHECK(ce.g1 == doctest::Approx(-1.0 / (2 * M_PI)).epsilon(1e-15));
    CHECK(rel(ce.g0, green_reg_diag_oracle(d, E)) < 1e-9);
    // residual after subtracting g0 + g1/Δr is O(Δr)
    Vec3 dir = Vec3(0.2, 0.9, -0.4).normalized();
    double prev = 0;
    for (double dr : {1e-3, 1e-4, 1e-5}) {
      double res = std::abs(ctx(d, d + dr * dir) - (ce.g0 + ce.g1 / dr));
      CHECK(res < 5 * dr);
      if (prev > 0) CHECK(res < 0.2 * prev + 1e-10);
      prev = res;
    }
    // δ = 1e-4 along z matches g0 + g1/δ within 1e-6 relative
    double v = ctx(d, d + Vec3(0, 0, 1e-4));
    CHECK(rel(v, ce.g0 + ce.g1 / 1e-4) < 1e-6);
  }
}

TEST_CASE("pole coefficient from a two-point fit and directional independence") {
  Vec3 d(0, 0, 1.3);
  GreenContext ctx(0.9);
  auto ce = ctx.expansion(1.3);
  for (Vec3 dir : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.6, 0.0, -0.8)}) {
    double g3 = ctx(d, d + 1e-3 * dir), g4 = ctx(d, d + 1e-4 * dir);
    double fit_g1 = (g3 - g4) / (1e3 - 1e4);
    double fit_c0 = g4 - fit_g1 * 1e4;
    CHECK(rel(fit_g1, ce.g1) < 1e-4);
    CHECK(std::abs(fit_c0 - ce.g0) < 1e-4 * std::abs(ce.g0) + 1e-3);
  }
}

TEST_CASE("antipodal limit is finite and continuous") {
  GreenContext ctx(0.9);
  Vec3 r(0, 0, 1), rp(0, 0, -1);
  auto g = ctx.evaluate(r, rp);
  CHECK(g.branch == GreenBranch::antipodal_limit);
  CHECK(std::isfinite(g.value));
  CHECK(rel(g.value, green_spectral_oracle(r, rp, 0.9)) < 1e-10);
  CHECK(rel(ctx.expansion(1.0, -1.0).g0, g.value) < 1e-10);
  double prev = 1;
  for (double s : {1e-1, 1e-2, 1e-3, 1e-4}) {
    double diff = std::abs(ctx(r, Vec3(0, 0, -1 + s)) - g.value);
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 1e-4);
  // both branches agree across the switch
  for (double s : {0.9e-3, 1.1e-3}) {
    Vec3 q(0, 0, -1 + s);
    CHECK(rel(ctx(r, q), green_spectral_oracle(r, q, 0.9)) < 1e-9);
  }
}

TEST_CASE("sign(r.r') = 0 is continuous") {
  GreenContext ctx(1.1);
  Vec3 r(1.0, 0, 0);
  double g0 = ctx(r, Vec3(0, 0.8, 0));
  CHECK(rel(ctx(r, Vec3(1e-7, 0.8, 0)), g0) < 1e-6);
  CHECK(rel(ctx(r, Vec3(-1e-7, 0.8, 0)), g0) < 1e-6);
}

TEST_CASE("regular diagonal") {
  // origin: Γ(3/4 - E/2)/(π Γ(1/4 - E/2)) vanishes at E = 1/2, 5/2, 9/2
  for (double E : {0.5, 2.5, 4.5}) CHECK(std::abs(green_reg_diag(Vec3::Zero(), E)) < 1e-14);
  for (double E : {-3.0, 0.9, 3.1}) {
    CHECK(rel(green_reg_diag(Vec3::Zero(), E), green_reg_diag_oracle(Vec3::Zero(), E)) < 1e-9);
    for (double R : {5e-4, 1e-3, 2e-3, 0.3, 2.0})
      CHECK(rel(green_reg_diag(Vec3(0, 0, R), E), green_reg_diag_oracle(Vec3(0, 0, R), E)) < 1e-9);
  }
  CHECK(rel(green_reg_diag(Vec3(0, 0, 6), 1.4), green_reg_diag_oracle(Vec3(0, 0, 6), 1.4)) < 1e-6);
  // deep below the spectrum G_r approaches the free value sqrt(-2E)/(2π)
  CHECK(rel(green_reg_diag(Vec3(0, 0, 1), -40.0), std::sqrt(80.0) / (2 * M_PI)) < 1e-2);
}

TEST_CASE("pole residues") {
  Vec3 r(0.2, 0.5, 0.8), rp(-0.6, 0.1, 0.3);
  for (int N : {0, 1, 2, 3}) {
    double eps = 1e-7;
    double En = shell_energy(N);
    double res = 0.5 * eps * (green_ho(r, rp, En + eps).value - green_ho(r, rp, En - eps).value);
    double expected = shell_sums(r, rp, N)(N);
    CHECK(std::abs(res - expected) < 1e-4 * std::max(std::abs(expected), 1e-3));
  }
}

TEST_CASE("spectral oracle properties") {
  Vec3 r(0.3, 0.1, -0.5);
  double E = 0.9;
  // parity: odd shells change sign under r' -> -r'
  Eigen::VectorXd sp = shell_sums(r, r, 6), sm = shell_sums(r, -r, 6);
  for (int N = 0; N <= 6; ++N) CHECK(sm(N) == doctest::Approx((N % 2 ? -1 : 1) * sp(N)));
  Vec3 rp(0.7, -0.2, 0.4);
  CHECK(green_spectral_sum(r, rp, E, 30) == doctest::Approx(green_spectral_sum(rp, r, E, 30)).epsilon(1e-14));
  double exact = green_spectral_oracle(r, rp, E);
  double e1 = std::abs(green_spectral_sum(r, rp, E, 20) - exact);
  double e2 = std::abs(green_spectral_sum(r, rp, E, 40) - exact);
  double e3 = std::abs(green_spectral_sum(r, rp, E, 80) - exact);
  CHECK(e2 < e1);
  CHECK(e3 < e2);
  // the resummed oracle is converged in its shell count
  CHECK(std::abs(green_spectral_oracle(r, rp, E, 40) - green_spectral_oracle(r, rp, E, 80)) < 1e-13);
}

TEST_CASE("coincident points are rejected") {
  CHECK_THROWS_AS(green_ho(Vec3(0, 0, 1), Vec3(0, 0, 1), 0.3), DomainError);
}
