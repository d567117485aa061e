#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "quad_oracle.hpp"
#include "trapimp/errors.hpp"
#include "trapimp/oscillator.hpp"
#include "trapimp/solver.hpp"

using namespace trapimp;

namespace {

std::vector<double> energies(const RootScan& s) {
  std::vector<double> e;
  for (const auto& r : s.roots) e.push_back(r.energy);
  return e;
}

const SpectralState* lowest(const RootScan& s, Parity p, double above = -1e300) {
  for (const auto& r : s.roots)
    if (r.parity == p && r.energy > above) return &r;
  return nullptr;
}

RootOptions coarse() {
  RootOptions o;
  o.points_per_unit = 100;
  return o;
}

}  // namespace

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(SystemSpec{}.validate(), ConfigError);
  CHECK_THROWS_AS(SystemSpec::pair(1e-4, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(SystemSpec::single(Vec3::Zero(), 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(SystemSpec::single(Vec3(0, 0, NAN), 1.0).validate(), ConfigError);
  CHECK_NOTHROW(SystemSpec::pair(0.6e-3, 1.0).validate());
  CHECK_NOTHROW(SystemSpec::single(Vec3::Zero(), INFINITY).validate());
  CHECK_THROWS_AS(Solver(SystemSpec::pair(1e-4, 1.0)), ConfigError);
}

TEST_CASE("mirror detection") {
  CHECK(find_mirror(SystemSpec::pair(1.0, 0.5)).has_value());
  CHECK(find_mirror(SystemSpec::pair(1.0, 0.5))->normal.isApprox(Vec3::UnitZ()));
  CHECK(!find_mirror(SystemSpec::pair(1.0, 0.5, 0.025)).has_value());
  CHECK(!find_mirror(SystemSpec::single(Vec3::Zero(), 1.0)).has_value());
  SystemSpec s;
  s.impurities = {{Vec3(1, 1, 0), 0.3}, {Vec3(-1, -1, 0), 0.3}, {Vec3(0, 0, 2), 0.7}};
  auto m = find_mirror(s);
  REQUIRE(m.has_value());
  CHECK(m->permutation == std::vector<int>{1, 0, 2});
  s.impurities[1].scattering_length = 0.31;
  CHECK(!find_mirror(s).has_value());
  auto sec = parity_sectors(SystemSpec::pair(1.0, 0.5));
  CHECK(sec.even.cols() == 1);
  CHECK(sec.odd.cols() == 1);
}

TEST_CASE("single impurity at the centre: D is gamma G_r - 1") {
  auto spec = SystemSpec::single(Vec3::Zero(), 1.0);
  const double gamma = 2 * M_PI;
  for (double e : {-1.3, 0.3, 2.1}) {
    const auto d = build_dmatrix(spec, e);
    REQUIRE(d.rows() == 1);
    CHECK(d(0, 0) == doctest::Approx(gamma * green_reg_diag_oracle(Vec3::Zero(), e) - 1).epsilon(1e-9));
  }
  CHECK_THROWS_AS(build_dmatrix(spec, 2.5), PoleError);
}

TEST_CASE("pair matrix symmetry and parity factorization") {
  for (double d : {0.3, 1.0, 2.7}) {
    auto spec = SystemSpec::pair(d, 0.4);
    for (double e : {-2.7, 0.9, 1.7, 3.2}) {
      const auto m = build_dmatrix(spec, e);
      CHECK(m(0, 1) == doctest::Approx(m(1, 0)).epsilon(1e-14));
      const double gamma = 2 * M_PI * 0.4;
      const double gr = green_reg_diag(Vec3(0, 0, d), e);
      const double goff = green_ho(Vec3(0, 0, d), Vec3(0, 0, -d), e).value;
      const double prod = (gamma * (gr + goff) - 1) * (gamma * (gr - goff) - 1);
      CHECK(std::abs(det_d(spec, e) - prod) <= 1e-12 * std::max(1.0, std::abs(prod)));
      Solver sv(spec);
      const double ratio = sv.det(e) / (sv.sector_det(e, Parity::even) * sv.sector_det(e, Parity::odd));
      CHECK(ratio == doctest::Approx(gamma * gamma).epsilon(1e-12));
    }
  }
}

TEST_CASE("vanishing coupling leaves det D = 1") {
  auto spec = SystemSpec::pair(1.0, 1e-10);
  for (double e : {-3.0, 0.7, 2.2}) CHECK(det_d(spec, e) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("unitary impurity at the centre reproduces E = 2n + 1/2") {
  Solver sv(SystemSpec::single(Vec3::Zero(), INFINITY));
  auto scan = sv.find_roots(-2.0, 5.0);
  auto e = energies(scan);
  REQUIRE(e.size() == 3);
  CHECK(std::abs(e[0] - 0.5) < 1e-9);
  CHECK(std::abs(e[1] - 2.5) < 1e-9);
  CHECK(std::abs(e[2] - 4.5) < 1e-9);
  // independent check: the resummed eigenbasis sum vanishes there
  for (double x : {0.5, 2.5 + 1e-7, 4.5 + 1e-7}) CHECK(std::abs(green_reg_diag_oracle(Vec3::Zero(), x)) < 1e-6);
  // odd shells are untouched and listed separately
  REQUIRE(scan.unaffected.size() == 3);
  CHECK(scan.unaffected[0].energy == 2.5);
  CHECK(scan.unaffected[0].multiplicity == 3);
  CHECK(scan.unaffected[1].multiplicity == 5);
  CHECK(scan.unaffected[2].multiplicity == 10);
}

TEST_CASE("well separated pair approaches the oscillator spectrum") {
  Solver sv(SystemSpec::pair(6.0, 0.4));
  auto scan = sv.find_roots(-1.0, 3.0);
  auto ev = lowest(scan, Parity::even);
  auto od = lowest(scan, Parity::odd);
  REQUIRE(ev);
  REQUIRE(od);
  CHECK(std::abs(ev->energy - 1.5) < 1e-2);
  CHECK(std::abs(od->energy - 2.5) < 1e-2);
  CHECK(ev->pole_adjacent);
  // on-axis pair: states with a node on the axis are unaffected
  bool found = false;
  for (const auto& u : scan.unaffected)
    if (u.energy == 2.5 && u.parity == Parity::even) found = u.multiplicity == 2;
  CHECK(found);
}

TEST_CASE("bound dimer doublet sits at the trap-shifted free energy") {
  // the two roots with the largest impurity-localized weight norm·|c|
  Solver sv(SystemSpec::pair(4.0, 0.4));
  auto scan = sv.find_roots(4.0, 6.0);
  std::vector<std::pair<double, SpectralState>> w;
  for (const auto& r : scan.roots) {
    auto st = sv.normalize(sv.solve_state(r));
    w.push_back({st.norm * st.amplitudes.norm(), st});
  }
  REQUIRE(w.size() >= 2);
  std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  CHECK(w[0].second.parity != w[1].second.parity);
  CHECK(w[1].first > 3 * w[2].first);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(w[i].second.energy - (-3.125 + 8.0)) < 0.2);
  CHECK(std::abs(w[0].second.energy - w[1].second.energy) < 0.05);
}

TEST_CASE("roots in different sectors at one level are flagged degenerate") {
  SystemSpec s;
  s.impurities = {{Vec3(6, 0, 0), 0.4}, {Vec3(0, 6, 0), 0.4}};
  Solver sv(s);
  auto scan = sv.find_roots(2.0, 3.0);
  REQUIRE(scan.roots.size() == 2);
  CHECK(scan.roots[0].parity != scan.roots[1].parity);
  for (const auto& r : scan.roots) {
    CHECK(r.degenerate);
    CHECK(r.pole_adjacent);
    CHECK(std::abs(r.energy - 2.5) < 1e-9);
  }
}

TEST_CASE("attractive but unbound pair keeps one negative even level") {
  Solver sv(SystemSpec::pair(0.1, -0.4));
  auto scan = sv.find_roots(-5.0, 1.4);
  int negative = 0;
  for (const auto& r : scan.roots)
    if (r.energy < 0) {
      ++negative;
      CHECK(r.parity == Parity::even);
    }
  CHECK(negative == 1);
}

TEST_CASE("roots do not depend on impurity labels") {
  SystemSpec a;
  a.impurities = {{Vec3(0.3, 0, 0.8), 0.5}, {Vec3(-0.4, 0.2, -0.5), 0.8}, {Vec3(0, -0.6, 0.1), -1.5}};
  SystemSpec b;
  b.impurities = {a.impurities[2], a.impurities[0], a.impurities[1]};
  auto ea = energies(find_roots(a, -3.0, 3.0, coarse()));
  auto eb = energies(find_roots(b, -3.0, 3.0, coarse()));
  REQUIRE(ea.size() == eb.size());
  REQUIRE(!ea.empty());
  for (std::size_t i = 0; i < ea.size(); ++i) CHECK(ea[i] == doctest::Approx(eb[i]).epsilon(1e-9));
}

TEST_CASE("roots are genuine zeros of det D and of D k") {
  for (auto spec : {SystemSpec::pair(1.2, 0.4), SystemSpec::pair(0.7, -1.0, 0.2)}) {
    Solver sv(spec);
    auto scan = sv.find_roots(-4.0, 4.0);
    REQUIRE(scan.roots.size() >= 3);
    for (const auto& r : scan.roots) {
      if (r.pole_adjacent) continue;
      const double scale = std::max(std::abs(sv.det(r.energy - 1e-3)), std::abs(sv.det(r.energy + 1e-3)));
      CHECK(std::abs(sv.det(r.energy)) < 1e-6 * scale);
      auto st = sv.solve_state(r);
      const Eigen::MatrixXd d = sv.dmatrix(r.energy);
      CHECK((d * st.k).norm() < 1e-8 * d.norm() * st.k.norm());
    }
  }
}

TEST_CASE("parity of amplitudes") {
  Solver sv(SystemSpec::pair(1.0, 0.4));
  auto scan = sv.find_roots(-4.0, 4.0);
  int n_even = 0, n_odd = 0;
  for (const auto& r : scan.roots) {
    auto st = sv.solve_state(r);
    CHECK(st.parity == r.parity);
    if (st.parity == Parity::even) {
      ++n_even;
      CHECK(st.amplitudes(0) == doctest::Approx(st.amplitudes(1)).epsilon(1e-12));
      CHECK(st.k(0) == doctest::Approx(st.k(1)).epsilon(1e-12));
    } else {
      ++n_odd;
      CHECK(st.amplitudes(0) == doctest::Approx(-st.amplitudes(1)).epsilon(1e-12));
    }
  }
  CHECK(n_even > 0);
  CHECK(n_odd > 0);
  Solver asym(SystemSpec::pair(1.0, 0.4, 0.1));
  for (const auto& r : asym.find_roots(-4.0, 2.0).roots) {
    auto st = asym.solve_state(r);
    CHECK(st.parity == Parity::none);
    CHECK(std::abs(st.amplitudes(0)) > 1e-3);
    CHECK(std::abs(st.amplitudes(1)) > 1e-3);
  }
}

TEST_CASE("moving the pair off centre changes the spectrum") {
  auto e0 = energies(find_roots(SystemSpec::pair(1.0, 0.5), -4.0, 3.0, coarse()));
  SystemSpec shifted;
  shifted.impurities = {{Vec3(0, 0, 1.5), 0.5}, {Vec3(0, 0, -0.5), 0.5}};
  auto e1 = energies(find_roots(shifted, -4.0, 3.0, coarse()));
  REQUIRE(!e0.empty());
  REQUIRE(!e1.empty());
  CHECK(std::abs(e0[0] - e1[0]) > 1e-3);
}

TEST_CASE("a vanishing second impurity reduces to one impurity") {
  const Vec3 d(0.2, -0.1, 0.7);
  auto one = energies(find_roots(SystemSpec::single(d, 0.8), -3.0, 4.0, coarse()));
  SystemSpec two = SystemSpec::single(d, 0.8);
  two.impurities.push_back({Vec3(0.5, 0.5, -0.4), 1e-9});
  auto both = energies(find_roots(two, -3.0, 4.0, coarse()));
  // every single-impurity root survives; the extra roots sit on levels the
  // first impurity does not touch
  for (double e : one)
    CHECK(std::any_of(both.begin(), both.end(), [&](double x) { return std::abs(x - e) < 1e-6; }));
  for (double e : both) {
    const bool old = std::any_of(one.begin(), one.end(), [&](double x) { return std::abs(x - e) < 1e-6; });
    const bool level = std::abs(e - std::round(e - 1.5) - 1.5) < 1e-6;
    CHECK((old || level));
  }
}

TEST_CASE("normalization agrees with direct quadrature") {
  Solver sv(SystemSpec::pair(1.5, 0.4, 0.2));
  auto scan = sv.find_roots(-4.0, 2.0);
  REQUIRE(scan.roots.size() >= 2);
  for (std::size_t i : {std::size_t(0), scan.roots.size() - 1}) {
    auto st = sv.normalize(sv.solve_state(scan.roots[i]));
    const double q = oracle::axial_norm([&](double rho, double z) { return sv.wavefunction(st, Vec3(rho, 0, z)); },
                                        {1.7, -1.5});
    CHECK(q == doctest::Approx(1.0).epsilon(1e-4));
  }
  // scaling the amplitudes does not change the normalized state
  auto st = sv.solve_state(scan.roots[0]);
  auto scaled = st;
  scaled.amplitudes *= 2.0;
  auto a = sv.normalize(st), b = sv.normalize(scaled);
  CHECK(a.norm == doctest::Approx(b.norm).epsilon(1e-14));
  CHECK((a.amplitudes - b.amplitudes).norm() < 1e-14);
  CHECK(sv.wavefunction(a, Vec3(0.3, 0.2, 0.1)) == doctest::Approx(sv.wavefunction(b, Vec3(0.3, 0.2, 0.1))));
}

TEST_CASE("wavefunction near an impurity obeys the contact condition") {
  const double a = 0.4;
  Solver sv(SystemSpec::pair(1.5, a));
  auto scan = sv.find_roots(-4.0, 2.5);
  for (const auto& r : scan.roots) {
    auto st = sv.normalize(sv.solve_state(r));
    // s-wave part: average over opposite directions
    const Vec3 d(0, 0, 1.5), n = Vec3(1, 2, -0.5).normalized();
    auto avg = [&](double rr) { return 0.5 * (sv.wavefunction(st, d + rr * n) + sv.wavefunction(st, d - rr * n)); };
    // deep dimer states carry an O(κ²ρ) s-wave term, κ² = 2(V(d) - E), that
    // biases a two-point fit at 10⁻²; they are sampled one decade closer
    const double r1 = st.energy > 0 ? 1e-2 : 1e-3, r2 = 0.1 * r1;
    const double p1 = avg(r1), p2 = avg(r2);
    const double c = (p1 - p2) / (1 / r1 - 1 / r2);
    const double a_fit = 1.0 / (1 / r2 - p2 / c);
    CHECK(std::abs(a_fit - a) < 1e-2 * a);
  }
}

TEST_CASE("wavefunction symmetry, far field and pole") {
  Solver sv(SystemSpec::pair(1.0, 0.4));
  auto scan = sv.find_roots(-4.0, 2.0);
  for (const auto& r : scan.roots) {
    auto st = sv.normalize(sv.solve_state(r));
    const double s = st.parity == Parity::even ? 1.0 : -1.0;
    for (Vec3 p : {Vec3(0.3, 0.1, 0.8), Vec3(-1.0, 0.4, 2.0)})
      CHECK(sv.wavefunction(st, p) == doctest::Approx(s * sv.wavefunction(st, Vec3(p.x(), p.y(), -p.z()))).epsilon(1e-10));
    // log|Ψ|² against r² on a ray away from the pair, after removing the
    // power-law prefactor r^{2E-3} of the asymptotic Green's function
    std::vector<double> x, y;
    for (double rr = 5.0; rr <= 7.0; rr += 0.25) {
      const double v = sv.wavefunction(st, rr * Vec3(1, 0.3, 0.2).normalized());
      x.push_back(rr * rr);
      y.push_back(std::log(v * v) - (st.energy - 1.5) * std::log(rr * rr));
    }
    const double n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-1.0).epsilon(1e-2));
    CHECK_THROWS_AS(sv.wavefunction(st, Vec3(0, 0, 1.0)), PoleError);
  }
}

TEST_CASE("root at a level that is not a pole of its sector") {
  // centred unitary impurity: E = 5/2 is a root although 5/2 is a level
  Solver sv(SystemSpec::single(Vec3::Zero(), INFINITY));
  auto st = sv.normalize(sv.solve_state(2.5));
  CHECK(st.norm > 0);
  const double q = oracle::axial_norm([&](double rho, double z) { return sv.wavefunction(st, Vec3(rho, 0, z)); }, {0.0});
  CHECK(q == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("root options are validated") {
  RootOptions o;
  o.points_per_unit = 0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  Solver sv(SystemSpec::pair(1.0, 1.0));
  CHECK_THROWS_AS(sv.find_roots(2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(SystemSpec::single(Vec3(0, 0, 25), 1.0).validate(), ConfigError);
}
