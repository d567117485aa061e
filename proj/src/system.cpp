#include "trapimp/system.hpp"

#include <cmath>
#include <sstream>

#include "trapimp/errors.hpp"

namespace trapimp {

std::vector<Vec3> SystemSpec::positions() const {
  std::vector<Vec3> p;
  p.reserve(impurities.size());
  for (const auto& imp : impurities) p.push_back(imp.position);
  return p;
}

Eigen::VectorXd SystemSpec::inverse_couplings() const {
  Eigen::VectorXd v(impurities.size());
  for (std::size_t i = 0; i < impurities.size(); ++i) v(i) = impurities[i].inverse_coupling();
  return v;
}

void SystemSpec::validate() const {
  if (impurities.empty()) throw ConfigError("system needs at least one impurity");
  for (std::size_t i = 0; i < impurities.size(); ++i) {
    const auto& imp = impurities[i];
    if (!imp.position.allFinite()) throw ConfigError("impurity position must be finite");
    if (imp.position.norm() > kMaxRadius) throw ConfigError("impurity farther than 20 l0 from the trap centre");
    if (std::isnan(imp.scattering_length) || imp.scattering_length == 0.0)
      throw ConfigError("scattering length must be nonzero (use +-inf for unitarity)");
    for (std::size_t j = 0; j < i; ++j) {
      const double sep = (imp.position - impurities[j].position).norm();
      if (sep < kMinSeparation) {
        std::ostringstream os;
        os << "impurities " << j << " and " << i << " are " << sep
           << " apart; the zero-range model needs at least " << kMinSeparation;
        throw ConfigError(os.str());
      }
    }
  }
}

SystemSpec SystemSpec::pair(double half_separation, double scattering_length, double dz) {
  SystemSpec s;
  s.impurities.push_back({Vec3(0.0, 0.0, half_separation + dz), scattering_length});
  s.impurities.push_back({Vec3(0.0, 0.0, -half_separation), scattering_length});
  return s;
}

SystemSpec SystemSpec::single(const Vec3& position, double scattering_length) {
  SystemSpec s;
  s.impurities.push_back({position, scattering_length});
  return s;
}

namespace {

std::optional<std::vector<int>> mirror_permutation(const SystemSpec& spec, const Vec3& n, double tol) {
  const std::size_t N = spec.size();
  std::vector<int> perm(N, -1);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec3& d = spec.impurities[i].position;
    const Vec3 img = d - 2.0 * d.dot(n) * n;
    const double scale = std::max(1.0, d.norm());
    for (std::size_t j = 0; j < N; ++j) {
      if ((spec.impurities[j].position - img).norm() <= tol * scale &&
          spec.impurities[j].scattering_length == spec.impurities[i].scattering_length) {
        perm[i] = static_cast<int>(j);
        break;
      }
    }
    if (perm[i] < 0) return std::nullopt;
  }
  return perm;
}

}  // namespace

std::optional<Mirror> find_mirror(const SystemSpec& spec, double tol) {
  std::vector<Vec3> candidates = {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()};
  for (std::size_t i = 0; i < spec.size(); ++i)
    for (std::size_t j = i + 1; j < spec.size(); ++j) {
      Vec3 d = spec.impurities[i].position - spec.impurities[j].position;
      if (d.norm() > 0) candidates.push_back(d.normalized());
    }
  for (const Vec3& n : candidates) {
    auto perm = mirror_permutation(spec, n, tol);
    if (!perm) continue;
    bool nontrivial = false;
    for (std::size_t i = 0; i < perm->size(); ++i) nontrivial |= (*perm)[i] != static_cast<int>(i);
    if (nontrivial) return Mirror{n, *perm};
  }
  return std::nullopt;
}

const char* to_string(Parity p) {
  switch (p) {
    case Parity::even:
      return "even";
    case Parity::odd:
      return "odd";
    default:
      return "none";
  }
}

ParitySectors parity_sectors(const SystemSpec& spec) {
  const int N = static_cast<int>(spec.size());
  ParitySectors s;
  auto mirror = find_mirror(spec);
  if (!mirror) {
    s.even = Eigen::MatrixXd::Identity(N, N);
    s.odd = Eigen::MatrixXd(N, 0);
    return s;
  }
  s.symmetric = true;
  s.normal = mirror->normal;
  std::vector<Eigen::VectorXd> ev, od;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < N; ++i) {
    const int j = mirror->permutation[i];
    if (j == i) {
      ev.push_back(Eigen::VectorXd::Unit(N, i));
    } else if (j > i) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(N), m = Eigen::VectorXd::Zero(N);
      p(i) = r;
      p(j) = r;
      m(i) = r;
      m(j) = -r;
      ev.push_back(p);
      od.push_back(m);
    }
  }
  s.even.resize(N, ev.size());
  for (std::size_t c = 0; c < ev.size(); ++c) s.even.col(c) = ev[c];
  s.odd.resize(N, od.size());
  for (std::size_t c = 0; c < od.size(); ++c) s.odd.col(c) = od[c];
  return s;
}

}  // namespace trapimp
