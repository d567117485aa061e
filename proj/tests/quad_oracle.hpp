#pragma once

// ∫|ψ|² d³r for a function that is symmetric about the z axis and singular
// (like 1/|r - d|) at points d on the axis: 2π ∫dz ∫ρ dρ ψ(ρ, z)².
// The z integral is split at the singular points; a slab of half-width `gap`
// around each of them is skipped (its weight is O(gap log gap)).

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

template <class Psi>
double axial_norm(Psi psi, std::vector<double> z_sing, double gap = 1e-9) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::tanh_sinh;
  const double inf = std::numeric_limits<double>::infinity();
  std::sort(z_sing.begin(), z_sing.end());
  exp_sinh<double> es;
  tanh_sinh<double> ts;
  auto radial = [&](double z) {
    auto f = [&](double rho) {
      if (rho == 0.0 || !std::isfinite(rho)) return 0.0;
      const double v = psi(rho, z);
      return rho * v * v;
    };
    return es.integrate(f, 0.0, inf, 1e-9);
  };
  double total = 0.0;
  total += es.integrate([&](double s) { return radial(z_sing.front() - gap - s); }, 0.0, inf, 1e-8);
  total += es.integrate([&](double s) { return radial(z_sing.back() + gap + s); }, 0.0, inf, 1e-8);
  for (std::size_t i = 0; i + 1 < z_sing.size(); ++i)
    total += ts.integrate(radial, z_sing[i] + gap, z_sing[i + 1] - gap, 1e-8);
  return 2.0 * M_PI * total;
}

}  // namespace oracle
