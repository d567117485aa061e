#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "trapimp/system.hpp"

// Bound states of the impurities without the trap (E < 0, κ = √(-2E)).
// The free Green's function has the same 1/Δ coefficient as the trap one,
//   G(r, r') = -e^{-κΔ}/(2πΔ),   regular part at coincidence κ/(2π),
// so the couplings γ carry over unchanged.

namespace trapimp {

double green_free(const Vec3& r, const Vec3& r_prime, double energy);
double green_free_reg_diag(double energy);

struct FreeBoundState {
  double energy = 0.0;
  double kappa = 0.0;
  Parity parity = Parity::none;
};

/// Roots of det[G̃_free(κ) - diag(1/γ)] with κ > 0, per parity sector, ascending in E.
std::vector<FreeBoundState> free_bound_states(const SystemSpec& spec);

/// det of the reduced free matrix in a sector, as a function of κ ≥ 0.
double free_sector_det(const SystemSpec& spec, double kappa, Parity p);

/// Symmetric pair at ±d with scattering length a (a ≠ 0):
///   even: κ = 1/a + e^{-2κd}/(2d),   odd: κ = 1/a - e^{-2κd}/(2d).
/// Both sides are monotone in κ, so each has at most one root.
std::optional<double> pair_kappa(double half_separation, double scattering_length, Parity p);

struct BoundSample {
  double half_separation = 0.0;
  double energy = 0.0;
  double kappa = 0.0;
};

struct BoundBranch {
  Parity parity = Parity::even;
  std::vector<BoundSample> samples;  ///< only separations where the state exists
};

/// Branches of the symmetric pair over the given half-separations, from the
/// generic determinant (cross-checked against pair_kappa in the tests).
std::vector<BoundBranch> bound_states_free(double scattering_length, const std::vector<double>& half_separations);

/// One sample per parity at the geometry of `spec`, with d = half the largest
/// impurity distance.
std::vector<BoundBranch> bound_states_free(const SystemSpec& spec);

/// Half-separation at which the pair's bound state of parity p reaches E = 0,
/// searched in [d_lo, d_hi]; nullopt when the threshold condition does not
/// change sign there. Located by bisection on the κ = 0 determinant.
std::optional<double> threshold_half_separation(double scattering_length, Parity p, double d_lo, double d_hi,
                                                double tol = 1e-12);

}  // namespace trapimp
