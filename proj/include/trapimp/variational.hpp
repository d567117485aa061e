#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "trapimp/system.hpp"

// Few-state variational model: bound orbitals ψ(r - d) = e^{-ρ/a}/(√(2πa) ρ)
// on the impurities, optionally with the oscillator ground state φ0.
// Matrix elements use the quadratic form of the zero-range Hamiltonian: a
// bound orbital solves the free problem with its own impurity, so
//   H_ij = ⟨ψ_i|Ĥψ_j⟩ - √(2π/a_i) ψ_j(d_i)   (i a bound orbital, j ≠ i),
// where Ĥ acts pointwise away from the impurities. The subtracted term is the
// regularized contact contribution of impurity i on the orbital it carries.

namespace trapimp {

struct Orbital {
  enum class Kind { bound, trap_ground };
  Kind kind = Kind::bound;
  Vec3 center = Vec3::Zero();
  double scattering_length = 1.0;

  static Orbital bound(const Vec3& center, double a) { return {Kind::bound, center, a}; }
  static Orbital trap_ground() { return {Kind::trap_ground, Vec3::Zero(), 0.0}; }

  double value(const Vec3& r) const;
  /// Energy of Ĥ0 = -Δ/2 (+ own contact) on the orbital: -1/(2a²), or 3/2 for φ0
  /// where the trap is included.
  double own_energy() const;
};

struct VariationalBasis {
  std::vector<Orbital> orbitals;

  /// One bound orbital per impurity.
  static VariationalBasis two_state(const SystemSpec& spec);
  /// two_state plus the oscillator ground state.
  static VariationalBasis three_state(const SystemSpec& spec);

  void validate() const;
  std::size_t size() const { return orbitals.size(); }
};

double overlap(const Orbital& a, const Orbital& b);
/// ⟨a| r²/2 |b⟩.
double trap_element(const Orbital& a, const Orbital& b);

Eigen::MatrixXd overlap_matrix(const VariationalBasis& basis);
Eigen::MatrixXd hamiltonian_matrix(const VariationalBasis& basis, const SystemSpec& spec);

struct VariationalSolution {
  Eigen::VectorXd energies;  ///< ascending
  Eigen::MatrixXd amplitudes;  ///< columns v, S-normalized
  Eigen::MatrixXd overlap;
  Eigen::MatrixXd hamiltonian;
  std::vector<Parity> parities;
  double min_overlap_eigenvalue = 0.0;
  std::vector<std::string> warnings;
};

/// Refuses (SolverError) when the smallest eigenvalue of S is below kMinOverlapEig;
/// warns below kWarnOverlapEig.
VariationalSolution solve_variational(const VariationalBasis& basis, const SystemSpec& spec);

constexpr double kMinOverlapEig = 1e-8;
constexpr double kWarnOverlapEig = 1e-2;

}  // namespace trapimp
