#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trapimp/green.hpp"
#include "trapimp/system.hpp"

// Eigenstates of the trap with N zero-range impurities. A state is
//   Ψ(r) = norm Σ_i c_i G_E(d_i, r),   c_i = γ_i k_i,
// and E is an eigenenergy when the reduced matrix
//   D̃(E) = G̃(E) - diag(1/γ),  G̃_ii = G_r(d_i), G̃_ij = G(d_i, d_j)
// is singular. D(E) = D̃(E) diag(γ) is the usual form with unit diagonal
// offset; D̃ also covers unitarity (1/γ = 0).

namespace trapimp {

struct RootOptions {
  double points_per_unit = 400.0;
  double tolerance = 1e-10;
  /// Half-width of the window excluded around every active pole.
  double pole_exclusion = 1e-9;
  /// Search for root pairs hidden between two grid points.
  bool refine_dips = true;
  /// Singular values of the shell-value matrix below this are treated as zero.
  double rank_tol = 1e-13;
  /// Roots closer than this are flagged as degenerate.
  double degeneracy_tol = 1e-8;

  void validate() const;
};

struct SpectralState {
  double energy = 0.0;
  Parity parity = Parity::none;
  Eigen::VectorXd amplitudes;  ///< c, unit length, largest component positive
  Eigen::VectorXd k;           ///< c_i / γ_i (zero at unitarity)
  double norm = 0.0;           ///< 0 until normalized
  bool degenerate = false;
  /// Root within pole_exclusion of a level, located from the pole expansion.
  bool pole_adjacent = false;
  int shell = -1;               ///< level index for pole-adjacent roots
  double pole_offset = 0.0;     ///< E - E_N for pole-adjacent roots
  Eigen::VectorXd shell_coeffs; ///< the state in the shell basis (pole-adjacent only)
};

/// Oscillator states that vanish at every impurity and so keep their energy.
struct UnaffectedLevel {
  double energy = 0.0;
  int multiplicity = 0;
  Parity parity = Parity::none;
};

struct RootScan {
  std::vector<SpectralState> roots;  ///< ascending in energy
  std::vector<UnaffectedLevel> unaffected;
  std::vector<std::string> diagnostics;
};

class Solver {
 public:
  explicit Solver(SystemSpec spec, const SpecFnAccuracy& acc = {});

  const SystemSpec& spec() const { return spec_; }
  const ParitySectors& sectors() const { return sectors_; }

  /// G̃(E). At a level energy this is the regular part (pole removed).
  Eigen::MatrixXd green_matrix(double energy) const;
  Eigen::MatrixXd reduced_matrix(double energy) const;
  /// D(E) with entries γ_j G̃_ij - δ_ij; requires finite couplings.
  Eigen::MatrixXd dmatrix(double energy) const;
  double det(double energy) const;
  double det_reduced(double energy) const;
  /// det of D̃ restricted to a parity sector (the whole space when no mirror).
  double sector_det(double energy, Parity p) const;

  RootScan find_roots(double e_min, double e_max, const RootOptions& opt = {}) const;
  std::vector<UnaffectedLevel> unaffected_levels(double e_min, double e_max,
                                                 const RootOptions& opt = {}) const;

  /// Fills amplitudes and parity for a root found by find_roots or given directly.
  SpectralState solve_state(double energy, Parity hint = Parity::none) const;
  SpectralState solve_state(const SpectralState& root) const;
  SpectralState normalize(const SpectralState& state) const;

  /// ∫|Σ c_i G(d_i, ·)|² = -cᵀ ∂_E G̃ c for the state's amplitudes.
  double norm_integral(const SpectralState& state) const;

  double wavefunction(const SpectralState& state, const Vec3& r) const;

  /// Values of shell N at the impurities (rows: impurities).
  const Eigen::MatrixXd& shell_matrix(int shell) const;

 private:
  Eigen::MatrixXd green_matrix_at(const GreenContext& ctx) const;
  Eigen::MatrixXd regular_green_matrix(int shell) const;
  Eigen::MatrixXd green_derivative(double energy) const;
  std::vector<Parity> parities() const;
  int sector_rank(int shell, Parity p, double tol) const;

  SystemSpec spec_;
  SpecFnAccuracy acc_;
  ParitySectors sectors_;
  std::vector<Vec3> pos_;
  Eigen::VectorXd inv_gamma_;
  mutable std::map<int, Eigen::MatrixXd> shell_cache_;
  mutable std::map<int, Eigen::MatrixXd> regular_cache_;
};

Eigen::MatrixXd build_dmatrix(const SystemSpec& spec, double energy);
double det_d(const SystemSpec& spec, double energy);
RootScan find_roots(const SystemSpec& spec, double e_min, double e_max, const RootOptions& opt = {});
SpectralState solve_state(const SystemSpec& spec, double energy);
SpectralState normalize(const SpectralState& state, const SystemSpec& spec);
double wavefunction(const SpectralState& state, const SystemSpec& spec, const Vec3& r);

}  // namespace trapimp
