#pragma once

#include <array>
#include <optional>
#include <vector>

#include "trapimp/specfn.hpp"
#include "trapimp/types.hpp"

// Green's function of the isotropic oscillator, (H0 - E) G = -δ, i.e.
//   G_E(r', r) = Σ_n φ_n(r') φ_n(r) / (E - E_n),   E_n = N + 3/2.
// Near coincidence G = -1/(2π|r - r'|) + G_r + O(|r - r'|).

namespace trapimp {

struct ProlateCoords {
  double xi = 0.0;
  double eta = 0.0;
  double sign_factor = 0.0;  ///< sign(r·r'), with sign(0) = 0
};

ProlateCoords prolate_coords(const Vec3& r, const Vec3& r_prime);

/// Λ(1,E) = -π^{-3/2} Γ(3/4 - E/2) / 2, or nullopt on a Gamma pole.
std::optional<double> lambda_factor(int n, double energy);

/// True when E = N + 3/2 for some N >= 0 (to within `tol`).
bool is_shell_energy(double energy, double tol = 0.0);

/// Nearest shell index N to E (clamped at 0).
int nearest_shell(double energy);

enum class GreenBranch { full_formula, coincidence_expansion, antipodal_limit };

struct GreenEval {
  double value = 0.0;
  GreenBranch branch = GreenBranch::full_formula;
  double energy = 0.0;
};

/// G ≈ g0 + g1/Δr as r' → r, evaluated at |r| = center_R.
struct CoincidenceExpansion {
  double g0 = 0.0;
  double g1 = 0.0;
  double center_R = 0.0;
};

/// Everything that depends on E alone: Gamma prefactors and the derivative
/// tables used when ξ ≈ η. Immutable after construction, so one context can
/// be shared by concurrent evaluations at the same energy.
class GreenContext {
 public:
  /// At an oscillator level only reg_diag at the origin is finite (odd
  /// shells vanish there); every other evaluation throws PoleError.
  explicit GreenContext(double energy, const SpecFnAccuracy& acc = {});

  double energy() const { return energy_; }
  bool at_level() const { return at_level_; }

  GreenEval evaluate(const Vec3& r, const Vec3& r_prime) const;
  double operator()(const Vec3& r, const Vec3& r_prime) const { return evaluate(r, r_prime).value; }

  CoincidenceExpansion expansion(double R, double sign_factor = 1.0) const;

  /// Regular part of G at r = r' = d.
  double reg_diag(const Vec3& d) const;

  /// Relative threshold on ξ - η below which the series in h = (ξ-η)/2 replaces
  /// the closed form.
  static constexpr double kDegenerateThreshold = 2e-3;
  /// Below this |d| the regular diagonal is interpolated towards its value at
  /// the origin.
  static constexpr double kOriginRadius = 1e-3;
  /// Beyond 2|r - r'||r + r'|/4 > this, G is returned as zero.
  static constexpr double kUnderflowExponent = 1500.0;

 private:
  struct Term {
    double coef;
    int p, q, i, j;  // coef ξ^p η^q U_i(ξ) M_j(η)
  };
  using TermList = std::vector<Term>;

  double degenerate_sum(const TermList& terms, double c, const std::vector<double>& u,
                        const std::vector<double>& m) const;
  double g0_direct(double R, double sign_factor) const;
  double origin_value() const;
  void require_regular() const;

  double energy_;
  SpecFnAccuracy acc_;
  bool at_level_ = false;
  double lam_ = 0.0;    // Λ(E)
  double lam_a_ = 0.0;  // Λ(E) (3/4 - E/2)
  double lam_b_ = 0.0;  // Λ(E+1) (1/4 - E/2)
  // (∂ξ - ∂η)^k of the even and odd parts of the numerator, k = 0..4
  std::array<TermList, 5> even_terms_;
  std::array<TermList, 5> odd_terms_;
};

GreenEval green_ho(const Vec3& r, const Vec3& r_prime, double energy);
CoincidenceExpansion green_expansion(double R, double energy, double sign_factor = 1.0);
double green_reg_diag(const Vec3& d, double energy);

/// Plain truncated eigenbasis sum Σ_{N<=n_max} S_N(r,r')/(E - E_N).
/// Converges only algebraically (and not at all at r = r').
double green_spectral_sum(const Vec3& r, const Vec3& r_prime, double energy, int n_max);

/// Eigenbasis sum with its short-time part resummed: the propagator (Mehler
/// kernel) is integrated over t ∈ [0, t_c] and the remaining shells are
/// summed in closed form, each damped by e^{-(N+3/2) t_c}. Converges
/// exponentially in n_shells and is valid for every non-level energy.
double green_spectral_oracle(const Vec3& r, const Vec3& r_prime, double energy, int n_shells = 60,
                             double t_cut = 1.0);

/// The same construction for the regular part at coincidence, with the
/// free-particle short-time singularity subtracted analytically.
double green_reg_diag_oracle(const Vec3& d, double energy, int n_shells = 60, double t_cut = 1.0);

}  // namespace trapimp
