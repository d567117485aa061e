#pragma once

// Confluent hypergeometric functions M (Kummer) and U (Tricomi) and the Gamma
// function, tuned for the half-integer b values that appear in the isotropic
// oscillator Green's function.

namespace trapimp {

struct SpecFnAccuracy {
  double rel_tol = 1e-10;        ///< accepted relative error of the asymptotic series
  int max_terms = 10000;         ///< cutoff for every series / Taylor expansion
  double large_x_switch = 30.0;  ///< base argument for the asymptotic start of U

  /// Throws DomainError when a field violates its invariant.
  void validate() const;
};

/// log|Γ(x)| with the sign of Γ(x); `pole` is set for x = 0, -1, -2, ...
struct GammaValue {
  double log_abs = 0.0;
  int sign = 1;
  bool pole = false;

  /// Γ(x) itself. Throws PoleError when `pole` is set.
  double value() const;
};

GammaValue log_gamma(double x);

/// Γ(x); throws PoleError at nonpositive integers.
double gamma_fn(double x);

/// 1/Γ(x), an entire function: exactly zero at the poles of Γ.
double rgamma(double x);

/// Kummer's M(a, b, x) = 1F1(a; b; x).
///
/// Direct ascending series with Neumaier-compensated summation. For x < 0 the
/// Kummer transformation M(a,b,x) = e^x M(b-a,b,-x) is applied first so the
/// summed series never alternates because of x. Throws EvaluationError when
/// the series does not converge within `max_terms` or would overflow.
double kummer_m(double a, double b, double x, const SpecFnAccuracy& acc = {});

/// Tricomi's U(a, b, x) for x > 0 and non-integer b.
///
/// x <= 1: two-term connection formula in M (reciprocal Gamma keeps it finite
/// when a or a-b+1 is a nonpositive integer). x > 1: asymptotic series at a
/// start point x0 >= large_x_switch + |a(a-b+1)|, followed by Taylor-series integration of
/// Kummer's equation inward to x. Inward integration is stable because U is
/// the dominant solution as x decreases.
double tricomi_u(double a, double b, double x, const SpecFnAccuracy& acc = {});

enum class ConfluentKind { U, M };

/// F_E^{(n)}(x) = F((4n-1)/4 - E/2, (2n+1)/2, x) with F = U or M.
double f_shorthand(ConfluentKind kind, int n, double energy, double x,
                   const SpecFnAccuracy& acc = {});

/// Parameters (a, b) of the shorthand above.
constexpr double shorthand_a(int n, double energy) { return (4.0 * n - 1.0) / 4.0 - energy / 2.0; }
constexpr double shorthand_b(int n) { return (2.0 * n + 1.0) / 2.0; }

}  // namespace trapimp
