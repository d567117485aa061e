#pragma once

#include <functional>

namespace trapimp {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  ///< Kronrod error estimate summed over accepted panels
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
/// Panels are bisected until |K15 - G7| <= max(abs_tol, rel_tol*|I|) * width/(b-a).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-10, int max_depth = 40);

}  // namespace trapimp
