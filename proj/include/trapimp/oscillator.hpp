#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "trapimp/types.hpp"

// Eigenstates of the isotropic 3D oscillator H0 = -∇²/2 + r²/2 in the
// Cartesian product basis h_nx(x) h_ny(y) h_nz(z), E = nx + ny + nz + 3/2.

namespace trapimp {

/// Shell energy N + 3/2.
constexpr double shell_energy(int shell) { return shell + 1.5; }

/// Normalized 1D oscillator functions h_0(x) .. h_nmax(x).
Eigen::VectorXd hermite_functions(int nmax, double x);

/// Quantum numbers (nx, ny, nz) of shell N, ordered lexicographically.
std::vector<std::array<int, 3>> shell_quanta(int shell);

/// Degeneracy (N+1)(N+2)/2.
constexpr int shell_degeneracy(int shell) { return (shell + 1) * (shell + 2) / 2; }

/// Values of every state of shell N at every point: rows = points, columns
/// follow shell_quanta(N).
Eigen::MatrixXd shell_values(int shell, const std::vector<Vec3>& points);

/// S_N(r, r') = Σ_{states in shell N} φ(r) φ(r') for N = 0 .. nmax.
Eigen::VectorXd shell_sums(const Vec3& r, const Vec3& rp, int nmax);

}  // namespace trapimp
