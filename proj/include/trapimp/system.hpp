#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "trapimp/types.hpp"

namespace trapimp {

/// A static zero-range scatterer. Lengths in l0; the coupling is γ = 2πa.
/// An infinite scattering length (unitarity) is allowed and gives 1/γ = 0.
struct Impurity {
  Vec3 position = Vec3::Zero();
  double scattering_length = 1.0;

  double coupling() const { return 2.0 * M_PI * scattering_length; }
  double inverse_coupling() const {
    return std::isinf(scattering_length) ? 0.0 : 1.0 / (2.0 * M_PI * scattering_length);
  }
};

struct SystemSpec {
  std::vector<Impurity> impurities;

  static constexpr double kMinSeparation = 1e-3;
  /// Farther out the regular part of G leaves the double range.
  static constexpr double kMaxRadius = 20.0;

  std::size_t size() const { return impurities.size(); }
  std::vector<Vec3> positions() const;
  Eigen::VectorXd inverse_couplings() const;

  /// Throws ConfigError: empty list, non-finite positions, zero or NaN
  /// scattering length, impurities closer than kMinSeparation or farther
  /// than kMaxRadius from the trap centre.
  void validate() const;

  /// Two impurities at (0,0,d+dz) and (0,0,-d) with a common scattering length.
  static SystemSpec pair(double half_separation, double scattering_length, double dz = 0.0);
  static SystemSpec single(const Vec3& position, double scattering_length);
};

/// A reflection through a plane containing the trap centre that maps the
/// impurity set onto itself (couplings included).
struct Mirror {
  Vec3 normal = Vec3::UnitZ();
  std::vector<int> permutation;  ///< impurity i is mapped to permutation[i]
};

/// Finds a mirror that exchanges at least one pair of impurities. Candidate
/// normals: z, x, y, then the directions d_i - d_j. Returns nullopt when the
/// configuration has no such symmetry.
std::optional<Mirror> find_mirror(const SystemSpec& spec, double tol = 1e-12);

enum class Parity { even, odd, none };

const char* to_string(Parity p);

/// Orthonormal bases of the symmetric and antisymmetric amplitude subspaces
/// (columns). Without a mirror, `even` is the identity and `odd` is empty.
struct ParitySectors {
  Eigen::MatrixXd even;
  Eigen::MatrixXd odd;
  bool symmetric = false;
  Vec3 normal = Vec3::UnitZ();

  const Eigen::MatrixXd& basis(Parity p) const { return p == Parity::odd ? odd : even; }
};

ParitySectors parity_sectors(const SystemSpec& spec);

}  // namespace trapimp
