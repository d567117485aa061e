#include "trapimp/oscillator.hpp"

#include <cmath>

namespace trapimp {

Eigen::VectorXd hermite_functions(int nmax, double x) {
  Eigen::VectorXd h(nmax + 1);
  h(0) = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
  if (nmax >= 1) h(1) = std::sqrt(2.0) * x * h(0);
  for (int n = 1; n < nmax; ++n)
    h(n + 1) = std::sqrt(2.0 / (n + 1)) * x * h(n) - std::sqrt(double(n) / (n + 1)) * h(n - 1);
  return h;
}

std::vector<std::array<int, 3>> shell_quanta(int shell) {
  std::vector<std::array<int, 3>> q;
  q.reserve(shell_degeneracy(shell));
  for (int nx = shell; nx >= 0; --nx)
    for (int ny = shell - nx; ny >= 0; --ny) q.push_back({nx, ny, shell - nx - ny});
  return q;
}

Eigen::MatrixXd shell_values(int shell, const std::vector<Vec3>& points) {
  const auto quanta = shell_quanta(shell);
  Eigen::MatrixXd v(points.size(), quanta.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    Eigen::VectorXd hx = hermite_functions(shell, points[p].x());
    Eigen::VectorXd hy = hermite_functions(shell, points[p].y());
    Eigen::VectorXd hz = hermite_functions(shell, points[p].z());
    for (std::size_t s = 0; s < quanta.size(); ++s)
      v(p, s) = hx(quanta[s][0]) * hy(quanta[s][1]) * hz(quanta[s][2]);
  }
  return v;
}

Eigen::VectorXd shell_sums(const Vec3& r, const Vec3& rp, int nmax) {
  Eigen::VectorXd px = hermite_functions(nmax, r.x()).cwiseProduct(hermite_functions(nmax, rp.x()));
  Eigen::VectorXd py = hermite_functions(nmax, r.y()).cwiseProduct(hermite_functions(nmax, rp.y()));
  Eigen::VectorXd pz = hermite_functions(nmax, r.z()).cwiseProduct(hermite_functions(nmax, rp.z()));
  // convolve x and y first, then z
  Eigen::VectorXd pxy = Eigen::VectorXd::Zero(nmax + 1);
  for (int i = 0; i <= nmax; ++i)
    for (int j = 0; i + j <= nmax; ++j) pxy(i + j) += px(i) * py(j);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(nmax + 1);
  for (int i = 0; i <= nmax; ++i)
    for (int k = 0; i + k <= nmax; ++k) s(i + k) += pxy(i) * pz(k);
  return s;
}

}  // namespace trapimp
