#include "trapimp/quadrature.hpp"

#include <array>
#include <cmath>

namespace trapimp {

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double k15;
  double g7;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    double dx = h * kXgk[j];
    double f1 = f(c - dx), f2 = f(c + dx);
    k += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) g += kWg[j / 2] * (f1 + f2);
  }
  return {k * h, g * h};
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol_density,
           double whole, int depth, int max_depth, QuadResult& out) {
  Panel p = gk15(f, a, b);
  out.evaluations += 15;
  double err = std::abs(p.k15 - p.g7);
  if (err <= tol_density * (b - a) || depth >= max_depth || !std::isfinite(err)) {
    out.value += p.k15;
    out.error += err;
    return;
  }
  double m = 0.5 * (a + b);
  adapt(f, a, m, tol_density, whole, depth + 1, max_depth, out);
  adapt(f, m, b, tol_density, whole, depth + 1, max_depth, out);
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, int max_depth) {
  QuadResult out;
  if (a == b) return out;
  if (b < a) {
    out = integrate(f, b, a, abs_tol, rel_tol, max_depth);
    out.value = -out.value;
    return out;
  }
  // a coarse pass fixes the relative scale
  Panel first = gk15(f, a, b);
  double tol = std::max(abs_tol, rel_tol * std::abs(first.k15));
  adapt(f, a, b, tol / (b - a), first.k15, 0, max_depth, out);
  out.evaluations += 15;
  return out;
}

}  // namespace trapimp
