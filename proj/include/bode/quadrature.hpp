#ifndef BODE_QUADRATURE_HPP
#define BODE_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace bode::quad {

/// Gauss-Legendre nodes and weights on [a, b], via Newton iteration on the
/// Legendre polynomial roots.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m, double a,
                                                                          double b) {
  std::vector<double> x(m), w(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double mid = 0.5 * (a + b), len = 0.5 * (b - a);
    x[i] = mid - len * z;
    x[m - 1 - i] = mid + len * z;
    w[i] = 2.0 * len / ((1.0 - z * z) * pp * pp);
    w[m - 1 - i] = w[i];
  }
  return {x, w};
}

inline double integrate_gl(const std::function<double(double)>& f, double a, double b, int m) {
  auto [x, w] = gauss_legendre(m, a, b);
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += w[i] * f(x[i]);
  return s;
}

namespace detail {
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson with Richardson correction.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double tol = 1e-10, int max_depth = 40) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace bode::quad

#endif
