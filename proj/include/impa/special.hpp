#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "impa/constants.hpp"
#include "impa/error.hpp"

namespace impa::special {

/// I1(u)/u for u >= 0. Finite at u = 0 (value 1/2).
///
/// The power series has only positive terms, so it is used well past the usual
/// crossover; the asymptotic expansion takes over only where the series would
/// need hundreds of terms.
inline double bessel_i1_over_x(double u) {
  u = std::abs(u);
  if (u <= 40.0) {
    const double q = 0.25 * u * u;
    double term = 0.5;  // k = 0: 1 / (0! 1!) / 2
    double sum = term;
    for (int k = 1; k < 500; ++k) {
      term *= q / (static_cast<double>(k) * static_cast<double>(k + 1));
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum;
  }
  // I_nu(u) ~ e^u / sqrt(2 pi u) * sum_k (-1)^k a_k(nu) / u^k, with mu = 4 nu^2 = 4.
  const double mu = 4.0;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * u);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return std::exp(u) / std::sqrt(2.0 * constants::pi * u) * sum / u;
}

inline double bessel_i1(double u) {
  const double r = bessel_i1_over_x(u) * std::abs(u);
  return u < 0.0 ? -r : r;
}

/// Arithmetic-geometric mean of two nonnegative numbers.
inline double agm(double a, double b) {
  for (int i = 0; i < 64; ++i) {
    if (std::abs(a - b) <= 1e-16 * a) break;
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return 0.5 * (a + b);
}

/// Complete elliptic integral of the first kind K(k), given modulus k and
/// complementary modulus k' = sqrt(1 - k^2) (passed separately to avoid
/// cancellation when k is close to 1).
inline double elliptic_k(double k, double k_complement) {
  (void)k;
  if (!(k_complement > 0.0)) return std::numeric_limits<double>::infinity();
  return constants::pi / (2.0 * agm(1.0, k_complement));
}

inline double elliptic_k(double k) {
  return elliptic_k(k, std::sqrt((1.0 - k) * (1.0 + k)));
}

/// 7-point Gauss / 15-point Kronrod adaptive quadrature.
class GaussKronrod {
 public:
  struct Estimate {
    double value;
    double error;
  };

  explicit GaussKronrod(double abs_tolerance = 1e-10, int max_depth = 50)
      : tolerance_(abs_tolerance), max_depth_(max_depth) {}

  double integrate(const std::function<double(double)>& f, double a, double b) const {
    if (a == b) return 0.0;
    return refine(f, a, b, tolerance_, 0);
  }

  static Estimate panel(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWeightsKronrod[7];
    double gauss = fc * kWeightsGauss[3];
    for (int j = 0; j < 7; ++j) {
      const double dx = half * kNodes[j];
      const double sum = f(center - dx) + f(center + dx);
      kronrod += kWeightsKronrod[j] * sum;
      if (j % 2 == 1) gauss += kWeightsGauss[j / 2] * sum;
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half)};
  }

 private:
  double refine(const std::function<double(double)>& f, double a, double b, double tol,
                int depth) const {
    const Estimate whole = panel(f, a, b);
    if (whole.error <= tol || depth >= max_depth_) return whole.value;
    const double mid = 0.5 * (a + b);
    return refine(f, a, mid, 0.5 * tol, depth + 1) + refine(f, mid, b, 0.5 * tol, depth + 1);
  }

  // Kronrod abscissae x_1..x_7 (descending); odd indices are the Gauss points.
  static constexpr std::array<double, 7> kNodes = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245};
  static constexpr std::array<double, 8> kWeightsKronrod = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> kWeightsGauss = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  double tolerance_;
  int max_depth_;
};

}  // namespace impa::special
