#pragma once

// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x).
// Rational Chebyshev approximations of W. J. Cody (Math. Comp. 1969),
// following the CALERF packet from netlib specfun with JINT = 2.

#include <cmath>
#include <limits>

namespace slabwald::special {

inline double erfcx(double x) {
  static constexpr double a[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                                  3.77485237685302021e02, 3.20937758913846947e03,
                                  1.85777706184603153e-1};
  static constexpr double b[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                                  1.28261652607737228e03, 2.84423683343917062e03};
  static constexpr double c[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                                  6.61191906371416295e01, 2.98635138197400131e02,
                                  8.81952221241769090e02, 1.71204761263407058e03,
                                  2.05107837782607147e03, 1.23033935479799725e03,
                                  2.15311535474403846e-8};
  static constexpr double d[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                                  5.37181101862009858e02, 1.62138957456669019e03,
                                  3.29079923573345963e03, 4.36261909014324716e03,
                                  3.43936767414372164e03, 1.23033935480374942e03};
  static constexpr double p[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                                  1.25781726111229246e-1, 1.60837851487422766e-2,
                                  6.58749161529837803e-4, 1.63153871373020978e-2};
  static constexpr double q[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                                  5.27905102951428412e-1, 6.05183413124413191e-2,
                                  2.33520497626869185e-3};
  static constexpr double sqrpi = 5.6418958354775628695e-1;
  static constexpr double thresh = 0.46875;
  static constexpr double xneg = -26.628;
  static constexpr double xsmall = 1.11e-16;
  static constexpr double xhuge = 6.71e7;
  static constexpr double xmax = 2.53e307;

  if (std::isnan(x)) return x;
  const double y = std::abs(x);
  double result;
  if (y <= thresh) {
    const double ysq = y > xsmall ? y * y : 0.0;
    double xnum = a[4] * ysq;
    double xden = ysq;
    for (int i = 0; i < 3; ++i) {
      xnum = (xnum + a[i]) * ysq;
      xden = (xden + b[i]) * ysq;
    }
    result = 1.0 - x * (xnum + a[3]) / (xden + b[3]);
    return std::exp(ysq) * result;
  }
  if (y <= 4.0) {
    double xnum = c[8] * y;
    double xden = y;
    for (int i = 0; i < 7; ++i) {
      xnum = (xnum + c[i]) * y;
      xden = (xden + d[i]) * y;
    }
    result = (xnum + c[7]) / (xden + d[7]);
  } else if (y >= xhuge) {
    result = y >= xmax ? 0.0 : sqrpi / y;
  } else {
    const double ysq = 1.0 / (y * y);
    double xnum = p[5] * ysq;
    double xden = ysq;
    for (int i = 0; i < 4; ++i) {
      xnum = (xnum + p[i]) * ysq;
      xden = (xden + q[i]) * ysq;
    }
    result = ysq * (xnum + p[4]) / (xden + q[4]);
    result = (sqrpi - result) / y;
  }
  if (x < 0.0) {
    if (x < xneg) return std::numeric_limits<double>::infinity();
    const double ysq = std::trunc(x * 16.0) / 16.0;
    const double del = (x - ysq) * (x + ysq);
    const double e = std::exp(ysq * ysq) * std::exp(del);
    result = (e + e) - result;
  }
  return result;
}

}  // namespace slabwald::special
