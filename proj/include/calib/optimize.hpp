#pragma once

#include <cmath>
#include <cstdint>

namespace calib {

struct BrentResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Brent's bracketing scalar minimizer on [lo, hi]. Stops when the
/// bracket shrinks below rel_tol * |x| + abs_tol.
template <class F>
BrentResult brent_minimize(F f, double lo, double hi, double rel_tol,
                           int max_iter = 200, double abs_tol = 1e-300) {
  const double golden = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  double fw = fx, fv = fx;
  double delta = 0.0, delta2 = 0.0;

  BrentResult res;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    double mid = 0.5 * (a + b);
    double tol = rel_tol * std::abs(x) + abs_tol;
    if (std::abs(x - mid) <= 2.0 * tol - 0.5 * (b - a)) {
      res.converged = true;
      break;
    }
    double u;
    if (std::abs(delta2) > tol) {
      // parabolic fit through x, w, v
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      double td = delta2;
      delta2 = delta;
      if (std::abs(p) >= std::abs(0.5 * q * td) || p <= q * (a - x) ||
          p >= q * (b - x)) {
        delta2 = (x >= mid) ? a - x : b - x;
        delta = golden * delta2;
      } else {
        delta = p / q;
        u = x + delta;
        if (u - a < 2.0 * tol || b - u < 2.0 * tol)
          delta = (mid - x < 0.0) ? -tol : tol;
      }
    } else {
      delta2 = (x >= mid) ? a - x : b - x;
      delta = golden * delta2;
    }
    u = (std::abs(delta) >= tol) ? x + delta
                                 : x + ((delta > 0.0) ? tol : -tol);
    double fu = f(u);
    if (fu <= fx) {
      if (u >= x)
        a = x;
      else
        b = x;
      v = w; w = x; x = u;
      fv = fw; fw = fx; fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w; w = u;
        fv = fw; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  res.x = x;
  res.fx = fx;
  return res;
}

}  // namespace calib
