#ifndef MINFER_FD_H
#define MINFER_FD_H

#include "minfer/common.hpp"

namespace minfer {

/* Central finite differences on a scalar function of chart coordinates.
 * Default steps: 1e-5 for gradients, 1e-4 for Hessians. */

template <typename F>
VectorXd fd_gradient(F&& f, const VectorXd& x0, double h = 1e-5) {
  const int p = static_cast<int>(x0.size());
  VectorXd g(p), x = x0;
  for (int i = 0; i < p; ++i) {
    x(i) = x0(i) + h;
    double fp = f(x);
    x(i) = x0(i) - h;
    double fm = f(x);
    x(i) = x0(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

template <typename F>
MatrixXd fd_hessian(F&& f, const VectorXd& x0, double h = 1e-4) {
  const int p = static_cast<int>(x0.size());
  MatrixXd H(p, p);
  VectorXd x = x0;
  const double f0 = f(x0);
  for (int i = 0; i < p; ++i) {
    x(i) = x0(i) + h;
    double fp = f(x);
    x(i) = x0(i) - h;
    double fm = f(x);
    x(i) = x0(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      x(i) = x0(i) + h;
      x(j) = x0(j) + h;
      double fpp = f(x);
      x(j) = x0(j) - h;
      double fpm = f(x);
      x(i) = x0(i) - h;
      double fmm = f(x);
      x(j) = x0(j) + h;
      double fmp = f(x);
      x(i) = x0(i);
      x(j) = x0(j);
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return H;
}

}  // namespace minfer

#endif
