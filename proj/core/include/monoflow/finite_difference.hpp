#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace monoflow::fd {

inline double step_cbrt_eps(double z) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return std::max(1.0, std::abs(z)) * base;
}

inline double step_qrt_eps(double z) {
  static const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  return std::max(1.0, std::abs(z)) * base;
}

// Rounds h so that z + h - z == h exactly.
inline double representable(double z, double h) {
  volatile double t = z + h;
  return t - z;
}

/// Central-difference Jacobian of a vector function `f(z) -> VectorXd`.
template <class F>
Eigen::MatrixXd jacobian(F&& f, const Eigen::VectorXd& z, Eigen::Index rows) {
  Eigen::MatrixXd jac(rows, z.size());
  Eigen::VectorXd zp = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double h = representable(z[j], step_cbrt_eps(z[j]));
    zp[j] = z[j] + h;
    const Eigen::VectorXd fp = f(zp);
    zp[j] = z[j] - h;
    const Eigen::VectorXd fm = f(zp);
    zp[j] = z[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Symmetrized central-difference Hessian of a scalar function `g(z)`.
template <class G>
Eigen::MatrixXd hessian(G&& g, const Eigen::VectorXd& z) {
  const Eigen::Index d = z.size();
  Eigen::VectorXd h(d);
  for (Eigen::Index j = 0; j < d; ++j) h[j] = representable(z[j], step_qrt_eps(z[j]));

  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd p = z;
  const double g0 = g(z);
  for (Eigen::Index i = 0; i < d; ++i) {
    p[i] = z[i] + h[i];
    const double gp = g(p);
    p[i] = z[i] - h[i];
    const double gm = g(p);
    p[i] = z[i];
    hess(i, i) = (gp - 2.0 * g0 + gm) / (h[i] * h[i]);

    for (Eigen::Index j = i + 1; j < d; ++j) {
      p[i] = z[i] + h[i];
      p[j] = z[j] + h[j];
      const double gpp = g(p);
      p[j] = z[j] - h[j];
      const double gpm = g(p);
      p[i] = z[i] - h[i];
      const double gmm = g(p);
      p[j] = z[j] + h[j];
      const double gmp = g(p);
      p[i] = z[i];
      p[j] = z[j];
      hess(i, j) = (gpp - gpm - gmp + gmm) / (4.0 * h[i] * h[j]);
      hess(j, i) = hess(i, j);
    }
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace monoflow::fd
