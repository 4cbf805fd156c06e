#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace semdrop {

// Step rule shared by every finite-difference consumer.
inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

// Central-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x) {
  const auto p = x.size();
  Eigen::VectorXd g(p);
  Eigen::VectorXd w = x;
  for (Eigen::Index r = 0; r < p; ++r) {
    const double h = fd_step(x(r));
    w(r) = x(r) + h;
    const double fp = f(w);
    w(r) = x(r) - h;
    const double fm = f(w);
    w(r) = x(r);
    g(r) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Central second-difference Hessian; symmetric in (r, s) by construction of
// the four-point cross stencil.
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x) {
  const auto p = x.size();
  Eigen::MatrixXd h_mat(p, p);
  const double f0 = f(x);
  Eigen::VectorXd w = x;
  for (Eigen::Index r = 0; r < p; ++r) {
    const double hr = fd_step(x(r));
    w(r) = x(r) + hr;
    const double fp = f(w);
    w(r) = x(r) - hr;
    const double fm = f(w);
    w(r) = x(r);
    h_mat(r, r) = (fp - 2.0 * f0 + fm) / (hr * hr);
    for (Eigen::Index s = r + 1; s < p; ++s) {
      const double hs = fd_step(x(s));
      w(r) = x(r) + hr;
      w(s) = x(s) + hs;
      const double fpp = f(w);
      w(s) = x(s) - hs;
      const double fpm = f(w);
      w(r) = x(r) - hr;
      const double fmm = f(w);
      w(s) = x(s) + hs;
      const double fmp = f(w);
      w(r) = x(r);
      w(s) = x(s);
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * hr * hs);
      h_mat(r, s) = v;
      h_mat(s, r) = v;
    }
  }
  return h_mat;
}

}  // namespace semdrop
