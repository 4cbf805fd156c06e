#include "semdrop/linalg.hpp"

#include <cmath>

#include "semdrop/errors.hpp"

namespace semdrop {

Eigen::MatrixXd cholesky_spd(const Eigen::MatrixXd& a, double pivot_rel_tol) {
  const auto n = a.rows();
  if (n == 0 || a.cols() != n) {
    throw ContractError("cholesky_spd: matrix must be square and non-empty");
  }
  const double max_diag = a.diagonal().maxCoeff();
  if (!(max_diag > 0.0) || !std::isfinite(max_diag)) {
    throw LinalgError("cholesky_spd: diagonal is not positive");
  }
  const double threshold = pivot_rel_tol * max_diag;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot >= threshold)) {
      throw LinalgError("cholesky_spd: pivot " + std::to_string(pivot) + " at index " +
                        std::to_string(j) + " below threshold");
    }
    l(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double s = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Eigen::VectorXd chol_solve(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& b) {
  Eigen::VectorXd y = chol_lower.triangularView<Eigen::Lower>().solve(b);
  return chol_lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& chol_lower, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd y = chol_lower.triangularView<Eigen::Lower>().solve(b);
  return chol_lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

double chol_logdet(const Eigen::MatrixXd& chol_lower) {
  return 2.0 * chol_lower.diagonal().array().log().sum();
}

Eigen::MatrixXd chol_inverse(const Eigen::MatrixXd& chol_lower) {
  const auto n = chol_lower.rows();
  return chol_solve(chol_lower, Eigen::MatrixXd::Identity(n, n));
}

double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& chol_lower) {
  static const double kLog2Pi = std::log(2.0 * M_PI);
  const Eigen::VectorXd z =
      chol_lower.triangularView<Eigen::Lower>().solve(y - mean);
  const double t = static_cast<double>(y.size());
  return -0.5 * (t * kLog2Pi + chol_logdet(chol_lower) + z.squaredNorm());
}

Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower,
                           Rng& rng) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + chol_lower * z;
}

}  // namespace semdrop
