#pragma once

#include <Eigen/Dense>

#include "semdrop/rng.hpp"

namespace semdrop {

// Lower Cholesky factor of an SPD matrix. Rejects when any pivot falls below
// pivot_rel_tol times the largest diagonal entry of the input.
Eigen::MatrixXd cholesky_spd(const Eigen::MatrixXd& a, double pivot_rel_tol = 1e-12);

// Solves A x = b given the lower factor L of A = L L'.
Eigen::VectorXd chol_solve(const Eigen::MatrixXd& chol_lower, const Eigen::VectorXd& b);

// Same, for a matrix right-hand side.
Eigen::MatrixXd chol_solve(const Eigen::MatrixXd& chol_lower, const Eigen::MatrixXd& b);

// log|A| from the lower factor of A.
double chol_logdet(const Eigen::MatrixXd& chol_lower);

// A^{-1} from the lower factor of A.
Eigen::MatrixXd chol_inverse(const Eigen::MatrixXd& chol_lower);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Log density of N(mean, cov) at y, with cov supplied as its lower factor.
double mvn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& chol_lower);

// One draw from N(mean, cov) with cov supplied as its lower factor.
Eigen::VectorXd mvn_sample(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower,
                           Rng& rng);

}  // namespace semdrop
