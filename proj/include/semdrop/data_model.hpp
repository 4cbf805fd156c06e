#pragma once

#include <Eigen/Dense>
#include <vector>

#include "semdrop/types.hpp"

namespace semdrop {

// AR(1) covariance: Sigma_ij = sigma^2 rho^|i-j|. Requires sigma > 0,
// |rho| < 1, t >= 1; the result is symmetric positive definite.
Eigen::MatrixXd ar1_covariance(double sigma, double rho, int t);

struct ConditionalMoments {
  Eigen::VectorXd mean;  // over the unobserved block, in increasing index order
  Eigen::MatrixXd cov;
};

// Exact Gaussian conditional moments of the unobserved block of N(mean, cov)
// given cov SPD and values at `observed` (0-based indices, a non-empty proper
// subset). Conditioning goes through a Cholesky factor of the observed block.
ConditionalMoments conditional_normal(const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& cov,
                                      const std::vector<int>& observed,
                                      const Eigen::VectorXd& observed_values);

// Complete-data log-likelihood of the response model: sum over subjects of
// the multivariate normal log density with mean (beta0 + sum_c beta_c x_ic)
// constant over occasions and AR(1) covariance. Rows must be complete.
double mvn_loglik(const Eigen::MatrixXd& y_rows, const Eigen::MatrixXd& x_rows,
                  const ResponseModelParams& params);

// Sufficient statistics for the same likelihood. The evaluation below is
// algebraically identical to mvn_loglik but costs O(t^3 + t^2 k) per call
// independently of n, which is what makes the inner Newton loops cheap.
struct MvnSuffStats {
  long n = 0;
  int t = 0;
  Eigen::MatrixXd syy;  // t x t, sum_i y_i y_i'
  Eigen::MatrixXd cyx;  // t x (k+1), Y' [1 X]
  Eigen::MatrixXd gxx;  // (k+1) x (k+1), [1 X]' [1 X]

  static MvnSuffStats build(const Eigen::MatrixXd& y_rows, const Eigen::MatrixXd& x_rows);
};

double mvn_loglik(const MvnSuffStats& stats, const ResponseModelParams& params);

}  // namespace semdrop
