#pragma once

#include <Eigen/Dense>

#include "semdrop/rng.hpp"
#include "semdrop/types.hpp"

namespace semdrop {

struct InformationResult {
  Eigen::MatrixXd info;   // -e_hat - c_hat, symmetrized
  Eigen::MatrixXd e_hat;  // mean complete-data Hessian over the draws
  Eigen::MatrixXd c_hat;  // sample covariance of the complete-data scores
  int m_se = 0;
};

// Complete-data log-likelihood over the joint parameters: the normal response
// part plus the Bernoulli dropout part on the at-risk rows.
double complete_data_loglik(const ResponseModelParams& theta, const DropoutParams& psi,
                            const CompletedData& data);

// Gradient of the complete-data log-likelihood in the packed raw parameters
// (beta, sigma, rho, psi), by central differences with step
// h_r = 1e-5 * max(1, |param_r|).
Eigen::VectorXd complete_data_score(const ResponseModelParams& theta,
                                    const DropoutParams& psi, const CompletedData& data);

// Central second-difference Hessian on the same stencil, symmetric by
// construction.
Eigen::MatrixXd complete_data_hessian(const ResponseModelParams& theta,
                                      const DropoutParams& psi, const CompletedData& data);

// Monte Carlo Louis information: draws m_se pseudo-completions with the
// S-step at the fixed estimates, averages the Hessians and takes the sample
// covariance of the scores. Covariates of `ds` must be complete.
InformationResult monte_carlo_information(const ResponseModelParams& theta_hat,
                                          const DropoutParams& psi_hat,
                                          const LongitudinalDataset& ds, int m_se,
                                          Rng& rng);

struct StandardErrors {
  Eigen::VectorXd se;
  Eigen::VectorXd p_values;
};

// SE_r = sqrt((info^{-1})_rr) with two-sided normal p-values for
// estimate/SE. A non-positive diagonal of the inverse is reported as a
// definiteness error, never clamped.
StandardErrors standard_errors(const Eigen::MatrixXd& info, const Eigen::VectorXd& estimates);

}  // namespace semdrop
