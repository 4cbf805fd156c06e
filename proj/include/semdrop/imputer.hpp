#pragma once

#include <Eigen/Dense>
#include <vector>

#include "semdrop/rng.hpp"
#include "semdrop/types.hpp"

namespace semdrop {

// One fitted imputation regression: OLS coefficients, residual variance, and
// the scaled coefficient covariance V = (X'X)^{-1}, so that the coefficient
// covariance is sigma^2 V.
struct ImputationFit {
  Eigen::VectorXd beta_hat;  // length q+1, intercept first
  double sigma2_hat = 0.0;
  Eigen::MatrixXd v;
  int n_obs = 0;
  int df = 0;
};

// One draw from the posterior of the imputation-model parameters.
struct PosteriorDraw {
  Eigen::VectorXd beta_star;
  double sigma2_star = 0.0;
};

enum class ImputationMethod { kRegression, kPmm };

// OLS of target on [1 | predictors] over the rows flagged observed.
// Requires at least q+2 observed rows and a full-rank design; an exactly
// zero residual variance is rejected as a degenerate fit.
ImputationFit fit_imputation_model(const Eigen::VectorXd& target,
                                   const std::vector<bool>& target_observed,
                                   const Eigen::MatrixXd& predictors);

// Deterministic core of the posterior draw: sigma2* = sigma2_hat * df / g and
// beta* = beta_hat + sqrt(sigma2*) U' z, with U the upper Cholesky factor of
// v (v = U'U).
PosteriorDraw make_posterior_draw(const ImputationFit& fit, double g,
                                  const Eigen::VectorXd& z);
PosteriorDraw draw_posterior(const ImputationFit& fit, Rng& rng);

// Regression imputation: beta*'x plus sqrt(sigma2*) times a standard normal
// per missing row. predictors exclude the intercept column.
Eigen::VectorXd impute_regression_values(const PosteriorDraw& draw,
                                         const Eigen::MatrixXd& predictors_missing,
                                         const Eigen::VectorXd& z);
Eigen::VectorXd impute_regression(const PosteriorDraw& draw,
                                  const Eigen::MatrixXd& predictors_missing, Rng& rng);

// Predictive mean matching: each missing row's prediction under the posterior
// draw is matched against donor predictions under the point-estimate fit; one
// of the k0 nearest donors' observed values is sampled. Distance ties resolve
// to the lowest donor row index.
Eigen::VectorXd impute_pmm(const ImputationFit& fit, const PosteriorDraw& draw,
                           const Eigen::MatrixXd& predictors_missing,
                           const Eigen::MatrixXd& predictors_observed,
                           const Eigen::VectorXd& observed_targets, int k0, Rng& rng);

// M completed covariate matrices. Covariate columns are imputed sequentially
// in monotone order; predictors are the baseline response y_1 plus all
// preceding (observed or previously imputed) covariate columns. Observed
// cells pass through untouched.
std::vector<Eigen::MatrixXd> multiple_impute(const LongitudinalDataset& ds,
                                             ImputationMethod method, int m,
                                             RngKey key, int k0 = 5);

}  // namespace semdrop
