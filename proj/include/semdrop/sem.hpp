#pragma once

#include <Eigen/Dense>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "semdrop/imputer.hpp"
#include "semdrop/rng.hpp"
#include "semdrop/types.hpp"

namespace semdrop {

struct SemConfig {
  int n_iterations = 500;
  int burn_in = 100;
  double m2_tolerance = 1e-6;
  int m2_max_iter = 100;
  long max_reject = 100000;

  void validate() const;
};

struct SemIterationRecord {
  ResponseModelParams theta;
  DropoutParams psi;
  long accept_attempts = 0;  // candidate draws spent by the S-step this iteration
};

struct SemChain {
  std::vector<SemIterationRecord> records;
  int burn_in = 0;

  // Coordinate-wise mean of the post-burn-in segment.
  std::pair<ResponseModelParams, DropoutParams> segment_mean() const;
};

struct FitResult {
  ResponseModelParams theta_hat;
  DropoutParams psi_hat;
  Eigen::VectorXd se;        // packed order; empty when SEs were not requested
  Eigen::VectorXd p_values;  // two-sided normal approximation
  int m = 0;                 // imputations pooled over
  std::vector<SemChain> chains;

  Eigen::VectorXd estimates() const { return pack_params(theta_hat, psi_hat); }
};

// P(drop | current, previous) = inverse-logit(psi0 + psi1 y_cur + psi2 y_prev).
double dropout_probability(double y_current, double y_previous, const DropoutParams& psi);

// S-step for one subject. Occasion d is drawn from the Gaussian conditional
// given occasions 1..d-1 and accepted with the dropout probability of the
// candidate (rejection sampling from f(y_d | history, D=d)); occasions
// d+1..t are then filled by one direct draw from their Gaussian conditional
// given occasions 1..d. A subject without dropout is returned unchanged.
// mu/cov are the subject's response moments under the current theta.
Eigen::VectorXd s_step(const Eigen::VectorXd& row, std::optional<int> d,
                       const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                       const DropoutParams& psi, Rng& rng, long max_reject,
                       long* attempts_out = nullptr);

// Logistic MLE of the dropout model by iteratively reweighted least squares,
// warm-started at `start`. The design has one row per at-risk occasion
// j = 2..min(d, t): outcome 1 at the dropout occasion, regressors
// (1, y_j, y_{j-1}) with y_j the possibly imputed current value.
DropoutParams m1_logistic(const CompletedData& data, const DropoutParams& start);

// Normal-model MLE over (beta, log sigma, atanh rho) by Newton-Raphson with
// step halving; convergence when the parameter change drops below tol. With a
// single occasion rho is not identified and stays at its starting value.
ResponseModelParams m2_normal(const CompletedData& data, const ResponseModelParams& start,
                              double tol = 1e-6, int max_iter = 100);

// Starting values: pooled OLS over observed cells for beta, the residual
// standard deviation for sigma, rho = 0; psi0 at the logit of the empirical
// dropout rate over at-risk occasions (clamped away from 0 and 1), slopes 0.
ResponseModelParams initial_theta(const LongitudinalDataset& ds, const Eigen::MatrixXd& x);
DropoutParams initial_psi(const LongitudinalDataset& ds);

struct SemRunResult {
  SemChain chain;
  ResponseModelParams theta_hat;
  DropoutParams psi_hat;
};

// One stochastic EM chain on a dataset with complete covariates. Each
// iteration: S-step under the previous parameters, then M1 and M2 on the
// pseudo-complete data. Point estimates are the post-burn-in chain means. A
// failed iteration is retried once with fresh S-step draws.
SemRunResult sem_run(const LongitudinalDataset& ds, const SemConfig& config,
                     const ResponseModelParams& init_theta, const DropoutParams& init_psi,
                     Rng& rng);

// Coordinate-wise mean over per-imputation estimates.
std::pair<ResponseModelParams, DropoutParams> pool_mi(
    const std::vector<std::pair<ResponseModelParams, DropoutParams>>& estimates);

struct FitOptions {
  ImputationMethod method = ImputationMethod::kRegression;
  int m = 10;
  int k0 = 5;
  SemConfig sem;
  bool with_se = true;
  int m_se = 200;
  int jobs = 1;
};

// Full pipeline: multiple imputation of the covariates, one SEM chain per
// completed set, pooling by averaging, then Monte Carlo standard errors at
// the pooled estimates. At least half the imputation-level runs must succeed.
FitResult fit(const LongitudinalDataset& ds, const FitOptions& options, RngKey key);

}  // namespace semdrop
