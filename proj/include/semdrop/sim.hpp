#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "semdrop/rng.hpp"
#include "semdrop/sem.hpp"
#include "semdrop/types.hpp"

namespace semdrop {

enum class SimMethod { kRegression, kPmm, kCompleteCovariates };

std::string to_string(SimMethod method);
SimMethod sim_method_from_string(const std::string& name);

// Simulation design. Defaults are the replication study's standard setting;
// every field can be overridden (the missingness parameters in particular,
// since the defaults produce very low realized rates).
struct SimDesign {
  int n = 25;
  int t = 5;
  Eigen::VectorXd beta = (Eigen::VectorXd(2) << 5.0, 10.0).finished();
  double sigma = 6.0;
  double rho = 0.7;
  DropoutParams psi{-17.0, 0.11, 0.13};
  CovariateMissingnessParams eta{-5.0, 0.06};
  int m = 10;
  int replications = 2000;
  SimMethod method = SimMethod::kRegression;
  int k0 = 5;
  SemConfig sem;
  bool mar_literal = false;
  int jobs = 1;

  ResponseModelParams theta() const { return ResponseModelParams{beta, sigma, rho}; }
  Eigen::VectorXd truth() const { return pack_params(theta(), psi); }
};

// Fully observed dataset: one standard-normal covariate per subject, AR(1)
// errors, y_ij = beta0 + beta1 x_i + eps_ij.
LongitudinalDataset generate_complete(const SimDesign& design, Rng& rng);

// Monotone response dropout: scanning occasions 2..t, a subject drops at the
// first occasion where a uniform draw falls below
// dropout_probability(y_j, y_{j-1}, psi). Occasion 1 is always observed.
LongitudinalDataset apply_response_dropout(const LongitudinalDataset& ds,
                                           const DropoutParams& psi, Rng& rng);

// Covariate missingness: subject i's covariates are masked with probability
// inverse-logit(eta0 + eta1 * y_i1), independently across subjects. With
// mar_literal the predictor is instead the previous subject's first
// covariate (0 for the first subject).
LongitudinalDataset apply_covariate_mar(const LongitudinalDataset& ds,
                                        const CovariateMissingnessParams& eta, Rng& rng,
                                        bool mar_literal = false);

// |estimate - truth| / |truth|; truth must be nonzero.
double relative_bias(double estimate, double truth);

struct ReplicationReport {
  Eigen::VectorXd truth;
  Eigen::VectorXd est;  // mean over successful replications
  Eigen::VectorXd rb;
  int replications = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;  // first few, for diagnostics
  double mean_dropout_fraction = 0.0;
  double mean_covariate_missing_fraction = 0.0;
};

// Replication study: generate, mask, fit, and average. Failed replications
// are counted and excluded; more than 5% failures raises a harness error.
ReplicationReport run_replications(const SimDesign& design, RngKey key);

// Report renderings: a parse-friendly CSV and an aligned text table with the
// rows True/Est/RB over columns beta0, beta1, rho, sigma, psi0, psi1, psi2.
std::string report_csv(const ReplicationReport& report);
std::string report_text(const ReplicationReport& report, const SimDesign& design,
                        std::uint64_t seed);

}  // namespace semdrop
