#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace semdrop {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Linear model parameters for the response: mean beta0 + sum_c beta_c x_ic
// (constant over occasions), AR(1) errors with scale sigma and lag-one
// correlation rho.
struct ResponseModelParams {
  Eigen::VectorXd beta;  // length k+1, intercept first
  double sigma = 1.0;
  double rho = 0.0;

  void validate() const;  // throws DomainError
};

// Logistic dropout model coefficients: intercept, current value, previous value.
struct DropoutParams {
  double psi0 = 0.0;
  double psi1 = 0.0;
  double psi2 = 0.0;

  void validate() const;  // throws DomainError on non-finite entries
};

// Logistic covariate-missingness model coefficients.
struct CovariateMissingnessParams {
  double eta0 = 0.0;
  double eta1 = 0.0;

  void validate() const;
};

// First unobserved occasion (1-based) of a monotone response mask, or nullopt
// for a fully observed subject. Throws PatternError on non-monotone masks or
// an unobserved first occasion.
std::optional<int> dropout_time(const std::vector<bool>& mask);

// Inverse of dropout_time: the mask implied by a dropout occasion.
std::vector<bool> mask_from_dropout_time(std::optional<int> d, int t);

// Longitudinal dataset: per-subject response rows over t occasions, a
// cross-sectional covariate matrix, and monotone missingness masks. Value
// object: immutable once constructed, safe to share across threads. Masked
// cells are stored as NaN; every operation consults the masks, never the
// stored sentinels.
class LongitudinalDataset {
 public:
  LongitudinalDataset(Eigen::MatrixXd y, Eigen::MatrixXd x, BoolArray y_mask,
                      BoolArray x_mask, std::vector<std::string> ids = {});

  int n() const { return static_cast<int>(y_.rows()); }
  int t() const { return static_cast<int>(y_.cols()); }
  int k() const { return static_cast<int>(x_.cols()); }

  const Eigen::MatrixXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const BoolArray& y_mask() const { return y_mask_; }
  const BoolArray& x_mask() const { return x_mask_; }
  const std::vector<std::string>& ids() const { return ids_; }

  // Dropout occasion of subject i, cached at construction.
  std::optional<int> dropout_of(int i) const { return dropout_[i]; }
  const std::vector<std::optional<int>>& dropout_times() const { return dropout_; }

  bool y_complete() const;
  bool x_complete() const;

  // Copy of this dataset with the covariate matrix replaced by a complete one.
  LongitudinalDataset with_covariates(Eigen::MatrixXd complete_x) const;

 private:
  Eigen::MatrixXd y_;
  Eigen::MatrixXd x_;
  BoolArray y_mask_;
  BoolArray x_mask_;
  std::vector<std::string> ids_;
  std::vector<std::optional<int>> dropout_;
};

// Pseudo-complete data: responses fully filled (observed values kept, missing
// ones imputed), covariates complete, and the original dropout occasions.
struct CompletedData {
  Eigen::MatrixXd y;
  Eigen::MatrixXd x;
  std::vector<std::optional<int>> dropout;

  int n() const { return static_cast<int>(y.rows()); }
  int t() const { return static_cast<int>(y.cols()); }
  int k() const { return static_cast<int>(x.cols()); }
};

// [x | intercept-first] design matrix used throughout: column of ones, then x.
Eigen::MatrixXd design_with_intercept(const Eigen::MatrixXd& x);

// Packing of the joint parameter vector (beta0..betak, sigma, rho, psi0, psi1,
// psi2) used by the chain records, the information matrix, and reports.
Eigen::VectorXd pack_params(const ResponseModelParams& theta, const DropoutParams& psi);
std::pair<ResponseModelParams, DropoutParams> unpack_params(const Eigen::VectorXd& v, int k);
std::vector<std::string> param_names(int k);

}  // namespace semdrop
