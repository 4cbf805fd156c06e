#include "semdrop/types.hpp"

#include <cmath>
#include <limits>

#include "semdrop/errors.hpp"

namespace semdrop {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be finite");
  }
}
}  // namespace

void ResponseModelParams::validate() const {
  if (beta.size() < 1) throw DomainError("beta must have at least an intercept");
  for (Eigen::Index i = 0; i < beta.size(); ++i) require_finite(beta(i), "beta");
  require_finite(sigma, "sigma");
  require_finite(rho, "rho");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (!(std::abs(rho) < 1.0)) throw DomainError("|rho| must be below 1");
}

void DropoutParams::validate() const {
  require_finite(psi0, "psi0");
  require_finite(psi1, "psi1");
  require_finite(psi2, "psi2");
}

void CovariateMissingnessParams::validate() const {
  require_finite(eta0, "eta0");
  require_finite(eta1, "eta1");
}

std::optional<int> dropout_time(const std::vector<bool>& mask) {
  if (mask.empty()) throw PatternError("response mask is empty");
  if (!mask.front()) {
    throw PatternError("first occasion must be observed");
  }
  std::optional<int> d;
  for (std::size_t j = 1; j < mask.size(); ++j) {
    if (!mask[j]) {
      if (!d) d = static_cast<int>(j) + 1;  // 1-based
    } else if (d) {
      throw PatternError(
          "response mask is not monotone (a value is observed after a missing "
          "occasion); intermittent missingness is not supported");
    }
  }
  return d;
}

std::vector<bool> mask_from_dropout_time(std::optional<int> d, int t) {
  if (t < 1) throw ContractError("t must be at least 1");
  if (d && (*d < 2 || *d > t)) {
    throw ContractError("dropout occasion must lie in {2..t}");
  }
  std::vector<bool> mask(static_cast<std::size_t>(t), true);
  if (d) {
    for (int j = *d; j <= t; ++j) mask[static_cast<std::size_t>(j - 1)] = false;
  }
  return mask;
}

LongitudinalDataset::LongitudinalDataset(Eigen::MatrixXd y, Eigen::MatrixXd x,
                                         BoolArray y_mask, BoolArray x_mask,
                                         std::vector<std::string> ids)
    : y_(std::move(y)),
      x_(std::move(x)),
      y_mask_(std::move(y_mask)),
      x_mask_(std::move(x_mask)),
      ids_(std::move(ids)) {
  const auto n = y_.rows();
  const auto t = y_.cols();
  const auto k = x_.cols();
  if (n < 1 || t < 1) throw ContractError("dataset needs at least one subject and occasion");
  if (x_.rows() != n || y_mask_.rows() != n || y_mask_.cols() != t ||
      x_mask_.rows() != n || x_mask_.cols() != k) {
    throw ContractError("dataset matrices have inconsistent shapes");
  }
  if (ids_.empty()) {
    ids_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ids_.push_back(std::to_string(i + 1));
  } else if (ids_.size() != static_cast<std::size_t>(n)) {
    throw ContractError("id count does not match subject count");
  }

  dropout_.reserve(static_cast<std::size_t>(n));
  std::vector<bool> row(static_cast<std::size_t>(t));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) row[static_cast<std::size_t>(j)] = y_mask_(i, j);
    try {
      dropout_.push_back(dropout_time(row));
    } catch (const PatternError& e) {
      throw PatternError("subject " + ids_[static_cast<std::size_t>(i)] + ": " + e.what());
    }
    // covariate masks must be monotone across columns
    bool seen_missing = false;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (!x_mask_(i, c)) {
        seen_missing = true;
      } else if (seen_missing) {
        throw PatternError("subject " + ids_[static_cast<std::size_t>(i)] +
                           ": covariate mask is not monotone across columns");
      }
    }
  }

  // Masked storage carries no information: overwrite with NaN sentinels.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      if (!y_mask_(i, j)) y_(i, j) = kNaN;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (!x_mask_(i, c)) x_(i, c) = kNaN;
    }
  }
}

bool LongitudinalDataset::y_complete() const { return y_mask_.all(); }

bool LongitudinalDataset::x_complete() const {
  return x_mask_.size() == 0 || x_mask_.all();
}

LongitudinalDataset LongitudinalDataset::with_covariates(Eigen::MatrixXd complete_x) const {
  if (complete_x.rows() != y_.rows() || complete_x.cols() != x_.cols()) {
    throw ContractError("replacement covariate matrix has the wrong shape");
  }
  BoolArray full = BoolArray::Constant(complete_x.rows(), complete_x.cols(), true);
  return LongitudinalDataset(y_, std::move(complete_x), y_mask_, std::move(full), ids_);
}

Eigen::MatrixXd design_with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  if (x.cols() > 0) d.rightCols(x.cols()) = x;
  return d;
}

Eigen::VectorXd pack_params(const ResponseModelParams& theta, const DropoutParams& psi) {
  Eigen::VectorXd v(theta.beta.size() + 5);
  v.head(theta.beta.size()) = theta.beta;
  const auto b = theta.beta.size();
  v(b) = theta.sigma;
  v(b + 1) = theta.rho;
  v(b + 2) = psi.psi0;
  v(b + 3) = psi.psi1;
  v(b + 4) = psi.psi2;
  return v;
}

std::pair<ResponseModelParams, DropoutParams> unpack_params(const Eigen::VectorXd& v, int k) {
  const Eigen::Index b = k + 1;
  if (v.size() != b + 5) throw ContractError("packed parameter vector has the wrong length");
  ResponseModelParams theta;
  theta.beta = v.head(b);
  theta.sigma = v(b);
  theta.rho = v(b + 1);
  DropoutParams psi{v(b + 2), v(b + 3), v(b + 4)};
  return {theta, psi};
}

std::vector<std::string> param_names(int k) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(k) + 6);
  for (int c = 0; c <= k; ++c) names.push_back("beta" + std::to_string(c));
  names.emplace_back("sigma");
  names.emplace_back("rho");
  names.emplace_back("psi0");
  names.emplace_back("psi1");
  names.emplace_back("psi2");
  return names;
}

}  // namespace semdrop
