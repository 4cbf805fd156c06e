#include "semdrop/louis.hpp"

#include <cmath>

#include "semdrop/data_model.hpp"
#include "semdrop/errors.hpp"
#include "semdrop/fd.hpp"
#include "semdrop/linalg.hpp"
#include "semdrop/sem.hpp"

namespace semdrop {

namespace {

double log1pexp(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Bernoulli part of the complete-data likelihood: one trial per at-risk
// occasion j = 2..min(d, t), outcome 1 at the dropout occasion, linear
// predictor psi0 + psi1 y_j + psi2 y_{j-1}.
double dropout_loglik(const DropoutParams& psi, const CompletedData& data) {
  const int n = data.n();
  const int t = data.t();
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto d = data.dropout[static_cast<std::size_t>(i)];
    const int limit = d.value_or(t);
    for (int j = 2; j <= limit; ++j) {
      const double eta = psi.psi0 + psi.psi1 * data.y(i, j - 1) + psi.psi2 * data.y(i, j - 2);
      const double outcome = (d && *d == j) ? 1.0 : 0.0;
      ll += outcome * eta - log1pexp(eta);
    }
  }
  return ll;
}

// Evaluates the joint likelihood at a packed raw parameter vector. Any
// failure inside the stencil (invalid sigma/rho from a finite-difference
// step, non-finite values) surfaces as NumericError.
class PackedLoglik {
 public:
  explicit PackedLoglik(const CompletedData& data)
      : data_(data), stats_(MvnSuffStats::build(data.y, data.x)) {}

  double operator()(const Eigen::VectorXd& packed) const {
    try {
      const auto [theta, psi] = unpack_params(packed, data_.k());
      const double ll = mvn_loglik(stats_, theta) + dropout_loglik(psi, data_);
      if (!std::isfinite(ll)) {
        throw NumericError("complete-data likelihood is non-finite in the stencil");
      }
      return ll;
    } catch (const NumericError&) {
      throw;
    } catch (const Error& e) {
      throw NumericError(std::string("complete-data likelihood failed in the stencil: ") +
                         e.what());
    }
  }

 private:
  const CompletedData& data_;
  MvnSuffStats stats_;
};

}  // namespace

double complete_data_loglik(const ResponseModelParams& theta, const DropoutParams& psi,
                            const CompletedData& data) {
  return mvn_loglik(MvnSuffStats::build(data.y, data.x), theta) + dropout_loglik(psi, data);
}

Eigen::VectorXd complete_data_score(const ResponseModelParams& theta,
                                    const DropoutParams& psi, const CompletedData& data) {
  const PackedLoglik f(data);
  return fd_gradient([&f](const Eigen::VectorXd& v) { return f(v); },
                     pack_params(theta, psi));
}

Eigen::MatrixXd complete_data_hessian(const ResponseModelParams& theta,
                                      const DropoutParams& psi, const CompletedData& data) {
  const PackedLoglik f(data);
  const Eigen::MatrixXd h =
      fd_hessian([&f](const Eigen::VectorXd& v) { return f(v); }, pack_params(theta, psi));
  return symmetrize(h);
}

InformationResult monte_carlo_information(const ResponseModelParams& theta_hat,
                                          const DropoutParams& psi_hat,
                                          const LongitudinalDataset& ds, int m_se,
                                          Rng& rng) {
  theta_hat.validate();
  psi_hat.validate();
  if (m_se < 2) throw ContractError("monte_carlo_information: m_se must be at least 2");
  if (!ds.x_complete()) {
    throw ContractError("monte_carlo_information: covariates must be complete");
  }
  const int n = ds.n();
  const int t = ds.t();
  const int p = static_cast<int>(theta_hat.beta.size()) + 5;

  const Eigen::MatrixXd cov = ar1_covariance(theta_hat.sigma, theta_hat.rho, t);
  const Eigen::MatrixXd design = design_with_intercept(ds.x());
  const Eigen::VectorXd mean_levels = design * theta_hat.beta;

  std::vector<Eigen::VectorXd> scores;
  scores.reserve(static_cast<std::size_t>(m_se));
  Eigen::MatrixXd hess_sum = Eigen::MatrixXd::Zero(p, p);

  CompletedData cd;
  cd.x = ds.x();
  cd.dropout = ds.dropout_times();
  Eigen::VectorXd mu(t);
  for (int j = 0; j < m_se; ++j) {
    cd.y = ds.y();
    for (int i = 0; i < n; ++i) {
      const auto d = ds.dropout_of(i);
      if (!d) continue;
      mu.setConstant(mean_levels(i));
      cd.y.row(i) =
          s_step(cd.y.row(i).transpose(), d, mu, cov, psi_hat, rng, 100000).transpose();
    }
    scores.push_back(complete_data_score(theta_hat, psi_hat, cd));
    hess_sum += complete_data_hessian(theta_hat, psi_hat, cd);
  }

  InformationResult out;
  out.m_se = m_se;
  out.e_hat = symmetrize(hess_sum / static_cast<double>(m_se));

  // Deviations are accumulated against the first score so that identical
  // draws (no missing data) give an exactly zero covariance.
  Eigen::VectorXd delta_mean = Eigen::VectorXd::Zero(p);
  for (const auto& s : scores) delta_mean += s - scores.front();
  delta_mean /= static_cast<double>(m_se);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : scores) {
    const Eigen::VectorXd d = (s - scores.front()) - delta_mean;
    c.noalias() += d * d.transpose();
  }
  out.c_hat = symmetrize(c / static_cast<double>(m_se - 1));
  out.info = symmetrize(-out.e_hat - out.c_hat);
  return out;
}

StandardErrors standard_errors(const Eigen::MatrixXd& info, const Eigen::VectorXd& estimates) {
  const auto p = info.rows();
  if (info.cols() != p) throw ContractError("standard_errors: info must be square");
  if (estimates.size() != p) {
    throw ContractError("standard_errors: estimate length does not match info");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) {
    throw LinalgError("standard_errors: information matrix is singular");
  }
  const Eigen::MatrixXd inv = lu.inverse();
  StandardErrors out;
  out.se.resize(p);
  out.p_values.resize(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    const double v = inv(r, r);
    if (!(v > 0.0)) {
      throw DefinitenessError("standard_errors: (info^{-1})_" + std::to_string(r) + "," +
                              std::to_string(r) + " = " + std::to_string(v) +
                              " is not positive; the information matrix is not positive "
                              "definite");
    }
    out.se(r) = std::sqrt(v);
    const double z = std::abs(estimates(r)) / out.se(r);
    out.p_values(r) = std::erfc(z / std::sqrt(2.0));
  }
  return out;
}

}  // namespace semdrop
