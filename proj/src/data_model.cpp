#include "semdrop/data_model.hpp"

#include <algorithm>
#include <cmath>

#include "semdrop/errors.hpp"
#include "semdrop/linalg.hpp"

namespace semdrop {

Eigen::MatrixXd ar1_covariance(double sigma, double rho, int t) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
  if (!(std::abs(rho) < 1.0)) throw DomainError("|rho| must be below 1");
  if (t < 1) throw DomainError("t must be at least 1");
  const double s2 = sigma * sigma;
  Eigen::MatrixXd cov(t, t);
  for (int i = 0; i < t; ++i) {
    cov(i, i) = s2;
    for (int j = 0; j < i; ++j) {
      const double v = s2 * std::pow(rho, i - j);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  return cov;
}

ConditionalMoments conditional_normal(const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& cov,
                                      const std::vector<int>& observed,
                                      const Eigen::VectorXd& observed_values) {
  const int t = static_cast<int>(mean.size());
  if (cov.rows() != t || cov.cols() != t) {
    throw ContractError("conditional_normal: mean/cov dimensions disagree");
  }
  if (observed.empty() || static_cast<int>(observed.size()) >= t) {
    throw ContractError("conditional_normal: observed set must be a non-empty proper subset");
  }
  if (observed_values.size() != static_cast<Eigen::Index>(observed.size())) {
    throw ContractError("conditional_normal: observed values/indices disagree");
  }
  std::vector<bool> is_observed(static_cast<std::size_t>(t), false);
  for (int idx : observed) {
    if (idx < 0 || idx >= t) throw ContractError("conditional_normal: index out of range");
    if (is_observed[static_cast<std::size_t>(idx)]) {
      throw ContractError("conditional_normal: duplicate observed index");
    }
    is_observed[static_cast<std::size_t>(idx)] = true;
  }
  std::vector<int> free;
  for (int i = 0; i < t; ++i) {
    if (!is_observed[static_cast<std::size_t>(i)]) free.push_back(i);
  }
  const int q = static_cast<int>(free.size());
  const int o = static_cast<int>(observed.size());

  Eigen::MatrixXd s11(q, q), s12(q, o), s22(o, o);
  Eigen::VectorXd mu1(q), mu2(o);
  for (int a = 0; a < q; ++a) {
    mu1(a) = mean(free[a]);
    for (int b = 0; b < q; ++b) s11(a, b) = cov(free[a], free[b]);
    for (int b = 0; b < o; ++b) s12(a, b) = cov(free[a], observed[b]);
  }
  for (int a = 0; a < o; ++a) {
    mu2(a) = mean(observed[a]);
    for (int b = 0; b < o; ++b) s22(a, b) = cov(observed[a], observed[b]);
  }

  const Eigen::MatrixXd l22 = cholesky_spd(s22);
  const Eigen::VectorXd w = chol_solve(l22, Eigen::VectorXd(observed_values - mu2));
  const Eigen::MatrixXd s22inv_s21 = chol_solve(l22, Eigen::MatrixXd(s12.transpose()));

  ConditionalMoments out;
  out.mean = mu1 + s12 * w;
  out.cov = symmetrize(s11 - s12 * s22inv_s21);
  return out;
}

double mvn_loglik(const Eigen::MatrixXd& y_rows, const Eigen::MatrixXd& x_rows,
                  const ResponseModelParams& params) {
  params.validate();
  const auto n = y_rows.rows();
  const int t = static_cast<int>(y_rows.cols());
  if (x_rows.rows() != n) throw ContractError("mvn_loglik: row counts disagree");
  if (params.beta.size() != x_rows.cols() + 1) {
    throw ContractError("mvn_loglik: beta length does not match covariate count");
  }
  if (!y_rows.allFinite() || !x_rows.allFinite()) {
    throw ContractError("mvn_loglik: rows must be complete");
  }
  const Eigen::MatrixXd cov = ar1_covariance(params.sigma, params.rho, t);
  const Eigen::MatrixXd l = cholesky_spd(cov);
  const Eigen::MatrixXd design = design_with_intercept(x_rows);
  const Eigen::VectorXd m = design * params.beta;
  double total = 0.0;
  Eigen::VectorXd mu(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu.setConstant(m(i));
    total += mvn_logpdf(y_rows.row(i).transpose(), mu, l);
  }
  return total;
}

MvnSuffStats MvnSuffStats::build(const Eigen::MatrixXd& y_rows, const Eigen::MatrixXd& x_rows) {
  if (y_rows.rows() != x_rows.rows()) throw ContractError("suff stats: row counts disagree");
  MvnSuffStats s;
  s.n = y_rows.rows();
  s.t = static_cast<int>(y_rows.cols());
  const Eigen::MatrixXd design = design_with_intercept(x_rows);
  s.syy = y_rows.transpose() * y_rows;
  s.cyx = y_rows.transpose() * design;
  s.gxx = design.transpose() * design;
  return s;
}

double mvn_loglik(const MvnSuffStats& stats, const ResponseModelParams& params) {
  static const double kLog2Pi = std::log(2.0 * M_PI);
  params.validate();
  if (params.beta.size() != stats.gxx.rows()) {
    throw ContractError("mvn_loglik: beta length does not match sufficient statistics");
  }
  const Eigen::MatrixXd cov = ar1_covariance(params.sigma, params.rho, stats.t);
  const Eigen::MatrixXd l = cholesky_spd(cov);
  const Eigen::MatrixXd cov_inv = chol_inverse(l);
  const Eigen::VectorXd u = cov_inv * Eigen::VectorXd::Ones(stats.t);
  const double ones_quad = u.sum();  // 1' Sigma^{-1} 1

  const double trace_term = (cov_inv.array() * stats.syy.array()).sum();
  const Eigen::VectorXd ym = stats.cyx * params.beta;  // sum_i m_i y_i
  const double cross_term = u.dot(ym);
  const double mm = params.beta.dot(stats.gxx * params.beta);  // sum_i m_i^2

  const double quad = trace_term - 2.0 * cross_term + ones_quad * mm;
  const double n = static_cast<double>(stats.n);
  return -0.5 * (n * stats.t * kLog2Pi + n * chol_logdet(l) + quad);
}

}  // namespace semdrop
