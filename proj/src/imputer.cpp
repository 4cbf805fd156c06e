#include "semdrop/imputer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semdrop/errors.hpp"
#include "semdrop/linalg.hpp"

namespace semdrop {

ImputationFit fit_imputation_model(const Eigen::VectorXd& target,
                                   const std::vector<bool>& target_observed,
                                   const Eigen::MatrixXd& predictors) {
  const auto n = target.size();
  if (predictors.rows() != n || target_observed.size() != static_cast<std::size_t>(n)) {
    throw ContractError("fit_imputation_model: row counts disagree");
  }
  const int p = static_cast<int>(predictors.cols()) + 1;  // with intercept

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (target_observed[static_cast<std::size_t>(i)]) rows.push_back(i);
  }
  const int n_obs = static_cast<int>(rows.size());
  if (n_obs < p + 1) {
    throw DataError("fit_imputation_model: " + std::to_string(n_obs) +
                    " complete cases, need at least " + std::to_string(p + 1));
  }

  Eigen::MatrixXd design(n_obs, p);
  Eigen::VectorXd yy(n_obs);
  for (int r = 0; r < n_obs; ++r) {
    design(r, 0) = 1.0;
    design.row(r).tail(p - 1) = predictors.row(rows[static_cast<std::size_t>(r)]);
    yy(r) = target(rows[static_cast<std::size_t>(r)]);
  }
  if (!design.allFinite() || !yy.allFinite()) {
    throw ContractError("fit_imputation_model: predictors must be observed on complete cases");
  }

  const Eigen::MatrixXd xtx = design.transpose() * design;
  Eigen::MatrixXd l;
  try {
    l = cholesky_spd(xtx);
  } catch (const LinalgError&) {
    throw FitError("fit_imputation_model: predictor matrix is rank deficient");
  }

  ImputationFit fit;
  fit.beta_hat = chol_solve(l, Eigen::VectorXd(design.transpose() * yy));
  fit.v = symmetrize(chol_inverse(l));
  fit.n_obs = n_obs;
  fit.df = n_obs - p;
  const double rss = (yy - design * fit.beta_hat).squaredNorm();
  fit.sigma2_hat = rss / fit.df;
  const double scale = std::max(1e-300, yy.squaredNorm() / n_obs);
  if (fit.sigma2_hat <= 1e-10 * scale) {
    throw FitError("fit_imputation_model: residual variance is numerically zero "
                   "(target is an exact function of the predictors)");
  }
  return fit;
}

PosteriorDraw make_posterior_draw(const ImputationFit& fit, double g,
                                  const Eigen::VectorXd& z) {
  if (z.size() != fit.beta_hat.size()) {
    throw ContractError("make_posterior_draw: z length does not match coefficients");
  }
  if (!(g > 0.0)) throw NumericError("make_posterior_draw: chi-square draw must be positive");
  PosteriorDraw draw;
  draw.sigma2_star = fit.sigma2_hat * fit.df / g;
  Eigen::MatrixXd l;
  try {
    l = cholesky_spd(fit.v);
  } catch (const LinalgError& e) {
    throw NumericError(std::string("make_posterior_draw: Cholesky of v failed: ") + e.what());
  }
  // v = U'U with U = l'; beta* = beta_hat + sqrt(sigma2*) U' z = beta_hat + s l z
  draw.beta_star = fit.beta_hat + std::sqrt(draw.sigma2_star) * (l * z);
  return draw;
}

PosteriorDraw draw_posterior(const ImputationFit& fit, Rng& rng) {
  const double g = rng.chi_squared(fit.df);
  Eigen::VectorXd z(fit.beta_hat.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return make_posterior_draw(fit, g, z);
}

Eigen::VectorXd impute_regression_values(const PosteriorDraw& draw,
                                         const Eigen::MatrixXd& predictors_missing,
                                         const Eigen::VectorXd& z) {
  if (z.size() != predictors_missing.rows()) {
    throw ContractError("impute_regression_values: z length does not match rows");
  }
  const Eigen::MatrixXd design = design_with_intercept(predictors_missing);
  return design * draw.beta_star + std::sqrt(draw.sigma2_star) * z;
}

Eigen::VectorXd impute_regression(const PosteriorDraw& draw,
                                  const Eigen::MatrixXd& predictors_missing, Rng& rng) {
  Eigen::VectorXd z(predictors_missing.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return impute_regression_values(draw, predictors_missing, z);
}

Eigen::VectorXd impute_pmm(const ImputationFit& fit, const PosteriorDraw& draw,
                           const Eigen::MatrixXd& predictors_missing,
                           const Eigen::MatrixXd& predictors_observed,
                           const Eigen::VectorXd& observed_targets, int k0, Rng& rng) {
  const auto n_mis = predictors_missing.rows();
  const auto n_obs = predictors_observed.rows();
  if (observed_targets.size() != n_obs) {
    throw ContractError("impute_pmm: donor predictors/targets disagree");
  }
  if (k0 < 1) throw ContractError("impute_pmm: k0 must be at least 1");
  if (n_obs < k0) {
    throw DataError("impute_pmm: donor pool of " + std::to_string(n_obs) +
                    " is smaller than k0 = " + std::to_string(k0));
  }
  // Donor predictions under the point-estimate fit; recipient predictions
  // under the posterior draw.
  const Eigen::VectorXd donor_pred =
      design_with_intercept(predictors_observed) * fit.beta_hat;
  const Eigen::VectorXd recipient_pred =
      design_with_intercept(predictors_missing) * draw.beta_star;

  Eigen::VectorXd out(n_mis);
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n_obs));
  for (Eigen::Index r = 0; r < n_mis; ++r) {
    for (Eigen::Index i = 0; i < n_obs; ++i) {
      dist[static_cast<std::size_t>(i)] = {std::abs(donor_pred(i) - recipient_pred(r)), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + k0, dist.end());
    const int pick = rng.uniform_int(k0);
    out(r) = observed_targets(dist[static_cast<std::size_t>(pick)].second);
  }
  return out;
}

std::vector<Eigen::MatrixXd> multiple_impute(const LongitudinalDataset& ds,
                                             ImputationMethod method, int m,
                                             RngKey key, int k0) {
  if (m < 1) throw ContractError("multiple_impute: m must be at least 1");
  const int n = ds.n();
  const int k = ds.k();

  // Columns needing imputation, in monotone order.
  std::vector<int> incomplete_cols;
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < n; ++i) {
      if (!ds.x_mask()(i, c)) {
        incomplete_cols.push_back(c);
        break;
      }
    }
  }

  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Rng rng(key.child(stream::kImputation, static_cast<std::uint64_t>(j)));
    Eigen::MatrixXd completed = ds.x();
    for (int c : incomplete_cols) {
      // Predictors: baseline response plus all preceding covariate columns
      // (observed or imputed earlier in this pass).
      Eigen::MatrixXd predictors(n, 1 + c);
      predictors.col(0) = ds.y().col(0);
      for (int p = 0; p < c; ++p) predictors.col(1 + p) = completed.col(p);

      std::vector<bool> observed(static_cast<std::size_t>(n));
      std::vector<Eigen::Index> missing_rows;
      for (int i = 0; i < n; ++i) {
        observed[static_cast<std::size_t>(i)] = ds.x_mask()(i, c);
        if (!ds.x_mask()(i, c)) missing_rows.push_back(i);
      }

      const ImputationFit fit = fit_imputation_model(ds.x().col(c), observed, predictors);
      const PosteriorDraw draw = draw_posterior(fit, rng);

      Eigen::MatrixXd pred_missing(static_cast<Eigen::Index>(missing_rows.size()),
                                   predictors.cols());
      for (std::size_t r = 0; r < missing_rows.size(); ++r) {
        pred_missing.row(static_cast<Eigen::Index>(r)) = predictors.row(missing_rows[r]);
      }

      Eigen::VectorXd values;
      if (method == ImputationMethod::kRegression) {
        values = impute_regression(draw, pred_missing, rng);
      } else {
        const auto n_obs = static_cast<Eigen::Index>(n - missing_rows.size());
        Eigen::MatrixXd pred_observed(n_obs, predictors.cols());
        Eigen::VectorXd donor_targets(n_obs);
        Eigen::Index r = 0;
        for (int i = 0; i < n; ++i) {
          if (ds.x_mask()(i, c)) {
            pred_observed.row(r) = predictors.row(i);
            donor_targets(r) = ds.x()(i, c);
            ++r;
          }
        }
        values = impute_pmm(fit, draw, pred_missing, pred_observed, donor_targets, k0, rng);
      }
      for (std::size_t r = 0; r < missing_rows.size(); ++r) {
        completed(missing_rows[r], c) = values(static_cast<Eigen::Index>(r));
      }
    }
    out.push_back(std::move(completed));
  }
  return out;
}

}  // namespace semdrop
