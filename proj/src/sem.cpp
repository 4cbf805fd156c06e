#include "semdrop/sem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semdrop/data_model.hpp"
#include "semdrop/errors.hpp"
#include "semdrop/fd.hpp"
#include "semdrop/linalg.hpp"
#include "semdrop/log.hpp"
#include "semdrop/louis.hpp"
#include "semdrop/parallel.hpp"

namespace semdrop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double invlogit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double log1pexp(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

// Dropout-model design rows of a pseudo-complete dataset: one Bernoulli trial
// per at-risk occasion j = 2..min(d, t), outcome 1 at the dropout occasion.
struct DropoutRows {
  Eigen::MatrixXd design;  // columns (1, y_j, y_{j-1})
  Eigen::VectorXd outcome;
  int events = 0;
};

DropoutRows dropout_rows(const CompletedData& data) {
  const int n = data.n();
  const int t = data.t();
  long count = 0;
  for (int i = 0; i < n; ++i) {
    const int limit = data.dropout[static_cast<std::size_t>(i)].value_or(t);
    count += limit - 1;
  }
  DropoutRows rows;
  rows.design.resize(count, 3);
  rows.outcome.resize(count);
  long r = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = data.dropout[static_cast<std::size_t>(i)];
    const int limit = d.value_or(t);
    for (int j = 2; j <= limit; ++j) {
      rows.design(r, 0) = 1.0;
      rows.design(r, 1) = data.y(i, j - 1);
      rows.design(r, 2) = data.y(i, j - 2);
      rows.outcome(r) = (d && *d == j) ? 1.0 : 0.0;
      if (rows.outcome(r) == 1.0) ++rows.events;
      ++r;
    }
  }
  return rows;
}

double bernoulli_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                        const Eigen::Vector3d& psi) {
  const Eigen::VectorXd eta = design * psi;
  double ll = 0.0;
  for (Eigen::Index r = 0; r < eta.size(); ++r) {
    ll += outcome(r) * eta(r) - log1pexp(eta(r));
  }
  return ll;
}

// Logistic MLE by iteratively reweighted least squares with step halving.
Eigen::Vector3d logistic_irls(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                              Eigen::Vector3d psi) {
  constexpr int kMaxIter = 50;
  constexpr double kScoreTol = 1e-8;
  constexpr double kSeparationTol = 1e-8;
  const auto rows = design.rows();
  Eigen::VectorXd p(rows), w(rows);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd eta = design * psi;
    for (Eigen::Index r = 0; r < rows; ++r) p(r) = invlogit(eta(r));

    // Perfect separation: every fitted probability matches its outcome. The
    // MLE diverges, so this must fire before the score test can pass.
    bool separated = true;
    for (Eigen::Index r = 0; r < rows && separated; ++r) {
      if (outcome(r) == 1.0 ? p(r) <= 1.0 - kSeparationTol : p(r) >= kSeparationTol) {
        separated = false;
      }
    }
    if (separated) {
      throw SeparationError("m1_logistic: complete separation, the dropout MLE diverges");
    }

    const Eigen::Vector3d score = design.transpose() * (outcome - p);
    if (score.cwiseAbs().maxCoeff() < kScoreTol) return psi;

    for (Eigen::Index r = 0; r < rows; ++r) w(r) = std::max(p(r) * (1.0 - p(r)), 1e-12);
    const Eigen::Matrix3d hess = design.transpose() * w.asDiagonal() * design;
    Eigen::MatrixXd l;
    try {
      l = cholesky_spd(hess);
    } catch (const LinalgError& e) {
      throw NumericError(std::string("m1_logistic: singular weighted design: ") + e.what());
    }
    const Eigen::Vector3d step = chol_solve(l, Eigen::VectorXd(score));

    const double ll0 = bernoulli_loglik(design, outcome, psi);
    double alpha = 1.0;
    Eigen::Vector3d next = psi + step;
    for (int halving = 0; halving < 20 && bernoulli_loglik(design, outcome, next) < ll0;
         ++halving) {
      alpha *= 0.5;
      next = psi + alpha * step;
    }
    psi = next;
  }
  log_warn("m1_logistic: IRLS hit the iteration cap before the score tolerance");
  return psi;
}

}  // namespace

void SemConfig::validate() const {
  if (n_iterations < 1) throw DomainError("n_iterations must be positive");
  if (burn_in < 0 || burn_in >= n_iterations) {
    throw DomainError("burn_in must lie in [0, n_iterations)");
  }
  if (!(m2_tolerance > 0.0)) throw DomainError("m2_tolerance must be positive");
  if (m2_max_iter < 1) throw DomainError("m2_max_iter must be positive");
  if (max_reject < 1) throw DomainError("max_reject must be positive");
}

double dropout_probability(double y_current, double y_previous, const DropoutParams& psi) {
  return invlogit(psi.psi0 + psi.psi1 * y_current + psi.psi2 * y_previous);
}

Eigen::VectorXd s_step(const Eigen::VectorXd& row, std::optional<int> d,
                       const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                       const DropoutParams& psi, Rng& rng, long max_reject,
                       long* attempts_out) {
  if (attempts_out != nullptr) *attempts_out = 0;
  if (!d) return row;
  const int t = static_cast<int>(row.size());
  if (*d < 2 || *d > t) throw ContractError("s_step: dropout occasion out of range");

  Eigen::VectorXd filled = row;

  // Rejection sampling for the value at the dropout occasion: candidates from
  // the Gaussian conditional given the history, accepted with the candidate's
  // dropout probability. The accepted draw follows f(y_d | history, D=d).
  std::vector<int> history(static_cast<std::size_t>(*d - 1));
  for (int j = 0; j < *d - 1; ++j) history[static_cast<std::size_t>(j)] = j;
  const Eigen::VectorXd history_values = filled.head(*d - 1);
  const ConditionalMoments cond = conditional_normal(mu, cov, history, history_values);
  // With dropout at d, only index d-1 (0-based) precedes the remaining block
  // in `cond` ordering; its first coordinate is occasion d.
  const double cand_mean = cond.mean(0);
  const double cand_sd = std::sqrt(cond.cov(0, 0));
  const double y_prev = filled(*d - 2);

  long attempts = 0;
  double accepted = 0.0;
  bool done = false;
  long n_accept = 0;
  while (!done) {
    if (attempts >= max_reject) {
      const double rate =
          attempts > 0 ? static_cast<double>(n_accept) / static_cast<double>(attempts) : 0.0;
      if (attempts_out != nullptr) *attempts_out = attempts;
      throw SamplerStallError("s_step: accept-reject exceeded " + std::to_string(max_reject) +
                                  " attempts (acceptance estimate " + std::to_string(rate) + ")",
                              attempts, rate);
    }
    ++attempts;
    const double candidate = cand_mean + cand_sd * rng.normal();
    const double p = dropout_probability(candidate, y_prev, psi);
    if (rng.uniform01() <= p) {
      accepted = candidate;
      ++n_accept;
      done = true;
    }
  }
  filled(*d - 1) = accepted;
  if (attempts_out != nullptr) *attempts_out = attempts;

  // Occasions past the dropout occasion are treated as missing at random:
  // one direct draw from their Gaussian conditional given occasions 1..d.
  if (*d < t) {
    std::vector<int> observed(static_cast<std::size_t>(*d));
    for (int j = 0; j < *d; ++j) observed[static_cast<std::size_t>(j)] = j;
    const ConditionalMoments tail =
        conditional_normal(mu, cov, observed, filled.head(*d));
    const Eigen::MatrixXd l = cholesky_spd(tail.cov);
    const Eigen::VectorXd draw = mvn_sample(tail.mean, l, rng);
    filled.tail(t - *d) = draw;
  }
  return filled;
}

DropoutParams m1_logistic(const CompletedData& data, const DropoutParams& start) {
  start.validate();
  const DropoutRows rows = dropout_rows(data);
  if (rows.design.rows() == 0) {
    throw DataError("m1_logistic: no at-risk occasions (t must exceed 1)");
  }
  const Eigen::Vector3d psi =
      logistic_irls(rows.design, rows.outcome, Eigen::Vector3d(start.psi0, start.psi1, start.psi2));
  return DropoutParams{psi(0), psi(1), psi(2)};
}

namespace {

// Unconstrained coordinates for the normal model: (beta, log sigma, atanh rho).
// The transform keeps sigma > 0 and |rho| < 1 by construction. atanh rho is
// clamped so the AR(1) factorization stays away from exact singularity.
constexpr double kMaxAtanhRho = 6.0;
constexpr double kMaxLogSigma = 30.0;

Eigen::VectorXd to_unconstrained(const ResponseModelParams& params) {
  Eigen::VectorXd z(params.beta.size() + 2);
  z.head(params.beta.size()) = params.beta;
  z(params.beta.size()) = std::log(params.sigma);
  z(params.beta.size() + 1) = std::atanh(params.rho);
  return z;
}

ResponseModelParams from_unconstrained(const Eigen::VectorXd& z, bool with_rho, double fixed_rho) {
  ResponseModelParams params;
  const auto b = z.size() - (with_rho ? 2 : 1);
  params.beta = z.head(b);
  params.sigma = std::exp(std::clamp(z(b), -kMaxLogSigma, kMaxLogSigma));
  params.rho = with_rho ? std::tanh(std::clamp(z(b + 1), -kMaxAtanhRho, kMaxAtanhRho))
                        : fixed_rho;
  return params;
}

}  // namespace

ResponseModelParams m2_normal(const CompletedData& data, const ResponseModelParams& start,
                              double tol, int max_iter) {
  start.validate();
  if (!(tol > 0.0)) throw DomainError("m2 tolerance must be positive");
  if (data.k() + 1 != start.beta.size()) {
    throw ContractError("m2_normal: beta length does not match covariates");
  }
  const MvnSuffStats stats = MvnSuffStats::build(data.y, data.x);

  // A single occasion leaves rho out of the likelihood entirely; optimize
  // the identified coordinates and keep rho at its starting value.
  const bool with_rho = data.t() > 1;
  const double fixed_rho = start.rho;

  const auto objective = [&](const Eigen::VectorXd& z) -> double {
    try {
      const double ll = mvn_loglik(stats, from_unconstrained(z, with_rho, fixed_rho));
      return std::isfinite(ll) ? ll : -kInf;
    } catch (const Error&) {
      return -kInf;
    }
  };

  Eigen::VectorXd z = to_unconstrained(start);
  if (!with_rho) z.conservativeResize(z.size() - 1);

  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd grad = fd_gradient(objective, z);
    if (grad.cwiseAbs().maxCoeff() < 1e-9) {
      return from_unconstrained(z, with_rho, fixed_rho);
    }
    const Eigen::MatrixXd hess = fd_hessian(objective, z);

    bool newton = true;
    Eigen::VectorXd direction;
    try {
      const Eigen::MatrixXd l = cholesky_spd(Eigen::MatrixXd(-hess), 1e-14);
      direction = chol_solve(l, grad);
    } catch (const LinalgError&) {
      newton = false;
      direction = grad.stableNormalized();
    }

    const double f0 = objective(z);
    double alpha = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= 20; ++halving) {
      if (objective(z + alpha * direction) > f0) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      if (!newton) {
        throw OptimizationError(
            "m2_normal: Hessian not negative definite and no ascent after 20 halvings");
      }
      // A full Newton step below tolerance that cannot improve the objective
      // is finite-difference noise at the optimum.
      if (direction.cwiseAbs().maxCoeff() < tol) {
        return from_unconstrained(z, with_rho, fixed_rho);
      }
      throw OptimizationError("m2_normal: line search failed after 20 halvings");
    }
    const Eigen::VectorXd step = alpha * direction;
    z += step;
    if (step.cwiseAbs().maxCoeff() < tol) {
      return from_unconstrained(z, with_rho, fixed_rho);
    }
  }
  const ResponseModelParams last = from_unconstrained(z, with_rho, fixed_rho);
  std::vector<double> iterate(last.beta.size() + 2);
  for (Eigen::Index i = 0; i < last.beta.size(); ++i) iterate[static_cast<std::size_t>(i)] = last.beta(i);
  iterate[static_cast<std::size_t>(last.beta.size())] = last.sigma;
  iterate[static_cast<std::size_t>(last.beta.size()) + 1] = last.rho;
  throw ConvergenceError("m2_normal: no convergence within " + std::to_string(max_iter) +
                             " Newton iterations",
                         iterate);
}

ResponseModelParams initial_theta(const LongitudinalDataset& ds, const Eigen::MatrixXd& x) {
  const int n = ds.n();
  const int t = ds.t();
  if (x.rows() != n || x.cols() != ds.k()) {
    throw ContractError("initial_theta: covariate matrix has the wrong shape");
  }
  long cells = 0;
  for (int i = 0; i < n; ++i) {
    cells += ds.dropout_of(i).value_or(t + 1) - 1;
  }
  const int p = ds.k() + 1;
  if (cells < p + 1) throw DataError("initial_theta: too few observed response cells");

  Eigen::MatrixXd design(cells, p);
  Eigen::VectorXd yy(cells);
  long r = 0;
  for (int i = 0; i < n; ++i) {
    const int limit = ds.dropout_of(i).value_or(t + 1) - 1;
    for (int j = 0; j < limit; ++j) {
      design(r, 0) = 1.0;
      design.row(r).tail(p - 1) = x.row(i);
      yy(r) = ds.y()(i, j);
      ++r;
    }
  }
  Eigen::MatrixXd l;
  try {
    l = cholesky_spd(design.transpose() * design);
  } catch (const LinalgError&) {
    throw DataError("initial_theta: covariates are collinear on the observed cells");
  }
  ResponseModelParams theta;
  theta.beta = chol_solve(l, Eigen::VectorXd(design.transpose() * yy));
  const double rss = (yy - design * theta.beta).squaredNorm();
  theta.sigma = std::sqrt(std::max(rss / std::max<long>(cells - p, 1), 1e-8));
  theta.rho = 0.0;
  return theta;
}

DropoutParams initial_psi(const LongitudinalDataset& ds) {
  const int t = ds.t();
  long risk = 0;
  long events = 0;
  for (int i = 0; i < ds.n(); ++i) {
    const auto d = ds.dropout_of(i);
    risk += d.value_or(t) - 1;
    if (d) ++events;
  }
  if (risk < 1) return DropoutParams{0.0, 0.0, 0.0};
  const double lo = 0.5 / static_cast<double>(risk + 1);
  const double rate =
      std::clamp(static_cast<double>(events) / static_cast<double>(risk), lo, 1.0 - lo);
  return DropoutParams{logit(rate), 0.0, 0.0};
}

std::pair<ResponseModelParams, DropoutParams> SemChain::segment_mean() const {
  if (records.empty()) throw ContractError("segment_mean: empty chain");
  if (burn_in < 0 || burn_in >= static_cast<int>(records.size())) {
    throw ContractError("segment_mean: burn-in outside the chain");
  }
  const auto b = records.front().theta.beta.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(b + 5);
  long count = 0;
  for (std::size_t i = static_cast<std::size_t>(burn_in); i < records.size(); ++i) {
    sum += pack_params(records[i].theta, records[i].psi);
    ++count;
  }
  sum /= static_cast<double>(count);
  return unpack_params(sum, static_cast<int>(b) - 1);
}

SemRunResult sem_run(const LongitudinalDataset& ds, const SemConfig& config,
                     const ResponseModelParams& init_theta, const DropoutParams& init_psi,
                     Rng& rng) {
  config.validate();
  init_theta.validate();
  init_psi.validate();
  if (!ds.x_complete()) {
    throw ContractError("sem_run: covariates must be complete (impute first)");
  }
  const int n = ds.n();
  const int t = ds.t();

  bool any_dropout = false;
  for (int i = 0; i < n; ++i) {
    if (ds.dropout_of(i)) any_dropout = true;
  }

  ResponseModelParams theta = init_theta;
  DropoutParams psi = init_psi;

  SemChain chain;
  chain.burn_in = config.burn_in;
  chain.records.reserve(static_cast<std::size_t>(config.n_iterations));

  const Eigen::MatrixXd design = design_with_intercept(ds.x());

  for (int iter = 0; iter < config.n_iterations; ++iter) {
    bool ok = false;
    std::string last_failure;
    long attempts_total = 0;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
      try {
        attempts_total = 0;
        // S-step: fill every incomplete row under the current parameters.
        const Eigen::MatrixXd cov = ar1_covariance(theta.sigma, theta.rho, t);
        const Eigen::VectorXd mean_levels = design * theta.beta;
        CompletedData cd;
        cd.y = ds.y();
        cd.x = ds.x();
        cd.dropout = ds.dropout_times();
        Eigen::VectorXd mu(t);
        for (int i = 0; i < n; ++i) {
          const auto d = ds.dropout_of(i);
          if (!d) continue;
          mu.setConstant(mean_levels(i));
          long attempts = 0;
          cd.y.row(i) =
              s_step(cd.y.row(i).transpose(), d, mu, cov, psi, rng, config.max_reject, &attempts)
                  .transpose();
          attempts_total += attempts;
        }

        // M-step: logistic sub-step, then the normal model. With no dropout
        // events the dropout likelihood has no information and psi keeps its
        // current value.
        const DropoutParams psi_new = any_dropout ? m1_logistic(cd, psi) : psi;
        const ResponseModelParams theta_new =
            m2_normal(cd, theta, config.m2_tolerance, config.m2_max_iter);
        psi = psi_new;
        theta = theta_new;
        ok = true;
      } catch (const Error& e) {
        last_failure = e.what();
        if (attempt == 0) {
          log_debug("sem_run: iteration ", iter + 1, " failed (", e.what(), "), retrying once");
        }
      }
    }
    if (!ok) {
      throw Error("sem_run: iteration " + std::to_string(iter + 1) +
                  " failed twice: " + last_failure);
    }
    chain.records.push_back(SemIterationRecord{theta, psi, attempts_total});
  }

  auto [theta_hat, psi_hat] = chain.segment_mean();
  return SemRunResult{std::move(chain), std::move(theta_hat), psi_hat};
}

std::pair<ResponseModelParams, DropoutParams> pool_mi(
    const std::vector<std::pair<ResponseModelParams, DropoutParams>>& estimates) {
  if (estimates.empty()) throw ContractError("pool_mi: no estimates");
  const auto b = estimates.front().first.beta.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(b + 5);
  for (const auto& [theta, psi] : estimates) {
    if (theta.beta.size() != b) throw ContractError("pool_mi: estimate dimensions disagree");
    sum += pack_params(theta, psi);
  }
  sum /= static_cast<double>(estimates.size());
  return unpack_params(sum, static_cast<int>(b) - 1);
}

FitResult fit(const LongitudinalDataset& ds, const FitOptions& options, RngKey key) {
  options.sem.validate();
  if (options.m < 1) throw ContractError("fit: m must be at least 1");
  if (ds.n() < 2) throw DataError("fit: at least 2 subjects are required");

  const std::vector<Eigen::MatrixXd> completed =
      multiple_impute(ds, options.method, options.m, key, options.k0);

  std::vector<std::optional<std::pair<ResponseModelParams, DropoutParams>>> per_imp(
      static_cast<std::size_t>(options.m));
  std::vector<std::optional<SemChain>> chains(static_cast<std::size_t>(options.m));
  std::vector<std::string> failures(static_cast<std::size_t>(options.m));

  parallel_for(options.jobs, options.m, [&](long j) {
    const auto idx = static_cast<std::size_t>(j);
    try {
      const LongitudinalDataset with_x = ds.with_covariates(completed[idx]);
      const ResponseModelParams theta0 = initial_theta(with_x, with_x.x());
      const DropoutParams psi0 = initial_psi(with_x);
      Rng rng(key.child(stream::kChain, static_cast<std::uint64_t>(j)));
      SemRunResult run = sem_run(with_x, options.sem, theta0, psi0, rng);
      per_imp[idx] = std::make_pair(run.theta_hat, run.psi_hat);
      chains[idx] = std::move(run.chain);
    } catch (const Error& e) {
      failures[idx] = e.what();
    }
  });

  std::vector<std::pair<ResponseModelParams, DropoutParams>> successes;
  FitResult result;
  for (int j = 0; j < options.m; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    if (per_imp[idx]) {
      successes.push_back(*per_imp[idx]);
      result.chains.push_back(std::move(*chains[idx]));
    }
  }
  const int ok = static_cast<int>(successes.size());
  if (2 * ok < options.m) {
    std::ostringstream msg;
    msg << "fit: only " << ok << " of " << options.m << " imputation runs succeeded";
    for (int j = 0; j < options.m; ++j) {
      if (!failures[static_cast<std::size_t>(j)].empty()) {
        msg << "\n  imputation " << (j + 1) << ": " << failures[static_cast<std::size_t>(j)];
      }
    }
    throw Error(msg.str());
  }
  if (ok < options.m) {
    log_warn("fit: ", options.m - ok, " of ", options.m, " imputation runs failed");
  }

  auto [theta_hat, psi_hat] = pool_mi(successes);
  result.theta_hat = std::move(theta_hat);
  result.psi_hat = psi_hat;
  result.m = ok;

  if (options.with_se) {
    // SEs on the first successful completed-covariate set at the pooled
    // estimates; imputation and chain noise are not re-entered here.
    int first_ok = 0;
    while (!per_imp[static_cast<std::size_t>(first_ok)]) ++first_ok;
    const LongitudinalDataset with_x = ds.with_covariates(completed[static_cast<std::size_t>(first_ok)]);
    Rng rng(key.child(stream::kLouis));
    const InformationResult info =
        monte_carlo_information(result.theta_hat, result.psi_hat, with_x, options.m_se, rng);
    const StandardErrors se = standard_errors(info.info, result.estimates());
    result.se = se.se;
    result.p_values = se.p_values;
  }
  return result;
}

}  // namespace semdrop
