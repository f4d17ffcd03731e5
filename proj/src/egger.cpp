#include "metabal/egger.hpp"

#include "metabal/errors.hpp"
#include "metabal/kernels.hpp"
#include "metabal/root_finding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace metabal {

namespace {

void require_egger_k(const StudySet& set) {
  if (set.k() < 3) {
    throw DomainError("Egger regression needs at least 3 included studies, got " +
                      std::to_string(set.k()));
  }
}

void require_spread(const Eigen::ArrayXd& x) {
  if (x.maxCoeff() == x.minCoeff()) {
    throw RegressionError("Egger regression: precision regressor is constant, design is collinear");
  }
}

std::vector<TransformedStudy> transform(const Eigen::ArrayXd& y, const Eigen::ArrayXd& x,
                                        const Eigen::ArrayXd& se, double beta0, double phi) {
  std::vector<TransformedStudy> out(static_cast<std::size_t>(y.size()));
  const double root_phi = std::sqrt(phi);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    auto& t = out[static_cast<std::size_t>(i)];
    t.y = y[i] - beta0 * x[i];
    if (phi > 0.0) t.precision = 1.0 / (root_phi * se[i]);
  }
  return out;
}

// `unscaled` is (X'WX)^-1 ordered (mu, beta0); the fit's covariance is phi times it.
EggerFit assemble(const StudySet& set, PrecisionMetric metric, const IntervalOptions& interval,
                  double beta0, double mu, double q_prime, const Eigen::Matrix2d& unscaled) {
  const Eigen::ArrayXd y = set.y();
  const Eigen::ArrayXd se = set.se();
  const Eigen::ArrayXd x = set.precision_regressor(metric);
  EggerFit fit;
  fit.metric = metric;
  fit.interval = interval;
  fit.dof = static_cast<int>(set.k()) - 2;
  fit.q_prime = q_prime;
  fit.phi = q_prime / fit.dof;
  const Eigen::Matrix2d cov = fit.phi * unscaled;
  fit.mu = make_coefficient(mu, std::sqrt(std::max(0.0, cov(0, 0))), interval, fit.dof);
  fit.beta0 = make_coefficient(beta0, std::sqrt(std::max(0.0, cov(1, 1))), interval, fit.dof);
  fit.cov_beta0_mu = cov(0, 1);
  fit.var_beta0_mean_s2 = cov(0, 0) * x.square().mean();
  fit.transformed = transform(y, x, se, beta0, fit.phi);
  return fit;
}

}  // namespace

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const Eigen::Map<const Eigen::ArrayXd> xa(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::ArrayXd> xb(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::ArrayXd da = xa - xa.mean();
  const Eigen::ArrayXd db = xb - xb.mean();
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp((da * db).sum() / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> asymmetry_correlation(const StudySet& set) {
  require_egger_k(set);
  const Eigen::ArrayXd y = set.y();
  const Eigen::ArrayXd precision = set.se().inverse();
  return pearson({y.data(), static_cast<std::size_t>(y.size())},
                 {precision.data(), static_cast<std::size_t>(precision.size())});
}

EggerFit egger_wls(const StudySet& set, PrecisionMetric metric, const IntervalOptions& interval) {
  require_egger_k(set);
  const Eigen::ArrayXd y = set.y();
  const Eigen::ArrayXd root_w = set.se().inverse();
  const Eigen::ArrayXd x = set.precision_regressor(metric);
  require_spread(x);

  const Eigen::Index k = y.size();
  Eigen::MatrixXd design(k, 2);
  design.col(0) = root_w.matrix();
  design.col(1) = (x * root_w).matrix();
  const Eigen::VectorXd response = (y * root_w).matrix();

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw RegressionError("Egger regression: design matrix is rank deficient");
  const Eigen::Vector2d coef = qr.solve(response);
  const double q_prime = (response - design * coef).squaredNorm();
  const Eigen::Matrix2d unscaled = (design.transpose() * design).inverse();
  return assemble(set, metric, interval, coef[1], coef[0], q_prime, unscaled);
}

double gest_statistic(const StudySet& set, double beta0, double mu, PrecisionMetric metric) {
  const Eigen::ArrayXd w = set.se().square().inverse();
  const Eigen::ArrayXd x = set.precision_regressor(metric);
  return kernels::centred_cross(w, set.y() - beta0 * x - mu, x);
}

EggerFit egger_gest(const StudySet& set, PrecisionMetric metric, const IntervalOptions& interval,
                    const GEstimationOptions& options) {
  require_egger_k(set);
  const Eigen::ArrayXd y = set.y();
  const Eigen::ArrayXd w = set.se().square().inverse();
  const Eigen::ArrayXd x = set.precision_regressor(metric);
  require_spread(x);

  // Mean equation profiles mu out; the G-estimation equation is then a
  // function of beta0 alone.
  auto estimating = [&](double beta0) {
    const Eigen::ArrayXd potential = y - beta0 * x;
    const double mu = kernels::weighted_mean(w, potential);
    return kernels::centred_cross(w, potential - mu, x);
  };

  double lo = options.lower;
  double hi = options.upper;
  if (!expand_bracket(estimating, lo, hi, options.max_expansions)) {
    throw SolverError("G-estimation: no root bracketed in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  const double beta0 = bisect(
      estimating, lo, hi,
      BisectionOptions{options.beta0_tol, std::numeric_limits<double>::infinity(), 4000});

  const Eigen::ArrayXd potential = y - beta0 * x;
  const double mu = kernels::weighted_mean(w, potential);
  const double q_prime = kernels::weighted_ss(w, potential, mu);

  const double sw = w.sum();
  const double mx = kernels::weighted_mean(w, x);
  const double sxx = kernels::weighted_ss(w, x, mx);
  Eigen::Matrix2d unscaled;
  unscaled << 1.0 / sw + mx * mx / sxx, -mx / sxx,
              -mx / sxx, 1.0 / sxx;
  return assemble(set, metric, interval, beta0, mu, q_prime, unscaled);
}

std::vector<TransformedStudy> potential_outcome_view(const EggerFit& fit, const StudySet& set) {
  if (fit.transformed.size() != set.k()) {
    throw ContractError("Egger fit has " + std::to_string(fit.transformed.size()) +
                        " studies, dataset has " + std::to_string(set.k()));
  }
  const Eigen::ArrayXd y = set.y();
  std::vector<TransformedStudy> out =
      transform(y, set.precision_regressor(fit.metric), set.se(), fit.beta0.estimate, fit.phi);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double scale = std::max({1.0, std::abs(out[i].y), std::abs(y[static_cast<Eigen::Index>(i)])});
    if (std::abs(out[i].y - fit.transformed[i].y) > 1e-9 * scale) {
      throw ContractError("Egger fit was not computed from this dataset");
    }
  }
  return out;
}

}  // namespace metabal
