#pragma once

#include <Eigen/Dense>

#include "grftail/montecarlo.hpp"

namespace grftail {

/// Gaussian vector X ~ N(mu, cov) whose exponentials form the portfolio.
class LogNormalPortfolio {
public:
    /// Throws ConfigError unless cov is symmetric positive definite and sizes agree.
    LogNormalPortfolio(Eigen::VectorXd mu, Eigen::MatrixXd cov);

    [[nodiscard]] const Eigen::VectorXd& mu() const noexcept { return mu_; }
    [[nodiscard]] const Eigen::MatrixXd& cov() const noexcept { return cov_; }
    [[nodiscard]] const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(mu_.size()); }

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd factor_;
};

/// Σ_i P(e^{X_i} > b) = Σ_i P(Z > (log b - mu_i) / sqrt(cov_ii)).
double one_big_jump_approx(const LogNormalPortfolio& portfolio, double b);

/// b whose marginal tail P(e^{X} > b) equals `tail` for X ~ N(mu, variance).
double threshold_for_marginal_tail(double tail, double mu = 0.0, double variance = 1.0);

/// Importance-sampling estimate of P(Σ e^{X_i} > b). Component I is drawn uniformly
/// and X is shifted by λ_I cov e_I / cov_II with λ_I = max(0, log b - mu_I), which puts
/// the mean of X_I at log b and the others at their conditional means. Weight:
///   [ (1/n) Σ_i exp(λ_i (x_i - mu_i) / cov_ii - λ_i² / (2 cov_ii)) ]^{-1}.
EstimateWithError sum_tail_mc(const LogNormalPortfolio& portfolio, double b, long n_samples,
                              const McOptions& options);

}  // namespace grftail
