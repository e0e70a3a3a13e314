#include "grftail/lognormal.hpp"

#include <cmath>

#include "grftail/errors.hpp"
#include "grftail/normal.hpp"

namespace grftail {

LogNormalPortfolio::LogNormalPortfolio(Eigen::VectorXd mu, Eigen::MatrixXd cov)
    : mu_(std::move(mu)), cov_(std::move(cov)) {
    if (mu_.size() == 0) throw ConfigError("portfolio needs at least one component");
    if (cov_.rows() != mu_.size() || cov_.cols() != mu_.size())
        throw ConfigError("covariance must be n x n with n = size of mu");
    if (!mu_.allFinite() || !cov_.allFinite()) throw ConfigError("portfolio parameters must be finite");
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * cov_.cwiseAbs().maxCoeff())
        throw ConfigError("covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success) throw ConfigError("covariance must be positive definite (det > 0)");
    factor_ = llt.matrixL();
}

double one_big_jump_approx(const LogNormalPortfolio& portfolio, double b) {
    if (!(b > 0.0)) throw ConfigError("one-big-jump approximation needs b > 0");
    const double log_b = std::log(b);
    double total = 0.0;
    for (int i = 0; i < portfolio.size(); ++i)
        total += normal_sf((log_b - portfolio.mu()(i)) / std::sqrt(portfolio.cov()(i, i)));
    return total;
}

double threshold_for_marginal_tail(double tail, double mu, double variance) {
    if (!(variance > 0.0)) throw ConfigError("variance must be positive");
    return std::exp(mu + std::sqrt(variance) * normal_isf(tail));
}

EstimateWithError sum_tail_mc(const LogNormalPortfolio& portfolio, double b, long n_samples,
                              const McOptions& options) {
    if (n_samples < 1) throw ConfigError("Monte Carlo sample size must be at least 1");
    if (!(b > 0.0)) {
        EstimateWithError certain;
        certain.estimate = 1.0;
        certain.n_samples = n_samples;
        certain.ess = static_cast<double>(n_samples);
        return certain;
    }
    const int n = portfolio.size();
    const double log_b = std::log(b);
    const Eigen::VectorXd variance = portfolio.cov().diagonal();
    const Eigen::VectorXd shift = (log_b - portfolio.mu().array()).max(0.0).matrix();

    const WeightStats stats = run_partitioned(n_samples, options, [&](RngStream& rng, long count) {
        WeightStats s;
        Eigen::VectorXd z(n), x(n);
        for (long k = 0; k < count; ++k) {
            const auto centre = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
            for (int i = 0; i < n; ++i) z(i) = rng.normal();
            x = portfolio.mu() + portfolio.factor() * z +
                shift(centre) / variance(centre) * portfolio.cov().col(centre);
            if (x.array().exp().sum() <= b) {
                s.add(0.0);
                continue;
            }
            const Eigen::ArrayXd expo = shift.array() * (x - portfolio.mu()).array() / variance.array() -
                                        0.5 * shift.array().square() / variance.array();
            const double mx = expo.maxCoeff();
            const double log_mean = mx + std::log((expo - mx).exp().sum() / n);
            s.add(std::exp(-log_mean));
        }
        return s;
    });
    return weighted_estimate(stats);
}

}  // namespace grftail
