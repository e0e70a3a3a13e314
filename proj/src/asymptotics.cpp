#include "grftail/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "grftail/errors.hpp"
#include "grftail/normal.hpp"
#include "grftail/quadrature.hpp"

namespace grftail {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << name << " must be positive and finite (got " << value << ")";
        throw ConfigError(os.str());
    }
}

void require_dimension(int d) {
    if (d < 0) throw ConfigError("dimension must be non-negative");
}

// h(u) = log LHS(u) - log b, strictly increasing on u > d/(2σ).
double threshold_residual(double u, double sigma, int d, double log_b) {
    return log_threshold_b(u, sigma, d) - log_b;
}

}  // namespace

double log_threshold_b(double u, double sigma, int d) {
    const double half_d = 0.5 * d;
    double value = sigma * u;
    if (d > 0) value += half_d * (std::log(kTwoPi / sigma) - std::log(u));
    return value;
}

double threshold_b(double u, double sigma, int d) { return std::exp(log_threshold_b(u, sigma, d)); }

double minimum_log_b(double sigma, int d) {
    if (d == 0) return 0.0;
    return log_threshold_b(0.5 * d / sigma, sigma, d);
}

double solve_u(double b, double sigma, int d) {
    require_positive(b, "b");
    return solve_u_log(std::log(b), sigma, d);
}

double solve_u_log(double log_b, double sigma, int d) {
    require_positive(sigma, "sigma");
    require_dimension(d);
    if (!std::isfinite(log_b)) throw ConfigError("log b must be finite");

    const double min_log_b = minimum_log_b(sigma, d);
    if (!(log_b > min_log_b)) {
        std::ostringstream os;
        os << "threshold equation has no root with u > d/(2 sigma): b must exceed "
           << std::exp(min_log_b) << " for sigma = " << sigma << ", d = " << d;
        throw InfeasibleError(os.str(), std::exp(min_log_b));
    }
    if (d == 0) return log_b / sigma;

    double lo = 0.5 * d / sigma;
    double hi = log_b / sigma + d * std::log(std::max(log_b, std::numbers::e)) + 10.0;
    hi = std::max(hi, lo + 1.0);
    while (threshold_residual(hi, sigma, d, log_b) <= 0.0) hi = lo + 2.0 * (hi - lo);

    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(log_b));
    double x = 0.5 * (lo + hi);
    const double bt = log_b - 0.5 * d * std::log(kTwoPi / sigma);
    if (bt > 1.0) {
        const double guess = u_closed_form_log(log_b, sigma, d);
        if (guess > lo && guess < hi) x = guess;
    }

    for (int iter = 0; iter < 200; ++iter) {
        const double h = threshold_residual(x, sigma, d, log_b);
        if (std::abs(h) <= tol) return x;
        if (h > 0.0)
            hi = x;
        else
            lo = x;
        const double slope = sigma - 0.5 * d / x;
        double next = x - h / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) return next;
        x = next;
    }
    return x;
}

double u_closed_form(double b, double sigma, int d) {
    require_positive(b, "b");
    return u_closed_form_log(std::log(b), sigma, d);
}

double u_closed_form_log(double log_b, double sigma, int d) {
    require_positive(sigma, "sigma");
    require_dimension(d);
    const double log_bt = log_b - 0.5 * d * std::log(kTwoPi / sigma);
    if (!(log_bt > 1.0)) {
        std::ostringstream os;
        os << "closed-form threshold needs b (2 pi/sigma)^(-d/2) > e (log of it is " << log_bt << ")";
        throw InfeasibleError(os.str(), std::exp(1.0 + 0.5 * d * std::log(kTwoPi / sigma)));
    }
    const double ratio = log_bt / sigma;
    const double half_d = 0.5 * d;
    return ratio + half_d / sigma * std::log(ratio) +
           half_d * half_d * std::log(ratio) / (sigma * log_bt);
}

HIntegrand::HIntegrand(const SpectralMoments& moments, double sigma) {
    require_positive(sigma, "sigma");
    const Eigen::VectorXd mu02 = moments.mu02();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moments.mu22);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
        throw ConfigError("mu22 must be positive definite");
    const Eigen::MatrixXd& v = eig.eigenvectors();
    const Eigen::MatrixXd inv_sqrt =
        v * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
    direction_ = inv_sqrt * mu02;
    offset_ = moments.mu20.dot(moments.one_vector) / (2.0 * sigma);
    schur_ = 1.0 - direction_.squaredNorm();
    if (!(schur_ > 0.0)) {
        std::ostringstream os;
        os << "1 - mu20 mu22^-1 mu02 = " << schur_ << " is not positive; Gamma is not positive definite";
        throw ConfigError(os.str());
    }
}

double HIntegrand::operator()(const Eigen::VectorXd& b) const {
    const double s = direction_.dot(b) + offset_;
    return std::exp(-0.5 * (b.squaredNorm() + s * s / schur_));
}

double constant_H_prefactor(const SpectralMoments& moments, double sigma) {
    require_positive(sigma, "sigma");
    const int d = moments.dimension;
    const double gamma_det = moments.gamma_determinant();
    if (!(gamma_det > 0.0)) throw ConfigError("Gamma must be positive definite (|Gamma| <= 0)");
    const double mu22_det = moments.mu22.determinant();
    const double quartic = moments.one_vector.dot(moments.mu22 * moments.one_vector) / 8.0 +
                           moments.quartic_diag.sum() / 8.0;
    const double log_prefactor = -0.5 * std::log(gamma_det) + 0.5 * std::log(mu22_det) +
                                 quartic / (sigma * sigma) -
                                 0.25 * (d + 1) * (d + 2) * std::log(kTwoPi);
    return std::exp(log_prefactor);
}

double constant_H(const SpectralMoments& moments, double sigma) {
    // Write B = s a/|a| + B_perp with a = μ₂₂^{-1/2} μ₀₂, k = 1 - |a|^2 and
    // c = μ₂₀·1/(2σ). The integrand depends on B only through |B_perp|^2 and s:
    //   exp{-½ |B_perp|^2} exp{-½ [s^2 + (|a| s + c)^2 / k]}.
    // Completing the square in s, s^2 + (|a| s + c)^2 / k = (s + |a| c)^2 / k + c^2,
    // so the s-integral is sqrt(2πk) e^{-c²/2} and the orthogonal part gives
    // (2π)^{(n-1)/2}. Hence ∫ = (2π)^{n/2} sqrt(k) e^{-c²/2}, n = d(d+1)/2.
    const HIntegrand integrand(moments, sigma);
    const int n = integrand.dim();
    const double c = integrand.offset();
    const double log_integral =
        0.5 * n * std::log(kTwoPi) + 0.5 * std::log(integrand.schur()) - 0.5 * c * c;
    return constant_H_prefactor(moments, sigma) * std::exp(log_integral);
}

namespace {

// exp(-½ B^T B) bounds the integrand, so |B_i| <= 12 loses less than e^{-72} per axis.
constexpr double kQuadratureHalfWidth = 12.0;

double nested_gauss_kronrod(const HIntegrand& integrand, Eigen::VectorXd& point, int axis) {
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    const int n = integrand.dim();
    auto slice = [&](double x) {
        point(axis) = x;
        if (axis + 1 == n) return integrand(point);
        return nested_gauss_kronrod(integrand, point, axis + 1);
    };
    const double tol = (axis + 1 == n) ? 1e-12 : 1e-10;
    return Rule::integrate(slice, -kQuadratureHalfWidth, kQuadratureHalfWidth, 8, tol);
}

}  // namespace

double constant_H_quadrature(const SpectralMoments& moments, double sigma) {
    const HIntegrand integrand(moments, sigma);
    const int n = integrand.dim();
    double integral = 0.0;
    if (n <= 3) {
        Eigen::VectorXd point = Eigen::VectorXd::Zero(n);
        integral = nested_gauss_kronrod(integrand, point, 0);
    } else {
        // exp(-½ B^T B) is the Hermite weight after B = sqrt(2) x.
        const GaussHermiteRule rule = gauss_hermite(12);
        integral = tensor_gauss_hermite(rule, n, [&](const Eigen::VectorXd& x) {
            const Eigen::VectorXd b = std::numbers::sqrt2 * x;
            return integrand(b) * std::exp(x.squaredNorm());
        });
        integral *= std::pow(std::numbers::sqrt2, n);
    }
    return constant_H_prefactor(moments, sigma) * integral;
}

TailApproximation tail_approx(const CovarianceModel& model, double domain_measure, double sigma,
                              double b) {
    require_positive(domain_measure, "domain measure");
    require_positive(sigma, "sigma");
    require_positive(b, "b");
    const SpectralMoments moments = spectral_moments(model);
    const int d = model.dim();

    TailApproximation out;
    out.b = b;
    out.sigma = sigma;
    out.dimension = d;
    out.domain_measure = domain_measure;
    out.u = solve_u(b, sigma, d);
    try {
        out.u_tilde = u_closed_form(b, sigma, d);
    } catch (const InfeasibleError&) {
        out.u_tilde = std::numeric_limits<double>::quiet_NaN();
        out.warnings.emplace_back("closed-form u_tilde undefined: b (2 pi/sigma)^(-d/2) <= e");
    }
    out.H = constant_H(moments, sigma);
    const double log_p = std::log(out.H) + std::log(domain_measure) + (d - 1) * std::log(out.u) -
                         0.5 * out.u * out.u;
    out.probability = std::exp(log_p);
    out.log10_probability = log_p / std::numbers::ln10;
    if (out.probability > kAsymptoticRangeLimit) {
        out.out_of_range = true;
        std::ostringstream os;
        os << "approximate probability " << out.probability << " exceeds " << kAsymptoticRangeLimit
           << "; b is outside the asymptotic range";
        out.warnings.push_back(os.str());
    }
    return out;
}

TailApproximation tail_approx_raw(const CovarianceModel& raw_model, double raw_measure,
                                  double sigma, double b) {
    require_positive(raw_measure, "domain measure");
    require_positive(b, "b");
    const StandardizedModel std_model = standardize(raw_model);
    TailApproximation out =
        tail_approx(std_model.model, std_model.transform.standardized_measure(raw_measure), sigma,
                    std_model.transform.standardized_threshold(b));
    out.b = b;
    return out;
}

double threshold_for_probability(const CovarianceModel& model, double domain_measure,
                                 double sigma, double target_probability) {
    require_positive(domain_measure, "domain measure");
    require_positive(sigma, "sigma");
    if (!(target_probability > 0.0 && target_probability < 1.0))
        throw ConfigError("target probability must lie in (0, 1)");
    const int d = model.dim();
    const double log_h = std::log(constant_H(spectral_moments(model), sigma));
    auto log_p = [&](double u) {
        return log_h + std::log(domain_measure) + (d - 1) * std::log(u) - 0.5 * u * u;
    };
    const double log_target = std::log(target_probability);

    // log p is decreasing once u exceeds sqrt(d - 1); u must also exceed d/(2σ).
    double lo = std::max(0.5 * d / sigma, std::sqrt(std::max(d - 1, 0)));
    lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
    if (!(log_p(lo) > log_target)) {
        std::ostringstream os;
        os << "target probability " << target_probability
           << " is above the largest probability the approximation produces (" << std::exp(log_p(lo))
           << ")";
        throw InfeasibleError(os.str(), threshold_b(lo, sigma, d));
    }
    double hi = lo + 1.0;
    while (log_p(hi) > log_target) hi = lo + 2.0 * (hi - lo);

    double u = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double r = log_p(u) - log_target;
        if (std::abs(r) <= 1e-15 * std::max(1.0, std::abs(log_target))) break;
        if (r > 0.0)
            lo = u;
        else
            hi = u;
        const double slope = (d - 1) / u - u;
        double next = u - r / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == u) break;
        u = next;
    }
    return threshold_b(u, sigma, d);
}

double panel_half_width(double u, double kappa, double delta) {
    require_positive(u, "u");
    require_positive(kappa, "kappa");
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must lie in (0, 1/2)");
    return kappa * std::pow(u, delta - 0.5);
}

double panel_tail_approx(double kappa, double delta, const CovarianceModel& model, double sigma,
                         double b) {
    const double u = solve_u(b, sigma, model.dim());
    const double eps = panel_half_width(u, kappa, delta);
    const double measure = std::pow(2.0 * eps, model.dim());
    return tail_approx(model, measure, sigma, b).probability;
}

double sup_rate_shape(double u, int d) {
    if (!(u >= 0.0)) throw ConfigError("sup_rate_shape needs u >= 0");
    require_dimension(d);
    return std::pow(u, d) * normal_sf(u);
}

SupConstantFit fit_sup_constant(const std::vector<double>& levels,
                                const std::vector<double>& probabilities, double domain_measure,
                                int d) {
    if (levels.size() != probabilities.size() || levels.empty())
        throw ConfigError("levels and probabilities must be non-empty and of equal length");
    require_positive(domain_measure, "domain measure");
    SupConstantFit fit;
    for (std::size_t i = 0; i < levels.size(); ++i)
        fit.per_level.push_back(probabilities[i] / (domain_measure * sup_rate_shape(levels[i], d)));
    const auto [mn, mx] = std::minmax_element(fit.per_level.begin(), fit.per_level.end());
    double sum = 0.0;
    for (double g : fit.per_level) sum += g;
    fit.mean = sum / static_cast<double>(fit.per_level.size());
    fit.relative_spread = *mx / *mn - 1.0;
    return fit;
}

double log_det_expansion_error(const Eigen::MatrixXd& z, double u) {
    require_positive(u, "u");
    if (z.rows() != z.cols()) throw ConfigError("Z must be square");
    if ((z - z.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff()))
        throw ConfigError("Z must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z, Eigen::EigenvaluesOnly);
    double log_det = 0.0;
    double trace = 0.0;
    double sum_sq = 0.0;
    for (double lambda : eig.eigenvalues()) {
        if (!(lambda < u)) throw NumericalError("I - Z/u is singular or has a non-positive eigenvalue");
        log_det += std::log1p(-lambda / u);
        trace += lambda;
        sum_sq += lambda * lambda;
    }
    // log(1 - x) = -x - x²/2 - x³/3 ..., so the second-order term enters with a minus sign.
    return std::abs(log_det + trace / u + 0.5 * sum_sq / (u * u));
}

double borel_tis_bound(double sigma_sq_max, double x) {
    require_positive(sigma_sq_max, "sigma_sq_max");
    if (!(x >= 0.0)) throw ConfigError("Borel-TIS deviation must be non-negative");
    return std::exp(-x * x / (2.0 * sigma_sq_max));
}

}  // namespace grftail
