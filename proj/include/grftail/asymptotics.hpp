#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grftail/kernel.hpp"

namespace grftail {

/// Probabilities above this are flagged as outside the asymptotic range.
inline constexpr double kAsymptoticRangeLimit = 0.1;

// Threshold equation (2π/σ)^{d/2} u^{-d/2} e^{σu} = b, handled in log space:
//   σu - (d/2) log u + (d/2) log(2π/σ) = log b.

/// log of the left-hand side at u.
double log_threshold_b(double u, double sigma, int d);
/// Left-hand side at u (may overflow to inf for huge u).
double threshold_b(double u, double sigma, int d);
/// Smallest log b for which a root with u > d/(2σ) exists (attained at u = d/(2σ)).
double minimum_log_b(double sigma, int d);

/// Unique root u > d/(2σ). Throws InfeasibleError naming the minimum b.
double solve_u(double b, double sigma, int d);
double solve_u_log(double log_b, double sigma, int d);

/// Closed-form approximation ũ with u - ũ = o(1/u). Requires b(2π/σ)^{-d/2} > e.
double u_closed_form(double b, double sigma, int d);
double u_closed_form_log(double log_b, double sigma, int d);

/// Tail constant H from the spectral moments, with the Gaussian B-integral in closed form.
double constant_H(const SpectralMoments& moments, double sigma);

/// Same constant with the B-integral evaluated numerically (adaptive Gauss-Kronrod for
/// d <= 2, tensor Gauss-Hermite otherwise). Used to cross-check constant_H.
double constant_H_quadrature(const SpectralMoments& moments, double sigma);

/// Prefactor of H in front of the B-integral.
double constant_H_prefactor(const SpectralMoments& moments, double sigma);

/// exp{-1/2 [B^T B + (μ₂₀ μ₂₂^{-1/2} B + μ₂₀·1/(2σ))^2 / (1 - μ₂₀ μ₂₂^{-1} μ₀₂)]}, the H integrand.
class HIntegrand {
public:
    HIntegrand(const SpectralMoments& moments, double sigma);
    [[nodiscard]] double operator()(const Eigen::VectorXd& b) const;
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(direction_.size()); }
    /// μ₂₂^{-1/2} μ₀₂
    [[nodiscard]] const Eigen::VectorXd& direction() const noexcept { return direction_; }
    [[nodiscard]] double offset() const noexcept { return offset_; }
    [[nodiscard]] double schur() const noexcept { return schur_; }

private:
    Eigen::VectorXd direction_;
    double offset_;
    double schur_;
};

struct TailApproximation {
    double b = 0.0;
    double sigma = 0.0;
    int dimension = 0;
    double u = 0.0;
    double u_tilde = 0.0;  ///< NaN when b(2π/σ)^{-d/2} <= e
    double H = 0.0;
    double domain_measure = 0.0;
    double probability = 0.0;
    double log10_probability = 0.0;
    bool out_of_range = false;
    std::vector<std::string> warnings;
};

/// H mes(T) u^{d-1} exp(-u^2/2) for a standardized model; domain_measure is the
/// standardized measure of T.
TailApproximation tail_approx(const CovarianceModel& model, double domain_measure, double sigma,
                              double b);

/// Same approximation for a raw model over a raw domain of measure raw_measure.
TailApproximation tail_approx_raw(const CovarianceModel& raw_model, double raw_measure,
                                  double sigma, double b);

/// b such that tail_approx(...).probability equals target_probability.
double threshold_for_probability(const CovarianceModel& model, double domain_measure,
                                 double sigma, double target_probability);

/// Panel half-width ε = κ u^{δ - 1/2}.
double panel_half_width(double u, double kappa, double delta);

/// H (2ε)^d u^{d-1} exp(-u^2/2) for the panel {|t|_∞ < ε}.
double panel_tail_approx(double kappa, double delta, const CovarianceModel& model, double sigma,
                         double b);

/// u^d P(Z > u): the shape of the supremum tail, up to an unknown constant.
double sup_rate_shape(double u, int d);

struct SupConstantFit {
    std::vector<double> per_level;
    double mean = 0.0;
    double relative_spread = 0.0;  ///< max/min - 1
};

/// G_i = p_i / (mes u_i^d P(Z > u_i)), one value per simulated level.
SupConstantFit fit_sup_constant(const std::vector<double>& levels,
                                const std::vector<double>& probabilities, double domain_measure,
                                int d);

/// |log det(I - Z/u) + Tr(Z)/u + ½ Σλ²/u²|, the remainder of the second-order expansion,
/// for symmetric Z with spectral radius < u. It is O(u^-3).
double log_det_expansion_error(const Eigen::MatrixXd& z, double u);

/// exp(-x^2 / (2 σ²_max)).
double borel_tis_bound(double sigma_sq_max, double x);

}  // namespace grftail
