#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace grftail {

/// Maximum deviation |ΔC(0) + I| tolerated for a model to count as standardized.
inline constexpr double kStandardizationTolerance = 1e-10;

enum class KernelFamily { SquaredExponential, RationalQuadratic };

/// Smooth homogeneous unit-variance covariance C(t) = g(|Lt|^2 / 2).
///
/// Squared exponential uses g(s) = exp(-s); rational quadratic uses
/// g(s) = (1 + s/alpha)^(-alpha) with alpha > d/2 + 3, which keeps C six
/// times differentiable and the sample paths three times differentiable.
/// Instances are immutable once built.
class CovarianceModel {
public:
    static CovarianceModel squared_exponential(Eigen::MatrixXd scale);
    static CovarianceModel rational_quadratic(Eigen::MatrixXd scale, double alpha);

    [[nodiscard]] KernelFamily family() const noexcept { return family_; }
    [[nodiscard]] const Eigen::MatrixXd& scale() const noexcept { return scale_; }
    /// L^T L, the quadratic form inside the profile.
    [[nodiscard]] const Eigen::MatrixXd& metric() const noexcept { return metric_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] int dim() const noexcept { return static_cast<int>(scale_.rows()); }

    /// n-th derivative of the radial profile g at s >= 0 (n <= 4).
    [[nodiscard]] double profile(double s, int order = 0) const;

    /// C(t). Throws ConfigError on a dimension mismatch.
    [[nodiscard]] double operator()(const Eigen::VectorXd& t) const;

    [[nodiscard]] bool is_standardized(double tol = kStandardizationTolerance) const;

private:
    CovarianceModel(KernelFamily family, Eigen::MatrixXd scale, double alpha);

    KernelFamily family_;
    Eigen::MatrixXd scale_;
    Eigen::MatrixXd metric_;
    double alpha_;
};

double covariance_eval(const CovarianceModel& model, const Eigen::VectorXd& t);

/// Gradient of C at t.
Eigen::VectorXd covariance_gradient(const CovarianceModel& model, const Eigen::VectorXd& t);

/// Hessian of C at t.
Eigen::MatrixXd covariance_hessian(const CovarianceModel& model, const Eigen::VectorXd& t);

/// ΔC(0) = -L^T L for both families.
Eigen::MatrixXd hessian_at_zero(const CovarianceModel& model);

/// ∂⁴C(0)/∂t_i∂t_j∂t_k∂t_l = g''(0) (M_ij M_kl + M_ik M_jl + M_il M_jk) with M = L^T L.
double fourth_derivative_at_zero(const CovarianceModel& model, int i, int j, int k, int l);

// Second-derivative vectorization: the d diagonal entries first, then the
// upper triangle row by row, (0,1), (0,2), ..., (0,d-1), (1,2), ...

[[nodiscard]] int vech_size(int d) noexcept;
[[nodiscard]] std::vector<std::pair<int, int>> vech_pairs(int d);
Eigen::VectorXd vech(const Eigen::MatrixXd& symmetric);
Eigen::MatrixXd unvech(const Eigen::VectorXd& v, int d);

/// Covariances among f(0), ∂²f(0) and their fourth-order counterparts.
struct SpectralMoments {
    int dimension = 0;
    Eigen::RowVectorXd mu20;        ///< Cov(f(0), ∂²f(0)), vectorization order above
    Eigen::MatrixXd mu22;           ///< Cov(∂²f(0), ∂²f(0))
    Eigen::VectorXd quartic_diag;   ///< ∂⁴_iiii C(0)
    Eigen::MatrixXd gamma;          ///< [[1, mu20], [mu20^T, mu22]]
    Eigen::MatrixXd hessian_at_zero;
    Eigen::VectorXd one_vector;     ///< d ones followed by d(d-1)/2 zeros

    [[nodiscard]] Eigen::VectorXd mu02() const { return mu20.transpose(); }
    [[nodiscard]] double gamma_determinant() const { return gamma.determinant(); }
};

/// Requires a standardized model; throws ConfigError otherwise.
SpectralMoments spectral_moments(const CovarianceModel& model);

/// Change of coordinates t -> Σ^{1/2} t that takes a raw model to ΔC(0) = -I.
///
/// With f̃(t) = f(Σ^{1/2} t),
///   ∫_T exp(σ f̃) dt = measure_factor * ∫_{Σ^{1/2} T} exp(σ f) ds,
/// so a raw problem (T, b) is the standardized problem (Σ^{1/2} T, b / measure_factor),
/// and mes(Σ^{1/2} T) = mes(T) / measure_factor.
struct AffineStandardization {
    Eigen::MatrixXd sigma_half;
    double measure_factor = 1.0;  ///< |Σ|^{-1/2}

    [[nodiscard]] double standardized_measure(double raw_measure) const {
        return raw_measure / measure_factor;
    }
    [[nodiscard]] double standardized_threshold(double raw_b) const { return raw_b / measure_factor; }
};

struct StandardizedModel {
    CovarianceModel model;
    AffineStandardization transform;
};

/// Throws ConfigError when -ΔC(0) is not positive definite.
StandardizedModel standardize(const CovarianceModel& raw);

/// Covariance of (f(0), ∂²f(0), ∂f(0), f(t_1), ..., f(t_m)).
///
/// Block layout, with n = d(d+1)/2:
///   rows 0          f(0)
///   rows 1..n       ∂²f(0)
///   rows n+1..n+d   ∂f(0)
///   remaining       f(t_a)
/// Cross terms are Cov(∂²f(0), f(t)) = μ₂(t) and Cov(∂f(0), f(t)) = μ₁(t) = -∂C(t).
Eigen::MatrixXd joint_covariance(const CovarianceModel& model,
                                 std::span<const Eigen::VectorXd> points);

}  // namespace grftail
