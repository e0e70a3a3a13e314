#include "grftail/kernel.hpp"

#include <cmath>
#include <sstream>

#include "grftail/errors.hpp"

namespace grftail {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw ConfigError(std::string(what) + " contains non-finite entries");
}

void check_dim(const CovarianceModel& model, const Eigen::VectorXd& t) {
    if (t.size() != model.dim()) {
        std::ostringstream os;
        os << "lag vector has dimension " << t.size() << ", kernel expects " << model.dim();
        throw ConfigError(os.str());
    }
}

}  // namespace

CovarianceModel::CovarianceModel(KernelFamily family, Eigen::MatrixXd scale, double alpha)
    : family_(family), scale_(std::move(scale)), alpha_(alpha) {
    if (scale_.rows() == 0 || scale_.rows() != scale_.cols())
        throw ConfigError("scale matrix L must be square with d >= 1");
    require_finite(scale_, "scale matrix L");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(scale_);
    if (!lu.isInvertible()) throw ConfigError("scale matrix L must be invertible");
    metric_ = scale_.transpose() * scale_;
    metric_ = 0.5 * (metric_ + metric_.transpose());
}

CovarianceModel CovarianceModel::squared_exponential(Eigen::MatrixXd scale) {
    return CovarianceModel(KernelFamily::SquaredExponential, std::move(scale), 0.0);
}

CovarianceModel CovarianceModel::rational_quadratic(Eigen::MatrixXd scale, double alpha) {
    const double d = static_cast<double>(scale.rows());
    const double bound = d / 2.0 + 3.0;
    if (!(alpha > bound)) {
        std::ostringstream os;
        os << "rational-quadratic alpha must exceed d/2 + 3 = " << bound << " (got " << alpha << ")";
        throw ConfigError(os.str());
    }
    return CovarianceModel(KernelFamily::RationalQuadratic, std::move(scale), alpha);
}

double CovarianceModel::profile(double s, int order) const {
    const double sign = (order % 2 == 0) ? 1.0 : -1.0;
    if (family_ == KernelFamily::SquaredExponential) return sign * std::exp(-s);
    // d^n/ds^n (1 + s/a)^(-a) = (-1)^n a(a+1)...(a+n-1) / a^n * (1 + s/a)^(-a-n)
    double rising = 1.0;
    for (int k = 0; k < order; ++k) rising *= (alpha_ + k) / alpha_;
    return sign * rising * std::pow(1.0 + s / alpha_, -alpha_ - order);
}

double CovarianceModel::operator()(const Eigen::VectorXd& t) const {
    check_dim(*this, t);
    return profile(0.5 * t.dot(metric_ * t));
}

bool CovarianceModel::is_standardized(double tol) const {
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim(), dim());
    return (metric_ - identity).cwiseAbs().maxCoeff() <= tol;
}

double covariance_eval(const CovarianceModel& model, const Eigen::VectorXd& t) { return model(t); }

Eigen::VectorXd covariance_gradient(const CovarianceModel& model, const Eigen::VectorXd& t) {
    check_dim(model, t);
    const Eigen::VectorXd mt = model.metric() * t;
    return model.profile(0.5 * t.dot(mt), 1) * mt;
}

Eigen::MatrixXd covariance_hessian(const CovarianceModel& model, const Eigen::VectorXd& t) {
    check_dim(model, t);
    const Eigen::VectorXd mt = model.metric() * t;
    const double s = 0.5 * t.dot(mt);
    return model.profile(s, 2) * mt * mt.transpose() + model.profile(s, 1) * model.metric();
}

Eigen::MatrixXd hessian_at_zero(const CovarianceModel& model) {
    return model.profile(0.0, 1) * model.metric();
}

double fourth_derivative_at_zero(const CovarianceModel& model, int i, int j, int k, int l) {
    const Eigen::MatrixXd& m = model.metric();
    return model.profile(0.0, 2) * (m(i, j) * m(k, l) + m(i, k) * m(j, l) + m(i, l) * m(j, k));
}

int vech_size(int d) noexcept { return d * (d + 1) / 2; }

std::vector<std::pair<int, int>> vech_pairs(int d) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(vech_size(d)));
    for (int i = 0; i < d; ++i) pairs.emplace_back(i, i);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    return pairs;
}

Eigen::VectorXd vech(const Eigen::MatrixXd& symmetric) {
    if (symmetric.rows() != symmetric.cols()) throw ConfigError("vech needs a square matrix");
    const int d = static_cast<int>(symmetric.rows());
    const auto pairs = vech_pairs(d);
    Eigen::VectorXd v(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p)
        v(static_cast<Eigen::Index>(p)) = symmetric(pairs[p].first, pairs[p].second);
    return v;
}

Eigen::MatrixXd unvech(const Eigen::VectorXd& v, int d) {
    if (v.size() != vech_size(d)) throw ConfigError("vector length does not match d(d+1)/2");
    const auto pairs = vech_pairs(d);
    Eigen::MatrixXd m(d, d);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        m(i, j) = m(j, i) = v(static_cast<Eigen::Index>(p));
    }
    return m;
}

SpectralMoments spectral_moments(const CovarianceModel& model) {
    const int d = model.dim();
    const Eigen::MatrixXd hess = hessian_at_zero(model);
    const double deviation = (hess + Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
    if (deviation > kStandardizationTolerance) {
        std::ostringstream os;
        os << "spectral moments need a standardized model (max |ΔC(0) + I| = " << deviation
           << " exceeds " << kStandardizationTolerance << "); call standardize() first";
        throw ConfigError(os.str());
    }

    const auto pairs = vech_pairs(d);
    const int n = vech_size(d);

    SpectralMoments out;
    out.dimension = d;
    out.hessian_at_zero = hess;
    out.mu20 = vech(hess).transpose();
    out.mu22.resize(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            out.mu22(p, q) = fourth_derivative_at_zero(model, pairs[p].first, pairs[p].second,
                                                       pairs[q].first, pairs[q].second);
    out.quartic_diag.resize(d);
    for (int i = 0; i < d; ++i) out.quartic_diag(i) = fourth_derivative_at_zero(model, i, i, i, i);

    out.gamma.resize(n + 1, n + 1);
    out.gamma(0, 0) = 1.0;
    out.gamma.block(0, 1, 1, n) = out.mu20;
    out.gamma.block(1, 0, n, 1) = out.mu20.transpose();
    out.gamma.block(1, 1, n, n) = out.mu22;

    out.one_vector = Eigen::VectorXd::Zero(n);
    out.one_vector.head(d).setOnes();
    return out;
}

StandardizedModel standardize(const CovarianceModel& raw) {
    const int d = raw.dim();
    const Eigen::MatrixXd sigma = -hessian_at_zero(raw);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition of -ΔC(0) failed");
    const Eigen::VectorXd lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 1e-14 * std::max(1.0, lambda.maxCoeff())))
        throw ConfigError("-ΔC(0) is singular or indefinite; the model cannot be standardized");

    // Already standard up to rounding: return the exact identity so that
    // standardization is idempotent.
    if (raw.is_standardized(1e-12)) {
        return {raw, {Eigen::MatrixXd::Identity(d, d), 1.0}};
    }

    const Eigen::MatrixXd& v = eig.eigenvectors();
    const Eigen::MatrixXd half = v * lambda.cwiseSqrt().asDiagonal() * v.transpose();
    const Eigen::MatrixXd inv_half = v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();

    AffineStandardization transform;
    transform.sigma_half = 0.5 * (half + half.transpose());
    transform.measure_factor = 1.0 / lambda.cwiseSqrt().prod();

    const Eigen::MatrixXd new_scale = raw.scale() * inv_half;
    CovarianceModel model = raw.family() == KernelFamily::SquaredExponential
                                ? CovarianceModel::squared_exponential(new_scale)
                                : CovarianceModel::rational_quadratic(new_scale, raw.alpha());
    return {std::move(model), std::move(transform)};
}

Eigen::MatrixXd joint_covariance(const CovarianceModel& model,
                                 std::span<const Eigen::VectorXd> points) {
    const int d = model.dim();
    const int n = vech_size(d);
    const int m = static_cast<int>(points.size());
    for (const auto& t : points) check_dim(model, t);

    const auto pairs = vech_pairs(d);
    const int second = 1;
    const int first = 1 + n;
    const int field = 1 + n + d;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(field + m, field + m);

    const Eigen::MatrixXd hess0 = hessian_at_zero(model);
    auto set = [&cov](int r, int c, double v) { cov(r, c) = cov(c, r) = v; };
    cov(0, 0) = 1.0;
    for (int p = 0; p < n; ++p) {
        const auto [i, j] = pairs[p];
        set(0, second + p, hess0(i, j));
        for (int q = 0; q < n; ++q) {
            const auto [k, l] = pairs[q];
            cov(second + p, second + q) = fourth_derivative_at_zero(model, i, j, k, l);
        }
    }
    cov.block(first, first, d, d) = -hess0;

    for (int a = 0; a < m; ++a) {
        const Eigen::VectorXd& t = points[static_cast<std::size_t>(a)];
        const Eigen::VectorXd grad = covariance_gradient(model, t);
        const Eigen::MatrixXd hess = covariance_hessian(model, t);
        set(0, field + a, model(t));
        for (int p = 0; p < n; ++p) set(second + p, field + a, hess(pairs[p].first, pairs[p].second));
        for (int i = 0; i < d; ++i) set(first + i, field + a, -grad(i));
        for (int b = 0; b <= a; ++b)
            set(field + a, field + b, model(Eigen::VectorXd(t - points[static_cast<std::size_t>(b)])));
    }
    return cov;
}

}  // namespace grftail
