#include "grftail/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "grftail/errors.hpp"

namespace grftail {

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw ConfigError("Gauss-Hermite rule needs at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    if (eig.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigen-solve failed");
    GaussHermiteRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights = std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).array().square().transpose();
    return rule;
}

double tensor_gauss_hermite(const GaussHermiteRule& rule, int dim,
                            const std::function<double(const Eigen::VectorXd&)>& f) {
    const auto n = static_cast<int>(rule.nodes.size());
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    Eigen::VectorXd x(dim);
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (int a = 0; a < dim; ++a) {
            x(a) = rule.nodes(idx[a]);
            w *= rule.weights(idx[a]);
        }
        total += w * f(x);
        int a = 0;
        while (a < dim && ++idx[a] == n) idx[a++] = 0;
        if (a == dim) break;
    }
    return total;
}

}  // namespace grftail
