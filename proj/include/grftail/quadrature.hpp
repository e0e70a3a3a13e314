#pragma once

#include <functional>

#include <Eigen/Dense>

namespace grftail {

/// Nodes and weights for ∫ f(x) exp(-x^2) dx.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Golub-Welsch construction from the Hermite Jacobi matrix.
GaussHermiteRule gauss_hermite(int n);

/// Tensor-product rule over R^dim for ∫ f(x) exp(-|x|^2) dx.
double tensor_gauss_hermite(const GaussHermiteRule& rule, int dim,
                            const std::function<double(const Eigen::VectorXd&)>& f);

}  // namespace grftail
