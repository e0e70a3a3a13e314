#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "grftail/kernel.hpp"
#include "grftail/partition.hpp"

namespace grftail {

/// {"family": "sq_exp"|"rat_quad", "d": int, "L": d×d array (nested or flat row-major),
///  "alpha": number (rat_quad only)}. Throws ConfigError.
CovarianceModel parse_kernel(const nlohmann::json& j);
nlohmann::json kernel_to_json(const CovarianceModel& model);

/// Either one box as [[lo, hi], ...] per axis, or a list of such boxes.
Domain parse_domain(const nlohmann::json& j);

struct McConfig {
    long n_samples = 100000;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<int> grid_points_per_axis;
};

struct RunConfig {
    std::optional<CovarianceModel> kernel;
    std::optional<Domain> domain;
    double sigma = 1.0;
    std::vector<double> b;            ///< thresholds, when given directly
    std::vector<double> target_prob;  ///< approximate probabilities to invert into b
    McConfig mc;
    double kappa = 1.0;
    double delta = 0.1;
    nlohmann::json raw;               ///< the full document, for command-specific keys
};

/// Validates the shared keys. "b" and "target_prob" may be scalars or arrays; at most
/// one of them may be present.
RunConfig parse_run_config(const nlohmann::json& j);

Eigen::VectorXd json_vector(const nlohmann::json& j, const char* what);
Eigen::MatrixXd json_matrix(const nlohmann::json& j, const char* what, int rows = -1);

}  // namespace grftail
