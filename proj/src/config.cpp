#include "grftail/config.hpp"

#include <cmath>
#include <sstream>

#include "grftail/errors.hpp"

namespace grftail {

using nlohmann::json;

namespace {

double number(const json& j, const char* what) {
    if (!j.is_number()) throw ConfigError(std::string(what) + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
    return v;
}

std::vector<double> scalar_or_list(const json& j, const char* what) {
    std::vector<double> out;
    if (j.is_array()) {
        if (j.empty()) throw ConfigError(std::string(what) + " must not be empty");
        for (const auto& x : j) out.push_back(number(x, what));
    } else {
        out.push_back(number(j, what));
    }
    return out;
}

}  // namespace

Eigen::VectorXd json_vector(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a non-empty array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
    return v;
}

Eigen::MatrixXd json_matrix(const json& j, const char* what, int rows) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a non-empty array");
    if (j.front().is_array()) {
        const auto r = static_cast<Eigen::Index>(j.size());
        const auto c = static_cast<Eigen::Index>(j.front().size());
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index a = 0; a < r; ++a) {
            const auto& row = j[static_cast<std::size_t>(a)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
                throw ConfigError(std::string(what) + " rows must have equal length");
            for (Eigen::Index b = 0; b < c; ++b) m(a, b) = number(row[static_cast<std::size_t>(b)], what);
        }
        return m;
    }
    // Flat row-major storage; needs the row count.
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::Index r = rows > 0 ? rows : static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
    if (r <= 0 || n % r != 0 || (rows <= 0 && r * r != n))
        throw ConfigError(std::string(what) + " flat array has the wrong length");
    const Eigen::Index c = n / r;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index a = 0; a < r; ++a)
        for (Eigen::Index b = 0; b < c; ++b) m(a, b) = number(j[static_cast<std::size_t>(a * c + b)], what);
    return m;
}

CovarianceModel parse_kernel(const json& j) {
    if (!j.is_object()) throw ConfigError("kernel must be a JSON object");
    if (!j.contains("family") || !j["family"].is_string())
        throw ConfigError("kernel.family must be \"sq_exp\" or \"rat_quad\"");
    const std::string family = j["family"].get<std::string>();
    if (!j.contains("d") || !j["d"].is_number_integer() || j["d"].get<int>() < 1)
        throw ConfigError("kernel.d must be a positive integer");
    const int d = j["d"].get<int>();
    Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(d, d);
    if (j.contains("L")) scale = json_matrix(j["L"], "kernel.L", d);
    if (scale.rows() != d || scale.cols() != d) {
        std::ostringstream os;
        os << "kernel.L must be " << d << "x" << d;
        throw ConfigError(os.str());
    }
    if (family == "sq_exp") {
        if (j.contains("alpha")) throw ConfigError("kernel.alpha only applies to rat_quad");
        return CovarianceModel::squared_exponential(scale);
    }
    if (family == "rat_quad") {
        if (!j.contains("alpha")) throw ConfigError("rat_quad kernels need kernel.alpha");
        return CovarianceModel::rational_quadratic(scale, number(j["alpha"], "kernel.alpha"));
    }
    throw ConfigError("unknown kernel family \"" + family + "\" (expected sq_exp or rat_quad)");
}

json kernel_to_json(const CovarianceModel& model) {
    json j;
    j["family"] = model.family() == KernelFamily::SquaredExponential ? "sq_exp" : "rat_quad";
    j["d"] = model.dim();
    json rows = json::array();
    for (int a = 0; a < model.dim(); ++a) {
        json row = json::array();
        for (int b = 0; b < model.dim(); ++b) row.push_back(model.scale()(a, b));
        rows.push_back(row);
    }
    j["L"] = rows;
    if (model.family() == KernelFamily::RationalQuadratic) j["alpha"] = model.alpha();
    return j;
}

namespace {

Box parse_box(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("a domain box is a list of [lo, hi] pairs");
    const auto d = static_cast<Eigen::Index>(j.size());
    Box box{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (Eigen::Index a = 0; a < d; ++a) {
        const auto& pair = j[static_cast<std::size_t>(a)];
        if (!pair.is_array() || pair.size() != 2) throw ConfigError("domain axes must be [lo, hi] pairs");
        box.lo(a) = number(pair[0], "domain bound");
        box.hi(a) = number(pair[1], "domain bound");
    }
    return box;
}

}  // namespace

Domain parse_domain(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("empty domain");
    if (!j.front().is_array() || j.front().empty()) throw ConfigError("malformed domain");
    if (j.front().front().is_number()) return Domain::single(parse_box(j));
    std::vector<Box> boxes;
    for (const auto& b : j) boxes.push_back(parse_box(b));
    return Domain(std::move(boxes));
}

RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    cfg.raw = j;
    if (j.contains("kernel")) cfg.kernel = parse_kernel(j["kernel"]);
    if (j.contains("domain")) cfg.domain = parse_domain(j["domain"]);
    if (cfg.kernel && cfg.domain && cfg.kernel->dim() != cfg.domain->dim())
        throw ConfigError("kernel.d and domain dimension differ");
    if (j.contains("sigma")) {
        cfg.sigma = number(j["sigma"], "sigma");
        if (!(cfg.sigma > 0.0)) throw ConfigError("sigma must be positive");
    }
    if (j.contains("b") && j.contains("target_prob"))
        throw ConfigError("give exactly one of b and target_prob");
    if (j.contains("b")) cfg.b = scalar_or_list(j["b"], "b");
    if (j.contains("target_prob")) {
        cfg.target_prob = scalar_or_list(j["target_prob"], "target_prob");
        for (double p : cfg.target_prob)
            if (!(p > 0.0 && p < 1.0)) throw ConfigError("target_prob must lie in (0, 1)");
    }
    if (j.contains("kappa")) cfg.kappa = number(j["kappa"], "kappa");
    if (j.contains("delta")) cfg.delta = number(j["delta"], "delta");
    if (j.contains("mc")) {
        const json& mc = j["mc"];
        if (!mc.is_object()) throw ConfigError("mc must be an object");
        if (mc.contains("n_samples")) {
            if (!mc["n_samples"].is_number_integer() || mc["n_samples"].get<long>() < 1)
                throw ConfigError("mc.n_samples must be a positive integer");
            cfg.mc.n_samples = mc["n_samples"].get<long>();
        }
        if (mc.contains("seed")) {
            if (!mc["seed"].is_number_unsigned()) throw ConfigError("mc.seed must be a non-negative integer");
            cfg.mc.seed = mc["seed"].get<std::uint64_t>();
        }
        if (mc.contains("workers")) {
            if (!mc["workers"].is_number_integer() || mc["workers"].get<int>() < 1)
                throw ConfigError("mc.workers must be a positive integer");
            cfg.mc.workers = mc["workers"].get<int>();
        }
        if (mc.contains("grid_points_per_axis")) {
            if (!mc["grid_points_per_axis"].is_number_integer() || mc["grid_points_per_axis"].get<int>() < 2)
                throw ConfigError("mc.grid_points_per_axis must be an integer >= 2");
            cfg.mc.grid_points_per_axis = mc["grid_points_per_axis"].get<int>();
        }
    }
    return cfg;
}

}  // namespace grftail
