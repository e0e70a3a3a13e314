#include "grftail/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grftail/asymptotics.hpp"
#include "grftail/config.hpp"
#include "grftail/errors.hpp"
#include "grftail/fieldsim.hpp"
#include "grftail/kernel.hpp"
#include "grftail/lognormal.hpp"
#include "grftail/normal.hpp"
#include "grftail/partition.hpp"

namespace grftail {

using nlohmann::json;

namespace {

// Streams for separate rows of one report never overlap: row r starts at r << 40.
constexpr std::uint64_t kRowStreamStride = std::uint64_t{1} << 40;

struct Report {
    json doc = json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

struct Invocation {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_path;
    std::string format;
};

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string csv_cell(const json& v) {
    if (v.is_number_float()) return format_number(v.get<double>());
    if (v.is_number()) return v.dump();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void write_csv(std::ostream& os, const Report& r) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << '\n';
    }
}

double log10_of(double p) { return p > 0.0 ? std::log10(p) : -std::numeric_limits<double>::infinity(); }

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        json row = json::array();
        for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json estimate_json(const EstimateWithError& e) {
    return {{"estimate", e.estimate},
            {"log10_estimate", log10_of(e.estimate)},
            {"std_error", e.std_error},
            {"relative_error", e.relative_error()},
            {"n_samples", e.n_samples},
            {"ess", e.ess},
            {"warnings", e.warnings}};
}

json approx_json(const TailApproximation& a) {
    return {{"b", a.b},
            {"sigma", a.sigma},
            {"d", a.dimension},
            {"u", a.u},
            {"u_tilde", a.u_tilde},
            {"H", a.H},
            {"domain_measure", a.domain_measure},
            {"probability", a.probability},
            {"log10_probability", a.log10_probability},
            {"out_of_range", a.out_of_range},
            {"warnings", a.warnings}};
}

// Scalar configs report one object, list configs an array under "results".
void attach_results(Report& r, std::vector<json> results, bool scalar_input) {
    if (scalar_input && results.size() == 1) {
        for (auto& [k, v] : results.front().items()) r.doc[k] = v;
    } else {
        r.doc["results"] = std::move(results);
    }
}

bool is_scalar_key(const json& raw, const char* key) { return raw.contains(key) && !raw[key].is_array(); }

const CovarianceModel& need_kernel(const RunConfig& cfg) {
    if (!cfg.kernel) throw ConfigError("config needs a \"kernel\" object");
    return *cfg.kernel;
}

const Domain& need_domain(const RunConfig& cfg) {
    if (!cfg.domain) throw ConfigError("config needs a \"domain\"");
    return *cfg.domain;
}

const Box& need_single_box(const RunConfig& cfg) {
    const Domain& domain = need_domain(cfg);
    if (domain.boxes().size() != 1) throw ConfigError("this command needs a single-box domain");
    return domain.boxes().front();
}

double config_number(const json& raw, const char* key) {
    if (!raw.contains(key) || !raw[key].is_number()) throw ConfigError(std::string("config needs numeric \"") + key + "\"");
    const double v = raw[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string(key) + " must be finite");
    return v;
}

std::vector<double> config_list(const json& raw, const char* key) {
    if (!raw.contains(key)) throw ConfigError(std::string("config needs \"") + key + "\"");
    const json& j = raw[key];
    if (!j.is_array()) return {config_number(raw, key)};
    const Eigen::VectorXd v = json_vector(j, key);
    return {v.data(), v.data() + v.size()};
}

// Domain measure in raw coordinates: "domain" if present, else "domain_measure".
double raw_measure(const RunConfig& cfg) {
    if (cfg.domain) return cfg.domain->measure();
    if (cfg.raw.contains("domain_measure")) return config_number(cfg.raw, "domain_measure");
    throw ConfigError("config needs \"domain\" or \"domain_measure\"");
}

McOptions mc_options(const RunConfig& cfg, const Invocation& inv) {
    McOptions opts;
    const auto seed = inv.seed ? inv.seed : cfg.mc.seed;
    if (!seed) throw ConfigError("Monte Carlo commands need a seed (--seed or mc.seed)");
    opts.seed = *seed;
    int workers = 1;
    if (const char* env = std::getenv("GRFTAILS_WORKERS"); env && *env) {
        int parsed = 0;
        const auto res = std::from_chars(env, env + std::char_traits<char>::length(env), parsed);
        if (res.ec != std::errc() || *res.ptr != '\0' || parsed < 1)
            throw ConfigError("GRFTAILS_WORKERS must be a positive integer");
        workers = parsed;
    }
    if (cfg.mc.workers) workers = *cfg.mc.workers;
    if (inv.workers) {
        if (*inv.workers < 1) throw ConfigError("--workers must be positive");
        workers = *inv.workers;
    }
    opts.workers = workers;
    return opts;
}

// Thresholds in raw units, from b directly or by inverting the approximation at target_prob.
std::vector<double> thresholds(const RunConfig& cfg, const CovarianceModel& raw, double measure) {
    if (!cfg.b.empty()) return cfg.b;
    if (cfg.target_prob.empty()) throw ConfigError("give exactly one of b and target_prob");
    const StandardizedModel s = standardize(raw);
    std::vector<double> out;
    for (double p : cfg.target_prob) {
        const double b_std = threshold_for_probability(s.model, s.transform.standardized_measure(measure),
                                                       cfg.sigma, p);
        out.push_back(b_std * s.transform.measure_factor);
    }
    return out;
}

bool scalar_threshold_input(const RunConfig& cfg) {
    return is_scalar_key(cfg.raw, "b") || is_scalar_key(cfg.raw, "target_prob");
}

const CovarianceModel& need_standardized(const RunConfig& cfg) {
    const CovarianceModel& model = need_kernel(cfg);
    if (!model.is_standardized(kStandardizationTolerance))
        throw ConfigError("this command works in standardized coordinates; give a kernel with L^T L = I");
    return model;
}

// Points per axis for a box: config value, or the resolution rule applied to the
// box sides measured in standardized coordinates.
int grid_points(const RunConfig& cfg, const CovarianceModel& raw, const Box& box, double u) {
    if (cfg.mc.grid_points_per_axis) return *cfg.mc.grid_points_per_axis;
    const Eigen::MatrixXd sigma_half = standardize(raw).transform.sigma_half;
    int m = 2;
    for (int j = 0; j < box.dim(); ++j)
        m = std::max(m, resolution_points(u, sigma_half.col(j).norm() * box.side()(j)));
    return m;
}

Report cmd_moments(const RunConfig& cfg) {
    const CovarianceModel& raw = need_kernel(cfg);
    const StandardizedModel s = standardize(raw);
    const SpectralMoments m = spectral_moments(s.model);
    Report r;
    r.doc = {{"d", m.dimension},
             {"kernel", kernel_to_json(raw)},
             {"standardized_input", raw.is_standardized(kStandardizationTolerance)},
             {"measure_factor", s.transform.measure_factor},
             {"sigma_half", to_json(s.transform.sigma_half)},
             {"mu20", to_json(Eigen::VectorXd(m.mu20.transpose()))},
             {"mu22", to_json(m.mu22)},
             {"quartic_diag", to_json(m.quartic_diag)},
             {"gamma", to_json(m.gamma)},
             {"gamma_determinant", m.gamma_determinant()}};
    r.columns = {"quantity", "value"};
    for (Eigen::Index i = 0; i < m.mu20.size(); ++i)
        r.rows.push_back({"mu20[" + std::to_string(i) + "]", m.mu20(i)});
    for (Eigen::Index i = 0; i < m.mu22.rows(); ++i)
        for (Eigen::Index j = 0; j < m.mu22.cols(); ++j)
            r.rows.push_back({"mu22[" + std::to_string(i) + "][" + std::to_string(j) + "]", m.mu22(i, j)});
    for (Eigen::Index i = 0; i < m.quartic_diag.size(); ++i)
        r.rows.push_back({"quartic_diag[" + std::to_string(i) + "]", m.quartic_diag(i)});
    r.rows.push_back({"gamma_determinant", m.gamma_determinant()});
    r.rows.push_back({"measure_factor", s.transform.measure_factor});
    return r;
}

Report cmd_approx(const RunConfig& cfg) {
    const CovarianceModel& raw = need_kernel(cfg);
    const double measure = raw_measure(cfg);
    const double mf = standardize(raw).transform.measure_factor;
    Report r;
    r.columns = {"b", "u", "u_tilde", "H", "domain_measure", "probability", "log10_probability"};
    std::vector<json> results;
    for (double b : thresholds(cfg, raw, measure)) {
        const TailApproximation a = tail_approx_raw(raw, measure, cfg.sigma, b);
        json row = approx_json(a);
        row["raw_domain_measure"] = measure;
        row["measure_factor"] = mf;
        results.push_back(row);
        r.rows.push_back({a.b, a.u, a.u_tilde, a.H, a.domain_measure, a.probability, a.log10_probability});
    }
    attach_results(r, std::move(results), scalar_threshold_input(cfg));
    return r;
}

Report cmd_validate(const RunConfig& cfg, const Invocation& inv) {
    const CovarianceModel& raw = need_kernel(cfg);
    const Box& box = need_single_box(cfg);
    McOptions opts = mc_options(cfg, inv);
    const std::vector<double> bs = thresholds(cfg, raw, box.measure());

    std::vector<TailApproximation> approx;
    double u_max = 0.0;
    for (double b : bs) {
        approx.push_back(tail_approx_raw(raw, box.measure(), cfg.sigma, b));
        u_max = std::max(u_max, approx.back().u);
    }
    const FieldGrid grid = FieldGrid::trapezoidal(box, grid_points(cfg, raw, box, u_max));

    Report r;
    r.columns = {"b", "u", "approx", "is_estimate", "std_error", "ratio"};
    json results = json::array();
    for (std::size_t i = 0; i < bs.size(); ++i) {
        const TailApproximation& a = approx[i];
        McOptions row_opts = opts;
        row_opts.stream_base = opts.stream_base + i * kRowStreamStride;
        const EstimateWithError is =
            importance_sampling_mc(raw, grid, cfg.sigma, bs[i], cfg.mc.n_samples, row_opts, a.u);
        const double ratio = a.probability / is.estimate;
        r.rows.push_back({bs[i], a.u, a.probability, is.estimate, is.std_error, ratio});
        json row = {{"b", bs[i]},
                    {"u", a.u},
                    {"approx", a.probability},
                    {"log10_approx", a.log10_probability},
                    {"is", estimate_json(is)},
                    {"ratio", ratio},
                    {"warnings", a.warnings}};
        results.push_back(row);
    }
    r.doc = {{"grid_points_per_axis", static_cast<int>(std::lround(std::pow(grid.size(), 1.0 / grid.dim())))},
             {"seed", opts.seed},
             {"n_samples", cfg.mc.n_samples},
             {"results", results}};
    return r;
}

Report cmd_u_solve(const RunConfig& cfg) {
    int d = 0;
    if (cfg.kernel)
        d = cfg.kernel->dim();
    else if (cfg.raw.contains("d") && cfg.raw["d"].is_number_integer())
        d = cfg.raw["d"].get<int>();
    else
        throw ConfigError("u_solve needs \"d\" or a kernel");
    if (d < 0) throw ConfigError("d must be non-negative");
    if (cfg.b.empty()) throw ConfigError("u_solve needs \"b\"");
    Report r;
    r.columns = {"b", "sigma", "d", "u", "u_tilde", "relative_residual", "minimum_b"};
    std::vector<json> results;
    const double min_b = std::exp(minimum_log_b(cfg.sigma, d));
    for (double b : cfg.b) {
        if (!(b > 0.0)) throw ConfigError("b must be positive");
        const double u = solve_u(b, cfg.sigma, d);
        double ut = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::string> warnings;
        try {
            ut = u_closed_form(b, cfg.sigma, d);
        } catch (const InfeasibleError&) {
            warnings.emplace_back("closed-form u_tilde undefined at this b");
        }
        const double residual = std::abs(log_threshold_b(u, cfg.sigma, d) - std::log(b)) /
                                std::max(1.0, std::abs(std::log(b)));
        results.push_back({{"b", b}, {"sigma", cfg.sigma}, {"d", d}, {"u", u}, {"u_tilde", ut},
                           {"relative_residual", residual}, {"minimum_b", min_b}, {"warnings", warnings}});
        r.rows.push_back({b, cfg.sigma, d, u, ut, residual, min_b});
    }
    attach_results(r, std::move(results), is_scalar_key(cfg.raw, "b"));
    return r;
}

Report cmd_h_const(const RunConfig& cfg) {
    const StandardizedModel s = standardize(need_kernel(cfg));
    const SpectralMoments m = spectral_moments(s.model);
    const double closed = constant_H(m, cfg.sigma);
    const double quad = constant_H_quadrature(m, cfg.sigma);
    const double pre = constant_H_prefactor(m, cfg.sigma);
    Report r;
    r.doc = {{"sigma", cfg.sigma},
             {"d", m.dimension},
             {"H", closed},
             {"H_quadrature", quad},
             {"relative_difference", std::abs(closed - quad) / closed},
             {"prefactor", pre},
             {"integral", closed / pre}};
    r.columns = {"sigma", "d", "H", "H_quadrature", "prefactor"};
    r.rows.push_back({cfg.sigma, m.dimension, closed, quad, pre});
    return r;
}

// u from "u" directly or from the (single) threshold.
double cover_level(const RunConfig& cfg, const CovarianceModel* model, const Domain& domain) {
    if (cfg.raw.contains("u")) return config_number(cfg.raw, "u");
    if (!model) throw ConfigError("cover needs \"u\" or a kernel with b / target_prob");
    const std::vector<double> bs = thresholds(cfg, *model, domain.measure());
    if (bs.size() != 1) throw ConfigError("this command takes a single threshold");
    return solve_u(bs.front(), cfg.sigma, model->dim());
}

Report cmd_cover(const RunConfig& cfg) {
    const Domain& domain = need_domain(cfg);
    const CovarianceModel* model = cfg.kernel ? &need_standardized(cfg) : nullptr;
    const double u = cover_level(cfg, model, domain);
    const PanelCover cover = build_cover(domain, u, cfg.kappa, cfg.delta);

    auto index_json = [](const std::vector<PanelIndex>& ks) {
        json out = json::array();
        for (const auto& k : ks) out.push_back(k);
        return out;
    };
    Report r;
    r.doc = {{"u", u},
             {"epsilon", cover.epsilon},
             {"kappa", cover.kappa},
             {"delta", cover.delta},
             {"anchor", to_json(cover.anchor)},
             {"domain_measure", domain.measure()},
             {"inner_count", cover.inner_indices.size()},
             {"outer_count", cover.outer_indices.size()},
             {"inner_measure", cover.inner_measure()},
             {"outer_measure", cover.outer_measure()},
             {"inner_indices", index_json(cover.inner_indices)},
             {"outer_indices", index_json(cover.outer_indices)}};
    if (model) {
        const double b = threshold_b(u, cfg.sigma, model->dim());
        const PanelBounds bounds = sum_panel_approx(cover, *model, cfg.sigma, b);
        r.doc["b"] = b;
        r.doc["sum_panel_lower"] = bounds.lower;
        r.doc["log10_sum_panel_lower"] = log10_of(bounds.lower);
        r.doc["sum_panel_upper"] = bounds.upper;
        r.doc["log10_sum_panel_upper"] = log10_of(bounds.upper);
    }

    const int d = domain.dim();
    r.columns = {"side"};
    for (int j = 0; j < d; ++j) r.columns.push_back("k" + std::to_string(j + 1));
    for (int j = 0; j < d; ++j) r.columns.push_back("lo" + std::to_string(j + 1));
    for (int j = 0; j < d; ++j) r.columns.push_back("hi" + std::to_string(j + 1));
    auto add = [&](const char* side, const std::vector<PanelIndex>& ks) {
        for (const auto& k : ks) {
            const Box p = cover.panel(k);
            std::vector<json> row{side};
            for (long kj : k) row.emplace_back(kj);
            for (int j = 0; j < d; ++j) row.emplace_back(p.lo(j));
            for (int j = 0; j < d; ++j) row.emplace_back(p.hi(j));
            r.rows.push_back(std::move(row));
        }
    };
    add("inner", cover.inner_indices);
    add("outer", cover.outer_indices);
    return r;
}

Report cmd_panels_vs_union(const RunConfig& cfg, const Invocation& inv) {
    const CovarianceModel& model = need_standardized(cfg);
    const Domain& domain = need_domain(cfg);
    const McOptions opts = mc_options(cfg, inv);
    const double u = cover_level(cfg, &model, domain);
    const double b = threshold_b(u, cfg.sigma, model.dim());
    const PanelCover cover = build_cover(domain, u, cfg.kappa, cfg.delta);

    CoverSide side = CoverSide::Outer;
    if (cfg.raw.contains("side")) {
        const std::string s = cfg.raw["side"].is_string() ? cfg.raw["side"].get<std::string>() : "";
        if (s == "inner")
            side = CoverSide::Inner;
        else if (s != "outer")
            throw ConfigError("side must be \"inner\" or \"outer\"");
    }
    int points = 0;
    if (cfg.raw.contains("points_per_panel")) points = static_cast<int>(config_number(cfg.raw, "points_per_panel"));

    const PanelUnionEstimate est =
        panel_sum_vs_union_mc(model, cover, cfg.sigma, b, cfg.mc.n_samples, opts, points, side);
    const double ratio = est.sum_est.estimate / est.union_est.estimate;
    const PanelBounds bounds = sum_panel_approx(cover, model, cfg.sigma, b);
    const std::size_t panels = side == CoverSide::Outer ? cover.outer_indices.size() : cover.inner_indices.size();

    Report r;
    r.doc = {{"b", b},
             {"u", u},
             {"epsilon", cover.epsilon},
             {"side", side == CoverSide::Outer ? "outer" : "inner"},
             {"panels", panels},
             {"points_per_panel", est.points_per_panel},
             {"union", estimate_json(est.union_est)},
             {"sum", estimate_json(est.sum_est)},
             {"ratio", ratio},
             {"sum_panel_approx_lower", bounds.lower},
             {"sum_panel_approx_upper", bounds.upper}};
    r.columns = {"b", "u", "epsilon", "panels", "union_estimate", "union_std_error", "sum_estimate",
                 "sum_std_error", "ratio"};
    r.rows.push_back({b, u, cover.epsilon, panels, est.union_est.estimate, est.union_est.std_error,
                      est.sum_est.estimate, est.sum_est.std_error, ratio});
    return r;
}

Report cmd_suprate(const RunConfig& cfg, const Invocation& inv) {
    const CovarianceModel& model = need_standardized(cfg);
    const Box& box = need_single_box(cfg);
    const McOptions opts = mc_options(cfg, inv);
    const std::vector<double> levels = config_list(cfg.raw, "levels");
    double u_max = 0.0;
    for (double u : levels) {
        if (!(u > 0.0)) throw ConfigError("levels must be positive");
        u_max = std::max(u_max, u);
    }
    const FieldGrid grid = FieldGrid::trapezoidal(box, grid_points(cfg, model, box, u_max));

    std::vector<double> probs;
    std::vector<EstimateWithError> ests;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        McOptions row_opts = opts;
        row_opts.stream_base = opts.stream_base + i * kRowStreamStride;
        ests.push_back(sup_mc(model, grid, levels[i], cfg.mc.n_samples, row_opts));
        probs.push_back(ests.back().estimate);
    }
    const SupConstantFit fit = fit_sup_constant(levels, probs, box.measure(), model.dim());

    Report r;
    r.columns = {"u", "shape", "estimate", "log10_estimate", "std_error", "G"};
    json results = json::array();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double shape = sup_rate_shape(levels[i], model.dim());
        r.rows.push_back({levels[i], shape, ests[i].estimate, log10_of(ests[i].estimate), ests[i].std_error,
                          fit.per_level[i]});
        json row = estimate_json(ests[i]);
        row["u"] = levels[i];
        row["shape"] = shape;
        row["G"] = fit.per_level[i];
        results.push_back(row);
    }
    r.doc = {{"domain_measure", box.measure()},
             {"grid_points", grid.size()},
             {"G_mean", fit.mean},
             {"G_relative_spread", fit.relative_spread},
             {"results", results}};
    return r;
}

Report cmd_lognormal(const RunConfig& cfg, const Invocation& inv) {
    const json& raw = cfg.raw;
    if (!raw.contains("mu") || !raw.contains("cov")) throw ConfigError("lognormal needs \"mu\" and \"cov\"");
    const Eigen::VectorXd mu = json_vector(raw["mu"], "mu");
    const LogNormalPortfolio portfolio(mu, json_matrix(raw["cov"], "cov", static_cast<int>(mu.size())));

    std::vector<double> bs = cfg.b;
    bool scalar = is_scalar_key(raw, "b");
    if (bs.empty()) {
        if (!raw.contains("marginal_tail")) throw ConfigError("lognormal needs \"b\" or \"marginal_tail\"");
        scalar = is_scalar_key(raw, "marginal_tail");
        // The tail is that of the first component.
        for (double t : config_list(raw, "marginal_tail")) {
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("marginal_tail must lie in (0, 1)");
            bs.push_back(threshold_for_marginal_tail(t, mu(0), portfolio.cov()(0, 0)));
        }
    }
    const bool run_mc = inv.seed.has_value() || cfg.mc.seed.has_value();
    McOptions opts;
    if (run_mc) opts = mc_options(cfg, inv);

    Report r;
    r.columns = {"b", "approx", "log10_approx"};
    if (run_mc) r.columns.insert(r.columns.end(), {"mc_estimate", "std_error", "ratio"});
    std::vector<json> results;
    for (std::size_t i = 0; i < bs.size(); ++i) {
        const double approx = one_big_jump_approx(portfolio, bs[i]);
        json row = {{"b", bs[i]}, {"approx", approx}, {"log10_approx", log10_of(approx)}};
        std::vector<json> cells{bs[i], approx, log10_of(approx)};
        if (run_mc) {
            McOptions row_opts = opts;
            row_opts.stream_base = opts.stream_base + i * kRowStreamStride;
            const EstimateWithError e = sum_tail_mc(portfolio, bs[i], cfg.mc.n_samples, row_opts);
            row["mc"] = estimate_json(e);
            row["ratio"] = e.estimate / approx;
            cells.insert(cells.end(), {e.estimate, e.std_error, e.estimate / approx});
        }
        results.push_back(row);
        r.rows.push_back(std::move(cells));
    }
    attach_results(r, std::move(results), scalar);
    return r;
}

Report cmd_sample(const RunConfig& cfg, const Invocation& inv) {
    const CovarianceModel& raw = need_kernel(cfg);
    const Box& box = need_single_box(cfg);
    const McOptions opts = mc_options(cfg, inv);
    const int m = cfg.mc.grid_points_per_axis.value_or(64);
    const FieldGrid grid = FieldGrid::trapezoidal(box, m);
    const FieldSample sample = sample_field(raw, grid, {opts.seed, opts.stream_base});

    Report r;
    const int d = grid.dim();
    for (int j = 0; j < d; ++j) r.columns.push_back("x" + std::to_string(j + 1));
    r.columns.push_back("value");
    json nodes = json::array();
    for (int i = 0; i < grid.size(); ++i) {
        std::vector<json> row;
        for (int j = 0; j < d; ++j) row.emplace_back(grid.nodes[static_cast<std::size_t>(i)](j));
        row.emplace_back(sample.values(i));
        nodes.push_back(to_json(grid.nodes[static_cast<std::size_t>(i)]));
        r.rows.push_back(std::move(row));
    }
    r.doc = {{"seed", opts.seed}, {"nodes", nodes}, {"values", to_json(sample.values)}};
    return r;
}

json load_config(const std::string& path) {
    if (path.empty()) throw ConfigError("--config <path> is required");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON in ") + path + ": " + e.what());
    }
}

Report dispatch(const Invocation& inv, const RunConfig& cfg) {
    const std::string& c = inv.command;
    if (c == "moments") return cmd_moments(cfg);
    if (c == "approx") return cmd_approx(cfg);
    if (c == "validate") return cmd_validate(cfg, inv);
    if (c == "u_solve") return cmd_u_solve(cfg);
    if (c == "h_const") return cmd_h_const(cfg);
    if (c == "cover") return cmd_cover(cfg);
    if (c == "panels_vs_union") return cmd_panels_vs_union(cfg, inv);
    if (c == "suprate") return cmd_suprate(cfg, inv);
    if (c == "lognormal") return cmd_lognormal(cfg, inv);
    if (c == "sample") return cmd_sample(cfg, inv);
    throw ConfigError("unknown command " + c);
}

void emit(const Report& r, const Invocation& inv, std::ostream& out) {
    auto write = [&](std::ostream& os) {
        if (inv.format == "csv")
            write_csv(os, r);
        else
            os << r.doc.dump(2) << '\n';
    };
    if (inv.out_path.empty()) {
        write(out);
        return;
    }
    std::ofstream file(inv.out_path, std::ios::binary);
    if (!file) throw ConfigError("cannot open output file " + inv.out_path);
    write(file);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tail approximations for integrals of exponentiated Gaussian random fields"};
    app.require_subcommand(1);
    app.fallthrough();

    Invocation inv;
    std::uint64_t seed = 0;
    int workers = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed)");
    auto* workers_opt = app.add_option("--workers", workers, "worker threads (default: GRFTAILS_WORKERS or 1)");
    app.add_option("--config", inv.config_path, "JSON config file");
    app.add_option("--out", inv.out_path, "write the report here instead of stdout");
    app.add_option("--format", inv.format, "report format")->check(CLI::IsMember({"json", "csv"}));

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"moments", "spectral moments and standardization of a kernel"},
        {"approx", "tail approximation of P(I > b)"},
        {"validate", "approximation against importance sampling (CSV)"},
        {"u_solve", "solve the threshold equation for u"},
        {"h_const", "constant H in closed form and by quadrature"},
        {"cover", "inner and outer panel covers"},
        {"panels_vs_union", "sum of panel probabilities against the union"},
        {"suprate", "tail of the supremum and the fitted constant"},
        {"lognormal", "one-big-jump approximation for log-normal sums"},
        {"sample", "one field sample on a grid (CSV)"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitConfig;
    }
    inv.command = app.get_subcommands().front()->get_name();
    if (seed_opt->count()) inv.seed = seed;
    if (workers_opt->count()) inv.workers = workers;
    if (inv.format.empty()) inv.format = inv.command == "validate" || inv.command == "sample" ? "csv" : "json";

    try {
        const RunConfig cfg = parse_run_config(load_config(inv.config_path));
        emit(dispatch(inv, cfg), inv, out);
        return kExitOk;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace grftail
