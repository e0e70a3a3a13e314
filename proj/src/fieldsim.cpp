#include "grftail/fieldsim.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "grftail/asymptotics.hpp"
#include "grftail/errors.hpp"

namespace grftail {

namespace {

constexpr std::uint64_t kPanelStreamStride = std::uint64_t{1} << 32;

double log_sum_exp(const Eigen::VectorXd& x) {
    const double mx = x.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((x.array() - mx).exp().sum());
}

void check_grid(const CovarianceModel& model, const FieldGrid& grid) {
    if (grid.size() == 0) throw ConfigError("field grid has no nodes");
    if (grid.dim() != model.dim()) throw ConfigError("grid and kernel dimensions differ");
}

void check_samples(long n) {
    if (n < 1) throw ConfigError("Monte Carlo sample size must be at least 1");
}

// Trapezoidal nodes on the lattice anchor + spacing * g, g in [first, first + m - 1]^d.
FieldGrid lattice_grid(const Eigen::VectorXd& anchor, double spacing, const std::vector<long>& first,
                       int m) {
    const int d = static_cast<int>(anchor.size());
    FieldGrid grid;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> weights;
    while (true) {
        Eigen::VectorXd x(d);
        double w = 1.0;
        for (int j = 0; j < d; ++j) {
            x(j) = anchor(j) + spacing * static_cast<double>(first[j] + idx[j]);
            w *= (idx[j] == 0 || idx[j] == m - 1) ? 0.5 * spacing : spacing;
        }
        grid.nodes.push_back(std::move(x));
        weights.push_back(w);
        int j = d - 1;
        while (j >= 0 && ++idx[j] == m) idx[j--] = 0;
        if (j < 0) break;
    }
    grid.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return grid;
}

}  // namespace

FieldGrid FieldGrid::trapezoidal(const Box& box, int points_per_axis) {
    if (points_per_axis < 2) throw ConfigError("trapezoidal grids need at least 2 points per axis");
    const int d = box.dim();
    if (d < 1 || !((box.hi - box.lo).array() > 0.0).all()) throw ConfigError("grid box is empty");
    const int m = points_per_axis;
    FieldGrid grid;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> weights;
    const Eigen::VectorXd h = (box.hi - box.lo) / (m - 1);
    while (true) {
        Eigen::VectorXd x(d);
        double w = 1.0;
        for (int j = 0; j < d; ++j) {
            x(j) = idx[j] == m - 1 ? box.hi(j) : box.lo(j) + h(j) * idx[j];
            w *= (idx[j] == 0 || idx[j] == m - 1) ? 0.5 * h(j) : h(j);
        }
        grid.nodes.push_back(std::move(x));
        weights.push_back(w);
        int j = d - 1;
        while (j >= 0 && ++idx[j] == m) idx[j--] = 0;
        if (j < 0) break;
    }
    grid.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return grid;
}

FieldGrid FieldGrid::from_points(std::vector<Eigen::VectorXd> nodes, Eigen::VectorXd weights) {
    if (nodes.empty()) throw ConfigError("field grid has no nodes");
    if (static_cast<Eigen::Index>(nodes.size()) != weights.size())
        throw ConfigError("one weight per node is required");
    for (const auto& x : nodes)
        if (x.size() != nodes.front().size()) throw ConfigError("grid nodes must share one dimension");
    if (!(weights.array() >= 0.0).all()) throw ConfigError("grid weights must be non-negative");
    return FieldGrid{std::move(nodes), std::move(weights)};
}

int resolution_points(double u, double side_length) {
    if (!(u > 0.0) || !(side_length > 0.0)) throw ConfigError("resolution rule needs u, side > 0");
    return std::max(2, static_cast<int>(std::ceil(8.0 * std::sqrt(u) * side_length)) + 1);
}

FieldSampler::FieldSampler(const CovarianceModel& model, const FieldGrid& grid) {
    check_grid(model, grid);
    const int n = grid.size();
    Eigen::MatrixXd gram(n, n);
    for (int i = 0; i < n; ++i) {
        gram(i, i) = 1.0;
        for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i) = model(grid.nodes[i] - grid.nodes[j]);
    }
    for (double jitter : {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
        Eigen::MatrixXd candidate = gram;
        candidate.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(candidate);
        if (llt.info() == Eigen::Success) {
            covariance_ = std::move(candidate);
            factor_ = llt.matrixL();
            jitter_ = jitter;
            return;
        }
    }
    std::ostringstream os;
    os << "covariance of the " << n << "-node grid is too ill-conditioned to factorize even with "
       << "diagonal jitter 1e-8; use fewer nodes";
    throw NumericalError(os.str());
}

void FieldSampler::draw(RngStream& stream, Eigen::VectorXd& scratch, Eigen::VectorXd& out) const {
    const int n = size();
    scratch.resize(n);
    for (int i = 0; i < n; ++i) scratch(i) = stream.normal();
    out.noalias() = factor_.triangularView<Eigen::Lower>() * scratch;
}

Eigen::VectorXd FieldSampler::draw(RngStream& stream) const {
    Eigen::VectorXd scratch, out;
    draw(stream, scratch, out);
    return out;
}

FieldSample sample_field(const CovarianceModel& model, const FieldGrid& grid, StreamId stream) {
    const FieldSampler sampler(model, grid);
    RngStream rng(stream);
    return {sampler.draw(rng), stream};
}

double log_integral_functional(const Eigen::VectorXd& values, const FieldGrid& grid, double sigma) {
    if (values.size() != grid.size()) throw ConfigError("sample and grid sizes differ");
    Eigen::VectorXd terms(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        terms(i) = grid.weights(i) > 0.0 ? std::log(grid.weights(i)) + sigma * values(i)
                                         : -std::numeric_limits<double>::infinity();
    return log_sum_exp(terms);
}

double integral_functional(const FieldSample& sample, const FieldGrid& grid, double sigma) {
    return std::exp(log_integral_functional(sample.values, grid, sigma));
}

EstimateWithError crude_mc(const CovarianceModel& model, const FieldGrid& grid, double sigma,
                           double b, long n, const McOptions& options) {
    check_samples(n);
    const FieldSampler sampler(model, grid);
    const double log_b = b > 0.0 ? std::log(b) : -std::numeric_limits<double>::infinity();
    const WeightStats stats = run_partitioned(n, options, [&](RngStream& rng, long count) {
        WeightStats s;
        Eigen::VectorXd z, f;
        for (long i = 0; i < count; ++i) {
            sampler.draw(rng, z, f);
            s.add(log_integral_functional(f, grid, sigma) > log_b ? 1.0 : 0.0);
        }
        return s;
    });
    return crude_estimate(stats);
}

double default_shift_level(const FieldGrid& grid, double sigma, double b) {
    const int d = grid.dim();
    if (std::log(b) > minimum_log_b(sigma, d)) return solve_u(b, sigma, d);
    return std::max(0.0, std::log(b / grid.measure()) / sigma);
}

namespace {

struct MeanShiftMixture {
    const FieldSampler& sampler;
    double level;

    // Draw from the mixture and return log of the likelihood ratio nominal / proposal.
    double draw(RngStream& rng, Eigen::VectorXd& z, Eigen::VectorXd& f) const {
        const auto n = static_cast<std::size_t>(sampler.size());
        const std::size_t centre = rng.uniform_index(n);
        sampler.draw(rng, z, f);
        if (level == 0.0) return 0.0;
        f += level * sampler.covariance().col(static_cast<Eigen::Index>(centre));
        const Eigen::VectorXd expo =
            level * f.array() - 0.5 * level * level * sampler.covariance().diagonal().array();
        return std::log(static_cast<double>(n)) - log_sum_exp(expo);
    }
};

}  // namespace

EstimateWithError importance_sampling_mc(const CovarianceModel& model, const FieldGrid& grid,
                                         double sigma, double b, long n, const McOptions& options,
                                         std::optional<double> shift_level) {
    check_samples(n);
    check_grid(model, grid);
    if (!(b > 0.0)) {
        // I_σ > 0 surely, so the event is certain.
        EstimateWithError certain;
        certain.estimate = 1.0;
        certain.n_samples = n;
        certain.ess = static_cast<double>(n);
        return certain;
    }
    const double level = shift_level ? *shift_level : default_shift_level(grid, sigma, b);
    if (!(level >= 0.0) || !std::isfinite(level)) throw ConfigError("shift level must be finite and >= 0");
    const FieldSampler sampler(model, grid);
    const MeanShiftMixture proposal{sampler, level};
    const double log_b = std::log(b);
    const WeightStats stats = run_partitioned(n, options, [&](RngStream& rng, long count) {
        WeightStats s;
        Eigen::VectorXd z, f;
        for (long i = 0; i < count; ++i) {
            const double log_lr = proposal.draw(rng, z, f);
            s.add(log_integral_functional(f, grid, sigma) > log_b ? std::exp(log_lr) : 0.0);
        }
        return s;
    });
    return weighted_estimate(stats);
}

EstimateWithError sup_mc(const CovarianceModel& model, const FieldGrid& grid, double level, long n,
                         const McOptions& options, SupProposal proposal) {
    check_samples(n);
    const FieldSampler sampler(model, grid);
    if (proposal == SupProposal::Crude || !(level > 0.0)) {
        const WeightStats stats = run_partitioned(n, options, [&](RngStream& rng, long count) {
            WeightStats s;
            Eigen::VectorXd z, f;
            for (long i = 0; i < count; ++i) {
                sampler.draw(rng, z, f);
                s.add(f.maxCoeff() > level ? 1.0 : 0.0);
            }
            return s;
        });
        return crude_estimate(stats);
    }
    const MeanShiftMixture mixture{sampler, level};
    const WeightStats stats = run_partitioned(n, options, [&](RngStream& rng, long count) {
        WeightStats s;
        Eigen::VectorXd z, f;
        for (long i = 0; i < count; ++i) {
            const double log_lr = mixture.draw(rng, z, f);
            s.add(f.maxCoeff() > level ? std::exp(log_lr) : 0.0);
        }
        return s;
    });
    return weighted_estimate(stats);
}

std::vector<double> simulate_suprema(const CovarianceModel& model, const FieldGrid& grid, long n,
                                     const McOptions& options) {
    check_samples(n);
    const FieldSampler sampler(model, grid);
    std::vector<double> maxima(static_cast<std::size_t>(n));
    // Each chunk writes its own slice, so chunk order fixes the output.
    run_partitioned(n, options, [&](RngStream& rng, long count) {
        const long chunk = static_cast<long>(rng.id().stream - options.stream_base);
        Eigen::VectorXd z, f;
        for (long i = 0; i < count; ++i) {
            sampler.draw(rng, z, f);
            maxima[static_cast<std::size_t>(chunk * kChunkSize + i)] = f.maxCoeff();
        }
        return WeightStats{};
    });
    return maxima;
}

PanelUnionEstimate panel_sum_vs_union_mc(const CovarianceModel& model, const PanelCover& cover,
                                         double sigma, double b, long n, const McOptions& options,
                                         int points_per_panel, CoverSide side) {
    check_samples(n);
    if (model.dim() != cover.dim()) throw ConfigError("kernel and cover dimensions differ");
    const auto& indices = side == CoverSide::Outer ? cover.outer_indices : cover.inner_indices;
    if (indices.empty()) throw ConfigError("the selected side of the cover has no panels");
    const int d = cover.dim();
    const double width = 2.0 * cover.epsilon;

    PanelUnionEstimate out;
    if (points_per_panel == 0) {
        const double u = cover.u > 0.0 ? cover.u : solve_u(b, sigma, d);
        points_per_panel = resolution_points(u, width);
    }
    if (points_per_panel < 2) throw ConfigError("panels need at least 2 points per axis");
    out.points_per_panel = points_per_panel;
    const int m = points_per_panel;
    const double spacing = width / (m - 1);

    // Union grid: panel grids glued along shared faces, weights summed.
    std::map<std::vector<long>, int> node_of;
    std::vector<Eigen::VectorXd> union_nodes;
    std::vector<double> union_weights;
    std::vector<FieldGrid> panel_grids;
    for (const PanelIndex& k : indices) {
        std::vector<long> first(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) first[j] = k[j] * (m - 1);
        FieldGrid g = lattice_grid(cover.anchor, spacing, first, m);
        std::vector<long> local(static_cast<std::size_t>(d), 0);
        for (int node = 0; node < g.size(); ++node) {
            std::vector<long> key(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) key[j] = first[j] + local[j];
            auto [it, inserted] = node_of.try_emplace(key, static_cast<int>(union_nodes.size()));
            if (inserted) {
                union_nodes.push_back(g.nodes[node]);
                union_weights.push_back(0.0);
            }
            union_weights[static_cast<std::size_t>(it->second)] += g.weights(node);
            int j = d - 1;
            while (j >= 0 && ++local[j] == m) local[j--] = 0;
        }
        panel_grids.push_back(std::move(g));
    }
    const FieldGrid union_grid = FieldGrid::from_points(
        std::move(union_nodes),
        Eigen::Map<Eigen::VectorXd>(union_weights.data(), static_cast<Eigen::Index>(union_weights.size())));

    const double level = default_shift_level(union_grid, sigma, b);
    out.union_est = importance_sampling_mc(model, union_grid, sigma, b, n, options, level);

    double sum = 0.0, var = 0.0, ess = 0.0;
    for (std::size_t p = 0; p < panel_grids.size(); ++p) {
        McOptions panel_options = options;
        panel_options.stream_base = options.stream_base + p * kPanelStreamStride;
        EstimateWithError e =
            importance_sampling_mc(model, panel_grids[p], sigma, b, n, panel_options, level);
        sum += e.estimate;
        var += e.std_error * e.std_error;
        ess += e.ess;
        for (const auto& w : e.warnings) out.sum_est.warnings.push_back(w);
        out.panels.push_back(std::move(e));
    }
    out.sum_est.estimate = sum;
    out.sum_est.std_error = std::sqrt(var);
    out.sum_est.n_samples = n * static_cast<long>(panel_grids.size());
    out.sum_est.ess = ess;
    return out;
}

void write_sample_csv(std::ostream& out, const FieldGrid& grid, const FieldSample& sample) {
    if (sample.values.size() != grid.size()) throw ConfigError("sample and grid sizes differ");
    const int d = grid.dim();
    for (int j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
    out << "value\n";
    out.precision(17);
    for (int i = 0; i < grid.size(); ++i) {
        for (int j = 0; j < d; ++j) out << grid.nodes[i](j) << ',';
        out << sample.values(i) << '\n';
    }
}

}  // namespace grftail
