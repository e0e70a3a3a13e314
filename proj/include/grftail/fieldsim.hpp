#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "grftail/kernel.hpp"
#include "grftail/montecarlo.hpp"
#include "grftail/partition.hpp"

namespace grftail {

/// Finite set of nodes with quadrature weights for ∫_T.
struct FieldGrid {
    std::vector<Eigen::VectorXd> nodes;  ///< row-major over the lattice (last axis fastest)
    Eigen::VectorXd weights;

    /// m^d lattice on a box with trapezoidal weights; Σ weights = mes(box).
    static FieldGrid trapezoidal(const Box& box, int points_per_axis);
    static FieldGrid from_points(std::vector<Eigen::VectorXd> nodes, Eigen::VectorXd weights);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(nodes.size()); }
    [[nodiscard]] int dim() const noexcept { return nodes.empty() ? 0 : static_cast<int>(nodes.front().size()); }
    [[nodiscard]] double measure() const { return weights.sum(); }
};

/// Points per axis so that a bump of width 1/sqrt(u) spans at least 8 nodes:
/// the smallest m with (m - 1) >= 8 sqrt(u) side.
int resolution_points(double u, double side_length);

/// Exact Gaussian sampler on a fixed grid. The Gram matrix is Cholesky-factorized
/// once, adding diagonal jitter 1e-12, 1e-11, ..., 1e-8 only if plain factorization
/// fails; the jittered matrix is the covariance actually sampled.
class FieldSampler {
public:
    FieldSampler(const CovarianceModel& model, const FieldGrid& grid);

    [[nodiscard]] const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
    [[nodiscard]] const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(covariance_.rows()); }

    /// Fills `out` with one draw; `scratch` holds the standard normals.
    void draw(RngStream& stream, Eigen::VectorXd& scratch, Eigen::VectorXd& out) const;
    [[nodiscard]] Eigen::VectorXd draw(RngStream& stream) const;

private:
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
};

struct FieldSample {
    Eigen::VectorXd values;
    StreamId seed_path;
};

FieldSample sample_field(const CovarianceModel& model, const FieldGrid& grid, StreamId stream);

/// log Σ w_i exp(σ f_i), accumulated with log-sum-exp.
double log_integral_functional(const Eigen::VectorXd& values, const FieldGrid& grid, double sigma);
double integral_functional(const FieldSample& sample, const FieldGrid& grid, double sigma);

/// Direct frequency estimate of P(I_σ > b) on the grid.
EstimateWithError crude_mc(const CovarianceModel& model, const FieldGrid& grid, double sigma,
                           double b, long n, const McOptions& options);

/// Mean level used by the importance sampler when none is given: the threshold root u
/// when b is feasible, otherwise max(0, log(b / mes) / σ).
double default_shift_level(const FieldGrid& grid, double sigma, double b);

/// Importance sampling with the uniform-location mean-shift mixture: draw node J
/// uniformly and sample f + level·Cov(f, f(t_J)). Each sample is weighted by
///   [ (1/N) Σ_j exp(level f_j - level² Var(f_j) / 2) ]^{-1}.
EstimateWithError importance_sampling_mc(const CovarianceModel& model, const FieldGrid& grid,
                                         double sigma, double b, long n, const McOptions& options,
                                         std::optional<double> shift_level = std::nullopt);

enum class SupProposal { Crude, MeanShift };

/// P(max over grid nodes > level).
EstimateWithError sup_mc(const CovarianceModel& model, const FieldGrid& grid, double level, long n,
                         const McOptions& options, SupProposal proposal = SupProposal::MeanShift);

/// n independent grid maxima under the nominal law, in chunk order.
std::vector<double> simulate_suprema(const CovarianceModel& model, const FieldGrid& grid, long n,
                                     const McOptions& options);

enum class CoverSide { Outer, Inner };

struct PanelUnionEstimate {
    EstimateWithError union_est;
    EstimateWithError sum_est;
    std::vector<EstimateWithError> panels;
    int points_per_panel = 0;
};

/// Importance-sampling estimates of P(I_σ(∪Ξ_k) > b) and Σ_k P(I_σ(Ξ_k) > b) over the
/// chosen side of the cover. Panel grids share nodes with the union grid so that the
/// discretized integrals are additive. points_per_panel = 0 applies resolution_points.
PanelUnionEstimate panel_sum_vs_union_mc(const CovarianceModel& model, const PanelCover& cover,
                                         double sigma, double b, long n, const McOptions& options,
                                         int points_per_panel = 0,
                                         CoverSide side = CoverSide::Outer);

/// CSV with header x1,...,xd,value, one row per node.
void write_sample_csv(std::ostream& out, const FieldGrid& grid, const FieldSample& sample);

}  // namespace grftail
