#pragma once

#include <vector>

#include <Eigen/Dense>

#include "grftail/kernel.hpp"

namespace grftail {

/// Closed axis-aligned box [lo, hi].
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(lo.size()); }
    [[nodiscard]] double measure() const { return (hi - lo).prod(); }
    [[nodiscard]] Eigen::VectorXd side() const { return hi - lo; }
};

/// Finite union of closed boxes with pairwise disjoint interiors.
class Domain {
public:
    explicit Domain(std::vector<Box> boxes);
    static Domain single(Box box) { return Domain({std::move(box)}); }

    [[nodiscard]] const std::vector<Box>& boxes() const noexcept { return boxes_; }
    [[nodiscard]] int dim() const noexcept { return boxes_.front().dim(); }
    [[nodiscard]] double measure() const;
    [[nodiscard]] Box bounding_box() const;
    [[nodiscard]] Domain translated(const Eigen::VectorXd& shift) const;

private:
    std::vector<Box> boxes_;
};

/// Integer lattice index k of the panel Ξ_{ε,k}.
using PanelIndex = std::vector<long>;

/// Inner and outer panel covers of a domain.
///
/// The lattice is anchored at the lower corner a of the domain's bounding box:
/// panel k is the open cube a + 2εk + (0, 2ε)^d, which is the translate of
/// Ξ_{ε,k} = 2kε + {|t|_∞ < ε} by a + ε·1. A panel is inner when its closure
/// lies in the closed domain, outer when it meets the domain.
struct PanelCover {
    double epsilon = 0.0;
    double kappa = 0.0;
    double delta = 0.0;
    double u = 0.0;
    Eigen::VectorXd anchor;
    std::vector<PanelIndex> inner_indices;  ///< C⁻, lexicographic order
    std::vector<PanelIndex> outer_indices;  ///< C⁺, lexicographic order
    Domain domain;

    [[nodiscard]] int dim() const noexcept { return domain.dim(); }
    [[nodiscard]] Box panel(const PanelIndex& k) const;
    [[nodiscard]] double panel_measure() const;
    [[nodiscard]] double inner_measure() const;
    [[nodiscard]] double outer_measure() const;
};

/// Cover with ε = κ u^{δ - 1/2}.
PanelCover build_cover(const Domain& domain, double u, double kappa = 1.0, double delta = 0.1);

/// Cover with an explicit half-width, for callers that fix ε directly.
PanelCover build_cover_with_half_width(const Domain& domain, double epsilon);

struct PanelBounds {
    double lower = 0.0;  ///< |C⁻| p(Ξ_ε)
    double upper = 0.0;  ///< |C⁺| p(Ξ_ε)
};

/// Sum-of-panels sandwich around the tail approximation for T.
PanelBounds sum_panel_approx(const PanelCover& cover, const CovarianceModel& model, double sigma,
                             double b);

}  // namespace grftail
