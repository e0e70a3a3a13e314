#include "grftail/partition.hpp"

#include <cmath>
#include <sstream>

#include "grftail/asymptotics.hpp"
#include "grftail/errors.hpp"

namespace grftail {

namespace {

// Panel boundaries that agree with a box face up to rounding are treated as equal.
constexpr double kSnapTolerance = 1e-9;
constexpr double kMaxPanels = 5e6;

double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) <= kSnapTolerance * std::max(1.0, std::abs(x)) ? r : x;
}

double overlap_volume(const Box& a, const Box& b) {
    double vol = 1.0;
    for (int j = 0; j < a.dim(); ++j) {
        const double len = std::min(a.hi(j), b.hi(j)) - std::max(a.lo(j), b.lo(j));
        if (len <= 0.0) return 0.0;
        vol *= len;
    }
    return vol;
}

}  // namespace

Domain::Domain(std::vector<Box> boxes) : boxes_(std::move(boxes)) {
    if (boxes_.empty()) throw ConfigError("empty domain: at least one box is required");
    const int d = boxes_.front().dim();
    if (d < 1) throw ConfigError("domain boxes need dimension >= 1");
    for (const Box& box : boxes_) {
        if (box.dim() != d || box.hi.size() != d)
            throw ConfigError("all domain boxes must share one dimension");
        if (!box.lo.allFinite() || !box.hi.allFinite())
            throw ConfigError("domain box bounds must be finite");
        if (!((box.hi - box.lo).array() > 0.0).all())
            throw ConfigError("empty domain: every box needs lo < hi on each axis");
    }
    for (std::size_t a = 0; a < boxes_.size(); ++a)
        for (std::size_t b = a + 1; b < boxes_.size(); ++b)
            if (overlap_volume(boxes_[a], boxes_[b]) >
                1e-12 * std::min(boxes_[a].measure(), boxes_[b].measure()))
                throw ConfigError("domain boxes must not overlap");
}

double Domain::measure() const {
    double total = 0.0;
    for (const Box& box : boxes_) total += box.measure();
    return total;
}

Box Domain::bounding_box() const {
    Box bb = boxes_.front();
    for (const Box& box : boxes_) {
        bb.lo = bb.lo.cwiseMin(box.lo);
        bb.hi = bb.hi.cwiseMax(box.hi);
    }
    return bb;
}

Domain Domain::translated(const Eigen::VectorXd& shift) const {
    std::vector<Box> moved = boxes_;
    for (Box& box : moved) {
        box.lo += shift;
        box.hi += shift;
    }
    return Domain(std::move(moved));
}

Box PanelCover::panel(const PanelIndex& k) const {
    const int d = dim();
    Box box{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (int j = 0; j < d; ++j) {
        box.lo(j) = anchor(j) + 2.0 * epsilon * static_cast<double>(k[j]);
        box.hi(j) = box.lo(j) + 2.0 * epsilon;
    }
    return box;
}

double PanelCover::panel_measure() const { return std::pow(2.0 * epsilon, dim()); }

double PanelCover::inner_measure() const {
    return static_cast<double>(inner_indices.size()) * panel_measure();
}

double PanelCover::outer_measure() const {
    return static_cast<double>(outer_indices.size()) * panel_measure();
}

PanelCover build_cover(const Domain& domain, double u, double kappa, double delta) {
    if (!(u > 1.0)) throw ConfigError("panel covers need u > 1");
    PanelCover cover = build_cover_with_half_width(domain, panel_half_width(u, kappa, delta));
    cover.u = u;
    cover.kappa = kappa;
    cover.delta = delta;
    return cover;
}

PanelCover build_cover_with_half_width(const Domain& domain, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ConfigError("panel half-width must be positive");
    const int d = domain.dim();
    const double width = 2.0 * epsilon;
    const Eigen::VectorXd anchor = domain.bounding_box().lo;

    // Boxes in lattice units, where panel k is the unit cube [k, k + 1].
    std::vector<Box> scaled;
    for (const Box& box : domain.boxes()) {
        Box s{Eigen::VectorXd(d), Eigen::VectorXd(d)};
        for (int j = 0; j < d; ++j) {
            s.lo(j) = snap((box.lo(j) - anchor(j)) / width);
            s.hi(j) = snap((box.hi(j) - anchor(j)) / width);
        }
        scaled.push_back(std::move(s));
    }

    std::vector<long> first(d), last(d);
    double count = 1.0;
    for (int j = 0; j < d; ++j) {
        double lo = scaled.front().lo(j), hi = scaled.front().hi(j);
        for (const Box& s : scaled) {
            lo = std::min(lo, s.lo(j));
            hi = std::max(hi, s.hi(j));
        }
        first[j] = static_cast<long>(std::floor(lo));
        last[j] = static_cast<long>(std::ceil(hi)) - 1;
        count *= static_cast<double>(last[j] - first[j] + 1);
    }
    if (count > kMaxPanels) {
        std::ostringstream os;
        os << "cover would enumerate " << count << " panels; increase epsilon";
        throw ConfigError(os.str());
    }

    PanelCover cover{epsilon, 0.0, 0.0, 0.0, anchor, {}, {}, domain};
    PanelIndex k(first.begin(), first.end());
    while (true) {
        bool meets = false;
        double covered = 0.0;
        for (const Box& s : scaled) {
            double vol = 1.0;
            bool open_overlap = true;
            for (int j = 0; j < d; ++j) {
                const double kj = static_cast<double>(k[j]);
                if (!(kj < s.hi(j) && kj + 1.0 > s.lo(j))) open_overlap = false;
                vol *= std::max(0.0, std::min(kj + 1.0, s.hi(j)) - std::max(kj, s.lo(j)));
            }
            meets = meets || open_overlap;
            covered += vol;
        }
        if (meets) cover.outer_indices.push_back(k);
        // Closed panel inside a closed union of boxes iff the union covers its full volume.
        if (covered >= 1.0 - kSnapTolerance) cover.inner_indices.push_back(k);

        int j = d - 1;
        while (j >= 0 && ++k[j] > last[j]) {
            k[j] = first[j];
            --j;
        }
        if (j < 0) break;
    }
    return cover;
}

PanelBounds sum_panel_approx(const PanelCover& cover, const CovarianceModel& model, double sigma,
                             double b) {
    if (model.dim() != cover.dim()) throw ConfigError("kernel and cover dimensions differ");
    const double per_panel = tail_approx(model, cover.panel_measure(), sigma, b).probability;
    return {static_cast<double>(cover.inner_indices.size()) * per_panel,
            static_cast<double>(cover.outer_indices.size()) * per_panel};
}

}  // namespace grftail
