#include <cmath>

#include "doctest.h"

#include "grftail/asymptotics.hpp"
#include "grftail/errors.hpp"
#include "grftail/partition.hpp"

using namespace grftail;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Box box1(double lo, double hi) { return {VectorXd::Constant(1, lo), VectorXd::Constant(1, hi)}; }

Box cube(int d, double lo, double hi) { return {VectorXd::Constant(d, lo), VectorXd::Constant(d, hi)}; }

// u with 2κu^{δ-1/2} = width
double level_for_width(double width, double kappa = 1.0, double delta = 0.1) {
    return std::pow(width / (2.0 * kappa), 1.0 / (delta - 0.5));
}

// Brute force: panel k of width w anchored at 0 lies inside / meets [0, 1].
void brute_counts(double w, long& inner, long& outer) {
    inner = outer = 0;
    for (long k = -5; k < 50; ++k) {
        const double lo = k * w, hi = lo + w;
        if (lo >= -1e-12 && hi <= 1.0 + 1e-12) ++inner;
        if (hi > 0.0 && lo < 1.0) ++outer;
    }
}

}  // namespace

TEST_CASE("one-dimensional covers") {
    SUBCASE("exact tiling at width 0.25") {
        const double u = level_for_width(0.25);
        const auto cover = build_cover(Domain::single(box1(0, 1)), u);
        CHECK(cover.epsilon == doctest::Approx(0.125).epsilon(1e-12));
        CHECK(cover.inner_indices.size() == 4);
        CHECK(cover.outer_indices == cover.inner_indices);
    }
    SUBCASE("width 0.3") {
        const auto cover = build_cover_with_half_width(Domain::single(box1(0, 1)), 0.15);
        long inner = 0, outer = 0;
        brute_counts(0.3, inner, outer);
        CHECK(cover.inner_indices.size() == static_cast<std::size_t>(inner));
        CHECK(cover.outer_indices.size() == static_cast<std::size_t>(outer));
        CHECK(inner == 3);
        CHECK(outer == 4);
        CHECK(cover.inner_measure() == doctest::Approx(0.9));
        CHECK(cover.outer_measure() == doctest::Approx(1.2));
    }
    SUBCASE("brute force over a width sweep") {
        for (double w = 0.07; w < 1.3; w += 0.0371) {
            long inner = 0, outer = 0;
            brute_counts(w, inner, outer);
            const auto cover = build_cover_with_half_width(Domain::single(box1(0, 1)), w / 2);
            CHECK(cover.inner_indices.size() == static_cast<std::size_t>(inner));
            CHECK(cover.outer_indices.size() == static_cast<std::size_t>(outer));
        }
    }
}

TEST_CASE("two-dimensional covers") {
    const auto cover = build_cover_with_half_width(Domain::single(cube(2, 0, 1)), 0.25);
    CHECK(cover.inner_indices.size() == 4);
    CHECK(cover.outer_indices.size() == 4);

    // L-shaped union of two boxes: [0,2]x[0,1] and [0,1]x[1,2].
    Box a{VectorXd::Zero(2), VectorXd(2)}, b{VectorXd(2), VectorXd(2)};
    a.hi << 2, 1;
    b.lo << 0, 1;
    b.hi << 1, 2;
    const Domain l_shape({a, b});
    CHECK(l_shape.measure() == doctest::Approx(3.0));
    const auto lc = build_cover_with_half_width(l_shape, 0.25);
    CHECK(lc.inner_indices.size() == 12);
    CHECK(lc.outer_indices.size() == 12);
    const auto lc2 = build_cover_with_half_width(l_shape, 0.3);
    CHECK(lc2.inner_measure() <= 3.0);
    CHECK(lc2.outer_measure() >= 3.0);
}

TEST_CASE("sandwich and convergence") {
    const Domain domain = Domain::single(cube(2, 0.0, 1.3));
    double prev_gap = 1e300;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
        const auto cover = build_cover_with_half_width(domain, eps);
        CHECK(cover.inner_measure() <= domain.measure() + 1e-12);
        CHECK(cover.outer_measure() >= domain.measure() - 1e-12);
        const double gap = cover.outer_measure() - cover.inner_measure();
        // perimeter 5.2 times at most 2ε
        CHECK(gap <= 5.2 * 2.0 * eps + 1e-9);
        CHECK(gap <= prev_gap);
        prev_gap = gap;
    }
}

TEST_CASE("translation by a lattice step keeps counts") {
    const Domain domain = Domain::single(cube(2, 0.1, 1.0));
    const auto base = build_cover_with_half_width(domain, 0.17);
    const auto moved = build_cover_with_half_width(domain.translated(VectorXd::Constant(2, 3 * 0.34)), 0.17);
    CHECK(base.inner_indices.size() == moved.inner_indices.size());
    CHECK(base.outer_indices.size() == moved.outer_indices.size());
}

TEST_CASE("sum-of-panel bounds") {
    const auto model = CovarianceModel::squared_exponential(MatrixXd::Identity(1, 1));
    const Domain unit = Domain::single(box1(0, 1));
    SUBCASE("exact tiling") {
        const double u = level_for_width(0.25);
        const double b = threshold_b(u, 1.0, 1);
        const auto bounds = sum_panel_approx(build_cover(unit, u), model, 1.0, b);
        const double whole = tail_approx(model, 1.0, 1.0, b).probability;
        CHECK(bounds.lower == doctest::Approx(whole).epsilon(1e-12));
        CHECK(bounds.upper == doctest::Approx(whole).epsilon(1e-12));
    }
    SUBCASE("width 0.3") {
        const auto bounds = sum_panel_approx(build_cover_with_half_width(unit, 0.15), model, 1.0, 1e4);
        CHECK(bounds.upper / bounds.lower == doctest::Approx(4.0 / 3.0));
    }
    SUBCASE("upper/lower shrinks with u") {
        // At u = 40 the probabilities underflow, so the ratio is read off the counts.
        const Domain t = Domain::single(box1(0, 1.37));
        double prev = 1e300;
        for (double u : {10.0, 20.0, 40.0, 80.0}) {
            const auto cover = build_cover(t, u);
            const double ratio = static_cast<double>(cover.outer_indices.size()) /
                                 static_cast<double>(cover.inner_indices.size());
            if (u < 30.0) {
                const double b = threshold_b(u, 1.0, 1);
                const auto bounds = sum_panel_approx(cover, model, 1.0, b);
                const double whole = tail_approx(model, 1.37, 1.0, b).probability;
                CHECK(bounds.lower <= whole * (1 + 1e-12));
                CHECK(bounds.upper >= whole * (1 - 1e-12));
                CHECK(bounds.upper / bounds.lower == doctest::Approx(ratio));
            }
            CHECK(ratio <= prev);
            prev = ratio;
        }
        CHECK(prev < 1.5);
    }
}

TEST_CASE("domain validation") {
    CHECK_THROWS_AS(Domain({}), ConfigError);
    CHECK_THROWS_AS(Domain::single(box1(1, 1)), ConfigError);
    CHECK_THROWS_AS(Domain({box1(0, 1), box1(0.5, 2)}), ConfigError);
    CHECK_NOTHROW(Domain({box1(0, 1), box1(1, 2)}));
    CHECK_THROWS_AS(build_cover(Domain::single(box1(0, 1)), 0.5), ConfigError);
    CHECK_THROWS_AS(build_cover_with_half_width(Domain::single(cube(3, 0, 100)), 1e-3), ConfigError);
}
