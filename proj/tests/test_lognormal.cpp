#include <cmath>

#include "doctest.h"

#include "grftail/errors.hpp"
#include "grftail/lognormal.hpp"
#include "grftail/normal.hpp"
#include "oracles/oracles.hpp"

using namespace grftail;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LogNormalPortfolio pair(double rho) {
    MatrixXd cov(2, 2);
    cov << 1, rho, rho, 1;
    return {VectorXd::Zero(2), cov};
}

}  // namespace

TEST_CASE("one big jump approximation") {
    const LogNormalPortfolio single(VectorXd::Constant(1, 0.3), MatrixXd::Constant(1, 1, 2.0));
    CHECK(one_big_jump_approx(single, 5.0) ==
          doctest::Approx(oracle::normal_sf((std::log(5.0) - 0.3) / std::sqrt(2.0))).epsilon(1e-14));
    const LogNormalPortfolio iid(VectorXd::Zero(3), MatrixXd::Identity(3, 3));
    CHECK(one_big_jump_approx(iid, 20.0) == doctest::Approx(3 * normal_sf(std::log(20.0))).epsilon(1e-14));

    double prev = 1e300;
    for (double b = 1.5; b < 1e5; b *= 3) {
        const double p = one_big_jump_approx(iid, b);
        CHECK(p < prev);
        prev = p;
    }
    // b -> cb with mu -> mu + log c leaves the approximation unchanged.
    const LogNormalPortfolio shifted(VectorXd::Constant(3, std::log(7.0)), MatrixXd::Identity(3, 3));
    CHECK(one_big_jump_approx(shifted, 7.0 * 20.0) == doctest::Approx(one_big_jump_approx(iid, 20.0)).epsilon(1e-12));
    CHECK(threshold_for_marginal_tail(1e-6) == doctest::Approx(std::exp(normal_isf(1e-6))));
}

TEST_CASE("portfolio validation") {
    CHECK_THROWS_AS(LogNormalPortfolio(VectorXd::Zero(2), MatrixXd::Identity(3, 3)), ConfigError);
    MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(LogNormalPortfolio(VectorXd::Zero(2), bad), ConfigError);
    bad << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(LogNormalPortfolio(VectorXd::Zero(2), bad), ConfigError);
}

TEST_CASE("importance sampling of the sum") {
    const McOptions opts{2024, 0, 1};
    CHECK(sum_tail_mc(pair(0.5), 0.0, 100, opts).estimate == 1.0);

    SUBCASE("independent pair against quadrature") {
        for (double b : {4.0, 30.0, 300.0}) {
            const double exact = oracle::lognormal_pair_probability(0.0, b);
            const auto e = sum_tail_mc(pair(0.0), b, 100000, opts);
            CHECK(std::abs(e.estimate - exact) < 3 * e.std_error);
        }
    }
    SUBCASE("correlated pair against quadrature") {
        const double b = 50.0;
        const double exact = oracle::lognormal_pair_probability(0.5, b);
        const auto e = sum_tail_mc(pair(0.5), b, 100000, opts);
        CHECK(std::abs(e.estimate - exact) < 3 * e.std_error);
    }
    SUBCASE("ratio to the approximation approaches 1 for independent terms") {
        double prev = 1e300;
        for (double tail : {1e-2, 1e-4, 1e-6}) {
            const double b = threshold_for_marginal_tail(tail);
            const double r = sum_tail_mc(pair(0.0), b, 100000, opts).estimate / one_big_jump_approx(pair(0.0), b);
            CHECK(std::abs(r - 1) < prev);
            prev = std::abs(r - 1);
        }
    }
    SUBCASE("worker invariance") {
        const auto a = sum_tail_mc(pair(0.3), 100.0, 30000, {5, 0, 1});
        const auto b = sum_tail_mc(pair(0.3), 100.0, 30000, {5, 0, 4});
        CHECK(a.estimate == b.estimate);
    }
}
