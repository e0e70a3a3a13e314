#include "grftail/montecarlo.hpp"

#include <cmath>

namespace grftail {

RngStream::RngStream(StreamId id) : id_(id) {
    std::seed_seq seq{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32),
                      static_cast<std::uint32_t>(id.stream),
                      static_cast<std::uint32_t>(id.stream >> 32), 0x67726674u};
    engine_.seed(seq);
}

EstimateWithError crude_estimate(const WeightStats& stats) {
    EstimateWithError out;
    out.n_samples = stats.n;
    if (stats.n == 0) return out;
    const double n = static_cast<double>(stats.n);
    out.estimate = stats.sum_w / n;
    out.std_error = std::sqrt(std::max(0.0, out.estimate * (1.0 - out.estimate)) / n);
    out.ess = n;
    return out;
}

EstimateWithError weighted_estimate(const WeightStats& stats) {
    EstimateWithError out;
    out.n_samples = stats.n;
    if (stats.n == 0) return out;
    const double n = static_cast<double>(stats.n);
    out.estimate = stats.sum_w / n;
    if (stats.n > 1) {
        const double var = std::max(0.0, stats.sum_w2 / n - out.estimate * out.estimate) * n / (n - 1.0);
        out.std_error = std::sqrt(var / n);
    }
    out.ess = stats.sum_w2 > 0.0 ? stats.sum_w * stats.sum_w / stats.sum_w2 : 0.0;
    if (out.ess < 10.0)
        out.warnings.emplace_back("effective sample size below 10; the importance sampler is degenerate");
    return out;
}

}  // namespace grftail
