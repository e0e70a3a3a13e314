#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace grftail {

/// Identifies one reproducible random stream: a user seed and a stream number.
struct StreamId {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    friend bool operator==(const StreamId&, const StreamId&) = default;
};

class RngStream {
public:
    explicit RngStream(StreamId id);

    [[nodiscard]] StreamId id() const noexcept { return id_; }
    double normal() { return normal_(engine_); }
    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

private:
    StreamId id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

struct McOptions {
    std::uint64_t seed = 0;
    std::uint64_t stream_base = 0;  ///< first stream number; chunk c uses stream_base + c
    int workers = 1;
};

/// Samples per chunk. Chunk c always consumes stream (seed, stream_base + c), so
/// results do not depend on the worker count.
inline constexpr long kChunkSize = 4096;

/// Sufficient statistics of a weighted indicator sample.
struct WeightStats {
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    long n = 0;

    void add(double w) {
        sum_w += w;
        sum_w2 += w * w;
        ++n;
    }
    void merge(const WeightStats& other) {
        sum_w += other.sum_w;
        sum_w2 += other.sum_w2;
        n += other.n;
    }
};

struct EstimateWithError {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
    double ess = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] double relative_error() const {
        return estimate > 0.0 ? std_error / estimate : std::numeric_limits<double>::infinity();
    }
};

/// Frequency estimate with std_error sqrt(p(1-p)/n).
EstimateWithError crude_estimate(const WeightStats& stats);
/// Likelihood-ratio weighted mean with ess = (Σw)^2 / Σw^2 and a warning below 10.
EstimateWithError weighted_estimate(const WeightStats& stats);

/// Runs `chunk(stream, count)` over ceil(n / kChunkSize) chunks on `workers`
/// threads and merges the per-chunk statistics in chunk order.
template <class ChunkFn>
WeightStats run_partitioned(long n, const McOptions& options, ChunkFn&& chunk) {
    const long chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<WeightStats> results(static_cast<std::size_t>(chunks));
    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(chunks)));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));

    auto work = [&](int w) {
        try {
            for (long c = w; c < chunks; c += workers) {
                RngStream stream({options.seed, options.stream_base + static_cast<std::uint64_t>(c)});
                const long count = std::min(kChunkSize, n - c * kChunkSize);
                results[static_cast<std::size_t>(c)] = chunk(stream, count);
            }
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    WeightStats total;
    for (const auto& r : results) total.merge(r);
    return total;
}

}  // namespace grftail
