#include "taskfarm/reliability.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "taskfarm/errors.hpp"
#include "taskfarm/rng.hpp"

namespace taskfarm::reliability {

namespace {

void check_args(double r, std::uint32_t n) {
    if (n == 0) {
        throw InvalidCount("farm size n must be >= 1");
    }
    if (!(r >= 0.0 && r <= 1.0)) {
        throw Error("worker reliability must lie in [0, 1], got " +
                    std::to_string(r));
    }
}

// One batch: count trials where at least one of n workers survives.
std::uint64_t survivors_in_batch(double r, std::uint32_t n,
                                 std::uint64_t trials, std::uint64_t seed) {
    auto eng = rng::engine(seed);
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        for (std::uint32_t i = 0; i < n; ++i) {
            if (rng::uniform01(eng) < r) {
                ++hits;
                break;
            }
        }
    }
    return hits;
}

constexpr std::uint64_t kBatches = 64;

}  // namespace

double series_reliability(double r, std::uint32_t n) {
    check_args(r, n);
    return std::pow(r, static_cast<double>(n));
}

double parallel_reliability(double r, std::uint32_t n) {
    check_args(r, n);
    return 1.0 - std::pow(1.0 - r, static_cast<double>(n));
}

std::string emit_curves(const std::vector<std::uint32_t>& n_values,
                        std::uint32_t samples) {
    if (samples < 2) {
        throw InvalidCount("samples must be >= 2");
    }
    for (std::uint32_t n : n_values) {
        if (n == 0) {
            throw InvalidCount("farm size n must be >= 1");
        }
    }
    std::ostringstream os;
    os << "r,n,series,parallel\n";
    os << std::setprecision(12);
    for (std::uint32_t n : n_values) {
        for (std::uint32_t i = 0; i < samples; ++i) {
            double r = static_cast<double>(i) / (samples - 1);
            os << r << ',' << n << ',' << series_reliability(r, n) << ','
               << parallel_reliability(r, n) << '\n';
        }
    }
    return os.str();
}

double monte_carlo_parallel(double r, std::uint32_t n, std::uint64_t trials,
                            std::uint64_t seed) {
    check_args(r, n);
    if (trials == 0) {
        throw InvalidCount("trials must be >= 1");
    }
    // Fixed batch decomposition: batch b always runs the same trials with
    // the same derived seed, whatever the thread count.
    std::uint64_t batches = trials < kBatches ? trials : kBatches;
    std::uint64_t hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(batches); ++b) {
        std::uint64_t lo = static_cast<std::uint64_t>(b) * trials / batches;
        std::uint64_t hi =
            (static_cast<std::uint64_t>(b) + 1) * trials / batches;
        hits += survivors_in_batch(
            r, n, hi - lo, rng::substream(seed, static_cast<std::uint64_t>(b)));
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

double monte_carlo_parallel_serial(double r, std::uint32_t n,
                                   std::uint64_t trials, std::uint64_t seed) {
    check_args(r, n);
    if (trials == 0) {
        throw InvalidCount("trials must be >= 1");
    }
    return static_cast<double>(survivors_in_batch(r, n, trials, seed)) /
           static_cast<double>(trials);
}

}  // namespace taskfarm::reliability
