#pragma once

// Closed-form series/parallel reliability of the farm at a fixed evaluation
// time, curve generation for re-plotting, and Monte-Carlo cross-validation.
// All pure functions; the batched estimator may fan batches out across
// OpenMP threads without changing its result.

#include <cstdint>
#include <string>
#include <vector>

namespace taskfarm::reliability {

// Probability that a single worker has not failed: r^n for n workers in
// series (all must survive). Throws InvalidCount for n = 0 and Error for
// r outside [0, 1].
double series_reliability(double r, std::uint32_t n);

// 1 - (1-r)^n: the farm survives if at least one worker survives.
double parallel_reliability(double r, std::uint32_t n);

// CSV rows "r,n,series,parallel" for r on a uniform grid of `samples`
// points in [0, 1] and each n in n_values. samples must be >= 2.
std::string emit_curves(const std::vector<std::uint32_t>& n_values,
                        std::uint32_t samples);

// Fraction of trials in which at least one of n independent Bernoulli(r)
// workers survives. Deterministic in (r, n, trials, seed): trials are split
// into fixed batches with derived seeds, so the result is independent of
// thread count. Parallelized over batches when OpenMP is enabled.
double monte_carlo_parallel(double r, std::uint32_t n, std::uint64_t trials,
                            std::uint64_t seed);

// Straightforward single-stream reference estimator, kept for testing and
// benchmarking against the batched version.
double monte_carlo_parallel_serial(double r, std::uint32_t n,
                                   std::uint64_t trials, std::uint64_t seed);

}  // namespace taskfarm::reliability
