// Benchmark: batched (OpenMP) Monte-Carlo estimator against the serial
// reference at growing trial counts. Prints one line per configuration.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "taskfarm/reliability.hpp"

namespace {

double time_ms(double (*fn)(double, std::uint32_t, std::uint64_t,
                            std::uint64_t),
               double r, std::uint32_t n, std::uint64_t trials,
               std::uint64_t seed, double& result) {
    auto start = std::chrono::steady_clock::now();
    result = fn(r, n, trials, seed);
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::cout << "openmp threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "openmp: disabled (serial build)\n";
#endif
    const double r = 0.3;
    const std::uint32_t n = 8;
    const std::uint64_t seed = 42;
    std::cout << "r=" << r << " n=" << n
              << " closed_form=" << taskfarm::reliability::parallel_reliability(r, n)
              << "\n";
    for (std::uint64_t trials : std::vector<std::uint64_t>{
             100000, 1000000, 10000000, 50000000}) {
        double serial_result = 0.0;
        double batched_result = 0.0;
        double serial_ms =
            time_ms(taskfarm::reliability::monte_carlo_parallel_serial, r, n,
                    trials, seed, serial_result);
        double batched_ms = time_ms(taskfarm::reliability::monte_carlo_parallel,
                                    r, n, trials, seed, batched_result);
        std::cout << "trials=" << trials << " serial=" << serial_ms
                  << "ms (" << serial_result << ")"
                  << " batched=" << batched_ms << "ms (" << batched_result
                  << ") speedup=" << (serial_ms / batched_ms) << "\n";
    }
    return 0;
}
