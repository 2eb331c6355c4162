#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kfl {

using Eigen::ArrayXd;

// Deterministic random stream. All distributions are derived from raw
// mt19937_64 output with fixed arithmetic so that streams are reproducible
// across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box-Muller without state caching; consumes exactly two draws.
    double normal();

    // Derive an independent stream (for per-task seeding in parallel sweeps).
    Rng fork();

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
};

// Shortest-format decimal that round-trips a double (used for CSV/JSON payloads).
std::string format_double(double x);

// Runs fn(i) for i in [0, n). Work is distributed over `threads` workers in
// contiguous blocks; fn must only write to index-i slots so results are
// independent of the thread count. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Thread count from the KFL_THREADS environment variable (default 1).
int env_thread_count();

// Weighted mean subtraction helpers live in measure.hpp; here only generic bits.

}  // namespace kfl
