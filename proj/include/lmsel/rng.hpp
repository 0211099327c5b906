#pragma once

#include <cstdint>
#include <random>

namespace lmsel {

/// Seedable pseudo-random stream built on std::mt19937_64.
///
/// The engine's output sequence is fixed by the standard, but the standard
/// distributions are not, so every derived quantity (uniform, normal, bounded
/// integer) is computed here from raw 64-bit draws. Results are therefore
/// identical across compilers and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution: (next() >> 11) * 2^-53.
    double uniform();

    /// True with probability p. Consumes exactly one draw.
    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller. Consumes exactly two draws per call.
    double normal();

    /// Uniform integer in [0, bound) by rejection. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stream-split rule: the seed of child stream `stream` of `parent` is
/// mix64(parent ^ mix64(stream + 0x9E3779B97F4A7C15)). Children of the same
/// parent with different stream ids are statistically independent.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// Named stream ids used throughout the simulator.
namespace stream {
inline constexpr std::uint64_t kWorldLayout = 1;
inline constexpr std::uint64_t kDescriptors = 2;
inline constexpr std::uint64_t kObservation = 3;
inline constexpr std::uint64_t kMeasurement = 4;
inline constexpr std::uint64_t kOdometry = 5;
inline constexpr std::uint64_t kMapSession = 6;
inline constexpr std::uint64_t kEvalTraversal = 7;
inline constexpr std::uint64_t kPolicy = 8;
}  // namespace stream

}  // namespace lmsel
