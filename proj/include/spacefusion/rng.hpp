#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "spacefusion/tensor.hpp"

namespace spacefusion {

// Deterministic RNG. The mt19937_64 engine is bit-exact per the standard; the
// distributions are hand-rolled because libstdc++ and libc++ disagree on
// std::uniform_real_distribution and std::normal_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    // Uniform on [0, 1): top 53 bits of one engine draw.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]: safe as a log() argument.
    double uniform01_open0() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform integer on [lo, hi] inclusive via rejection sampling.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

    // One raw engine word; handy for deriving sub-seeds.
    std::uint64_t draw_u64() { return engine_(); }

    // Standard normal via Box-Muller. No spare caching: one call consumes two
    // uniforms, so the stream position never depends on call history.
    double normal();

    // rows x cols of iid N(0, sigma^2), row-major draw order.
    Tensor normal_tensor(std::size_t rows, std::size_t cols, double sigma);

    // Fisher-Yates shuffle of indices 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    // Child stream keyed on (construction seed, salt). Independent of draw
    // history on the parent, so per-item substreams stay stable even when the
    // parent is consumed in between.
    Rng split(std::uint64_t salt) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace spacefusion
