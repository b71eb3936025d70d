#include "spacefusion/rng.hpp"

#include <cmath>
#include <numbers>

namespace spacefusion {

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;  // hi >= lo assumed; span 0 means full range
    if (span == 0) return engine_();
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % span;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return lo + x % span;
}

double Rng::normal() {
    const double u1 = uniform01_open0();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

Tensor Rng::normal_tensor(std::size_t rows, std::size_t cols, double sigma) {
    Tensor t(rows, cols);
    for (double& v : t.vec()) v = sigma * normal();
    return t;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_int(0, i - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

// splitmix64, the usual seed-mixing finalizer.
static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::split(std::uint64_t salt) const {
    return Rng(mix64(seed_ ^ mix64(salt)));
}

}  // namespace spacefusion
