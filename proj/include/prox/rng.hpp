#pragma once

#include <cstdint>
#include <random>

#include "prox/core_math.hpp"

namespace prox {

/// splitmix64 finaliser; derives independent stream seeds from one run seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x5851F42D4C957F2DULL));
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

    double normal(double sigma = 1.0) { return sigma * unit_normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool bernoulli(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p; }
    Vec3 normal3(double sigma) { return {normal(sigma), normal(sigma), normal(sigma)}; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> unit_normal_{0.0, 1.0};
};

}  // namespace prox
