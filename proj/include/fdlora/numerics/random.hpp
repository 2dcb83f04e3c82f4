// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "fdlora/numerics/matrix.hpp"

namespace fdlora {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; maps (seed, stream) to a well-mixed child seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

inline Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

}  // namespace fdlora
