/*
 * Copyright 2026 The treematch authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
 * with the License. A copy of the License is located at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * or in the "license" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
 * OR CONDITIONS OF ANY KIND, either express or implied. See the License for the specific language governing permissions
 * and limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <vector>

// std::mt19937_64 output is fully specified by the standard; the std
// distributions are not. Everything here samples from raw engine output so
// that fixed seeds reproduce bit-identical results on any platform.

namespace treematch {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream for a unit of parallel work (layer, column,
// tree node, ...) so results do not depend on thread scheduling.
inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

// Unbiased integer in [0, n) via rejection sampling.
inline uint64_t rand_below(Rng& rng, uint64_t n) {
    if (n <= 1) return 0;
    uint64_t x, r;
    do {
        x = rng();
        r = x % n;
    } while (x - r > UINT64_MAX - (n - 1));
    return r;
}

// Uniform double in [0, 1) with 53 bits of randomness.
inline double rand_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rand_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

template <typename It>
void shuffle_range(It first, It last, Rng& rng) {
    auto n = static_cast<size_t>(last - first);
    for (size_t i = n; i > 1; --i) {
        size_t j = static_cast<size_t>(rand_below(rng, i));
        std::swap(first[i - 1], first[j]);
    }
}

// Index drawn with probability weights[i] / sum(weights). Zero-total weight
// falls back to index 0; callers guard that case themselves when it matters.
inline size_t rand_weighted(Rng& rng, const std::vector<double>& weights, double total) {
    if (!(total > 0.0)) return 0;
    double u = rand_unit(rng) * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace treematch
