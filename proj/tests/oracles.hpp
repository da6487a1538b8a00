#pragma once

// Independent reference computations used by the test suites. Deliberately
// naive: plain gmpxx arithmetic, no library helpers.

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mixflow/exact.hpp"

namespace oracle {

inline int count_cycles(const std::vector<int>& image) {
    std::vector<char> seen(image.size(), 0);
    int n = 0;
    for (std::size_t s = 0; s < image.size(); ++s) {
        if (seen[s]) continue;
        ++n;
        for (std::size_t k = s; !seen[k]; k = static_cast<std::size_t>(image[k])) seen[k] = 1;
    }
    return n;
}

inline std::vector<int> cycle_lengths(const std::vector<int>& image) {
    std::vector<char> seen(image.size(), 0);
    std::vector<int> out;
    for (std::size_t s = 0; s < image.size(); ++s) {
        if (seen[s]) continue;
        int len = 0;
        for (std::size_t k = s; !seen[k]; k = static_cast<std::size_t>(image[k])) {
            seen[k] = 1;
            ++len;
        }
        out.push_back(len);
    }
    return out;
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    std::shuffle(v.begin(), v.end(), rng);
    return v;
}

// rational in (0,1) with the given denominator, numerator drawn uniformly
inline mixflow::ExactScalar random_unit(std::mt19937_64& rng, long long den) {
    std::uniform_int_distribution<long long> d(1, den - 1);
    return mixflow::ExactScalar(d(rng), den);
}

inline mpq_class q(long long n, long long d = 1) {
    mpq_class r(std::to_string(n) + "/" + std::to_string(d));
    r.canonicalize();
    return r;
}

inline mpq_class q(const mixflow::ExactScalar& x) { return x.to_mpq(); }

// closed-form folded Baker map on the unit square
inline std::pair<mpq_class, mpq_class> baker_unit(const mpq_class& x, const mpq_class& y) {
    if (x < mpq_class(1, 2)) return {-2 * x + 1, -y / 2 + mpq_class(1, 2)};
    return {2 * x - 1, y / 2 + mpq_class(1, 2)};
}

}  // namespace oracle
