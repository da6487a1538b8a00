#pragma once

#include <optional>
#include <vector>

#include "mixflow/constructions.hpp"
#include "mixflow/exact.hpp"

namespace mixflow {

// dense row-major square matrix of exact rationals
struct RationalMatrix {
    int n = 0;
    std::vector<ExactScalar> a;

    RationalMatrix() = default;
    explicit RationalMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, ExactScalar(0)) {}
    static RationalMatrix identity(int size);

    ExactScalar& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    const ExactScalar& at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    friend RationalMatrix operator*(const RationalMatrix& l, const RationalMatrix& r);
    friend bool operator==(const RationalMatrix&, const RationalMatrix&) = default;

    std::vector<ExactScalar> apply(const std::vector<ExactScalar>& v) const;
    bool is_doubly_stochastic() const;
};

// exact rank by fraction-free elimination
int rank(const RationalMatrix& m);

// Masses along the snake. T1 averages pairs (0,1),(2,3),..., T2 averages
// (1,2),...,(n-1,0), T3 moves state l to sigma(l).
struct MarkovModel {
    int n = 0;
    std::vector<int> sigma;
    RationalMatrix A1, A2, A3, P;  // P = A3 A2 A1, acting on column vectors

    std::vector<ExactScalar> stationary() const { return std::vector<ExactScalar>(n, ExactScalar(1, n)); }
};

MarkovModel build_model(int n, const std::vector<int>& sigma);
// A1 = A2 = identity; periodic for n > 1
MarkovModel permutation_only_model(int n, const std::vector<int>& sigma);
// any column stochastic P; sigma and the factors stay empty
MarkovModel model_from_matrix(RationalMatrix P);
// l -> l+1 mod n
std::vector<int> snake_shift(int n);
// cyclic map of a construction in snake coordinates of Grid(DM)
std::vector<int> snake_cycle(const CyclicConstruction& c);

struct Aperiodicity {
    bool aperiodic = false;
    int witness = 0;  // smallest m with P^m > 0, 0 when none up to n^2
};
Aperiodicity is_aperiodic(const MarkovModel& m);

struct SpectralReport {
    double lambda2_modulus = 0;
    double residual = 0;            // max over computed pairs of |P v - lambda v| / |v|
    bool one_is_simple = false;     // exact: rank(P - I) = rank((P - I)^2) = n - 1
    bool uniform_fixed = false;     // exact: P u = u and u P = u
    std::vector<double> moduli;     // all eigenvalue moduli, descending
};
// throws std::runtime_error when the eigensolver fails or n > 4096
SpectralReport spectral_gap(const MarkovModel& m);

// sup-norm deviations |P^q e_k - uniform| for q = 0..q_max
struct DeviationSeries {
    int state = 0;
    std::vector<ExactScalar> deviation;
};
DeviationSeries power_convergence(const MarkovModel& m, int q_max, int state);
std::vector<DeviationSeries> power_convergence(const MarkovModel& m, int q_max);

struct RateFit {
    double ratio = 0;   // fitted per-step factor exp(slope)
    double r2 = 0;
    int q_begin = 0, q_end = 0;
    bool exact_zero = false;  // deviation hit 0 inside the window
};
// least squares of log deviation against q on [q_begin, q_end]
RateFit fit_deviation_rate(const DeviationSeries& s, int q_begin, int q_end);

// max_ij |(1/m) sum_{k<m} (P^k)_ij - 1/n| for m = 1..m_max, in doubles
std::vector<double> cesaro_deviation(const MarkovModel& m, int m_max);

}  // namespace mixflow
