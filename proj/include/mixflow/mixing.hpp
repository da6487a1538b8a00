#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixflow/exact.hpp"
#include "mixflow/markov.hpp"
#include "mixflow/schedule.hpp"

namespace mixflow {

// rect-count cap; MIXFLOW_RECT_GUARD overrides the default of 10^6
std::size_t default_rect_guard();

class GuardExceeded : public std::runtime_error {
public:
    GuardExceeded(std::size_t count, std::size_t cap);
    std::size_t count, cap;
};

// orbit of a point landed on the set where the map is undefined
class OrbitUndefined : public std::runtime_error {
public:
    OrbitUndefined(long index, const std::string& what);
    long index;
};

// rects cut along grid lines, then merged inside each square where they share a full edge
RectUnion coalesce(const RectUnion& u, const Grid& g);
std::vector<ExactScalar> square_masses(const RectUnion& u, const Grid& g);
// every part a full-width horizontal strip (or full-height vertical strip) of one grid square
bool is_horizontal_strips(const RectUnion& u, const Grid& g);
bool is_vertical_strips(const RectUnion& u, const Grid& g);

// exact |a ∩ b| for unions of pairwise disjoint rects
ExactScalar intersection_area(const RectUnion& a, const RectUnion& b);

struct MassSeries {
    std::vector<std::vector<ExactScalar>> masses;  // q = 0..q_done
    int onset = -1;  // first q whose image is made of full-width strips
    bool truncated = false;  // some level would exceed the guard
};
// Breadth-first with coalescing while levels are small, then depth-first.
// The guard caps the number of parts of T^q A at any level.
MassSeries mass_series(const TimeOneMap& m, const RectUnion& A, const Grid& g, int q_max,
                       std::size_t guard = default_rect_guard());
// throws GuardExceeded
std::vector<ExactScalar> mass_per_square(const TimeOneMap& m, const RectUnion& A, const Grid& g, int q,
                                         std::size_t guard = default_rect_guard());

// P(i,j) = |T(square order[j]) ∩ square order[i]| / |square|
RationalMatrix square_transition_matrix(const TimeOneMap& m, const Grid& g, const std::vector<int>& order);

struct CorrelationEntry {
    int n = 0;
    ExactScalar value;  // |T^-n A ∩ B| - |A||B|
};

struct CorrelationSeries {
    std::vector<CorrelationEntry> entries;
    bool truncated = false;
    std::string warning;
    int fubini_entries = 0;  // entries evaluated through square masses
};

// Meet in the middle: |T^-n A ∩ B| = |T^-n' A ∩ T^n'' B| with n' + n'' = n.
// With a grid, strip-shaped halves are intersected through per-square masses.
CorrelationSeries correlation_series(const TimeOneMap& m, const RectUnion& A, const RectUnion& B, int n_max,
                                     std::size_t guard = default_rect_guard(),
                                     const std::optional<Grid>& grid = std::nullopt);

// (1/n) sum_{j<n} corr(j)^2 for n = 1..size
std::vector<ExactScalar> cesaro_weak_mixing(const CorrelationSeries& s);
std::vector<ExactScalar> cesaro_weak_mixing(const TimeOneMap& m, const RectUnion& A, const RectUnion& B, int n_max,
                                            std::size_t guard = default_rect_guard());

// (1/n) #{k < n : T^k x in A}, membership half-open [lo,hi)
ExactScalar birkhoff_average(const TimeOneMap& m, const Point& x, const RectUnion& A, long n);

struct FlowAverage {
    double distance = 0;        // L1 distance of the time average of 1_{X_s(A)} from |A|
    double error_estimate = 0;  // change against half the time samples
    int sample_count = 0;
    int spatial = 0;
    int skipped = 0;  // samples on the undefined set
};
// averages over [s.start, s.end] with sample_count times and a spatial x spatial point lattice
FlowAverage flow_time_average(const FlowSchedule& s, const RectUnion& A, int sample_count, int spatial = 32);
// the schedule run R times back to back on [0,R]
FlowSchedule repeat_schedule(const FlowSchedule& s, int R);

struct DecayFit {
    double rate = 0;  // -slope of log|value|; +inf when the window is exactly zero
    double prefactor = 0;
    double goodness = 0;  // r^2
    int n_start = 0, n_end = 0;
};
DecayFit fit_exponential(const CorrelationSeries& s, int n_start, int n_end);

}  // namespace mixflow
