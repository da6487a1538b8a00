#include "mixflow/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "mixflow/elementary.hpp"

namespace mixflow {

std::size_t default_rect_guard() {
    if (const char* env = std::getenv("MIXFLOW_RECT_GUARD")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1000000;
}

GuardExceeded::GuardExceeded(std::size_t c, std::size_t k)
    : std::runtime_error("rect count " + std::to_string(c) + " exceeds guard " + std::to_string(k)), count(c), cap(k) {}

OrbitUndefined::OrbitUndefined(long i, const std::string& what)
    : std::runtime_error("orbit hit the undefined set at iterate " + std::to_string(i) + ": " + what), index(i) {}

namespace {

ExactScalar ceil(const ExactScalar& x) { return -floor(-x); }

template <class F>
void for_each_square_part(const Rect& r, const Grid& g, F&& f) {
    if (auto k = g.containing_square(r)) {
        f(*k, Rect(r));
        return;
    }
    const int G = g.D;
    int i0 = std::max<long>(0, floor(r.x_lo * G).small_num()), i1 = std::min<long>(G - 1, ceil(r.x_hi * G).small_num() - 1);
    int j0 = std::max<long>(0, floor(r.y_lo * G).small_num()), j1 = std::min<long>(G - 1, ceil(r.y_hi * G).small_num() - 1);
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            if (auto c = rect_intersect(r, g.square(i, j))) f(g.index(i, j), std::move(*c));
}

bool merge_pass(std::vector<Rect>& v, bool vertical) {
    auto key = [vertical](const Rect& r) {
        return vertical ? std::tie(r.x_lo, r.x_hi, r.y_lo) : std::tie(r.y_lo, r.y_hi, r.x_lo);
    };
    std::sort(v.begin(), v.end(), [&](const Rect& a, const Rect& b) { return key(a) < key(b); });
    std::vector<Rect> out;
    bool merged = false;
    for (auto& r : v) {
        if (!out.empty()) {
            Rect& b = out.back();
            if (vertical && b.x_lo == r.x_lo && b.x_hi == r.x_hi && b.y_hi == r.y_lo) {
                b.y_hi = r.y_hi;
                merged = true;
                continue;
            }
            if (!vertical && b.y_lo == r.y_lo && b.y_hi == r.y_hi && b.x_hi == r.x_lo) {
                b.x_hi = r.x_hi;
                merged = true;
                continue;
            }
        }
        out.push_back(std::move(r));
    }
    v = std::move(out);
    return merged;
}

int bucket(const ExactScalar& v, int B) {
    return std::clamp(static_cast<int>(std::floor(v.to_double() * B)), 0, B - 1);
}

bool in_union(const RectUnion& A, const Point& x) {
    for (const auto& r : A.parts)
        if (r.x_lo <= x.x && x.x < r.x_hi && r.y_lo <= x.y && x.y < r.y_hi) return true;
    return false;
}

ExactScalar fubini(const RectUnion& horiz, const RectUnion& vert, const Grid& g) {
    auto a = square_masses(horiz, g), b = square_masses(vert, g);
    ExactScalar s = 0;
    for (int k = 0; k < g.size(); ++k)
        if (!a[k].is_zero() && !b[k].is_zero()) s += a[k] * b[k];
    return s * ExactScalar(static_cast<long long>(g.D) * g.D);
}

}  // namespace

RectUnion coalesce(const RectUnion& u, const Grid& g) {
    std::vector<std::vector<Rect>> per(g.size());
    for (const auto& r : u.parts) for_each_square_part(r, g, [&](int k, Rect&& c) { per[k].push_back(std::move(c)); });
    RectUnion out;
    for (auto& v : per) {
        if (v.size() > 1) {
            merge_pass(v, true);
            while (merge_pass(v, false) && merge_pass(v, true)) {
            }
        }
        for (auto& r : v) out.parts.push_back(std::move(r));
    }
    measure_audit_record(u.area_unchecked(), out.area_unchecked(), "coalesce");
    return out;
}

std::vector<ExactScalar> square_masses(const RectUnion& u, const Grid& g) {
    std::vector<ExactScalar> m(g.size(), ExactScalar(0));
    for (const auto& r : u.parts) for_each_square_part(r, g, [&](int k, Rect&& c) { m[k] += c.area(); });
    return m;
}

RationalMatrix square_transition_matrix(const TimeOneMap& m, const Grid& g, const std::vector<int>& order) {
    const int n = g.size();
    if (static_cast<int>(order.size()) != n) throw std::invalid_argument("order must list every square");
    std::vector<int> pos(n, -1);
    for (int l = 0; l < n; ++l) {
        if (order[l] < 0 || order[l] >= n || pos[order[l]] >= 0) throw std::invalid_argument("order is not a permutation");
        pos[order[l]] = l;
    }
    RationalMatrix P(n);
    for (int j = 0; j < n; ++j) {
        auto img = pushforward_set(m, RectUnion::of(g.square(order[j])));
        auto mass = square_masses(img, g);
        for (int k = 0; k < n; ++k) P.at(pos[k], j) = mass[k] * n;
    }
    return P;
}

bool is_horizontal_strips(const RectUnion& u, const Grid& g) {
    const ExactScalar s = g.side();
    for (const auto& r : u.parts)
        if (r.width() != s || !g.containing_square(r)) return false;
    return true;
}

bool is_vertical_strips(const RectUnion& u, const Grid& g) {
    const ExactScalar s = g.side();
    for (const auto& r : u.parts)
        if (r.height() != s || !g.containing_square(r)) return false;
    return true;
}

ExactScalar intersection_area(const RectUnion& a, const RectUnion& b) {
    if (a.parts.empty() || b.parts.empty()) return 0;
    int B = 1;
    while (B < 256 && static_cast<std::size_t>(B) * B < b.parts.size()) B *= 2;
    std::vector<std::vector<std::uint32_t>> idx(static_cast<std::size_t>(B) * B);
    for (std::uint32_t n = 0; n < b.parts.size(); ++n) {
        const Rect& r = b.parts[n];
        for (int j = bucket(r.y_lo, B); j <= bucket(r.y_hi, B); ++j)
            for (int i = bucket(r.x_lo, B); i <= bucket(r.x_hi, B); ++i) idx[static_cast<std::size_t>(j) * B + i].push_back(n);
    }
    ExactScalar total = 0;
    for (const auto& r : a.parts)
        for (int j = bucket(r.y_lo, B); j <= bucket(r.y_hi, B); ++j)
            for (int i = bucket(r.x_lo, B); i <= bucket(r.x_hi, B); ++i)
                for (std::uint32_t n : idx[static_cast<std::size_t>(j) * B + i]) {
                    auto c = rect_intersect(r, b.parts[n]);
                    // count each overlap once, in the bucket of its lower-left corner
                    if (c && bucket(c->x_lo, B) == i && bucket(c->y_lo, B) == j) total += c->area();
                }
    return total;
}

namespace {

// Depth-first continuation from a frontier at level q0: memory stays O(depth).
// Returns false when some level exceeds the guard.
bool mass_dfs(const TimeOneMap& m, const RectUnion& frontier, const Grid& g, int q0, int q_max, std::size_t guard,
              MassSeries& out) {
    const int depth = q_max - q0;
    std::vector<std::vector<ExactScalar>> masses(depth + 1, std::vector<ExactScalar>(g.size(), ExactScalar(0)));
    std::vector<std::size_t> counts(depth + 1, 0);
    std::vector<char> strips(depth + 1, 1);
    const ExactScalar side = g.side();
    std::vector<std::pair<Rect, int>> stack;
    for (const auto& r : frontier.parts) stack.emplace_back(r, 0);
    while (!stack.empty()) {
        auto [r, l] = std::move(stack.back());
        stack.pop_back();
        if (l == depth) continue;
        bool over = false;
        m.for_each_image(r, [&](Rect&& img) {
            for_each_square_part(img, g, [&](int k, Rect&& part) {
                if (++counts[l + 1] > guard) over = true;
                masses[l + 1][k] += part.area();
                if (part.width() != side) strips[l + 1] = 0;
                stack.emplace_back(std::move(part), l + 1);
            });
        });
        if (over) return false;
    }
    ExactScalar total = frontier.area_unchecked();
    for (int l = 1; l <= depth; ++l) {
        ExactScalar sum = 0;
        for (const auto& x : masses[l]) sum += x;
        measure_audit_record(total, sum, "mass_series");
        out.masses.push_back(std::move(masses[l]));
        if (out.onset < 0 && strips[l]) out.onset = q0 + l;
    }
    return true;
}

constexpr std::size_t kBreadthFirstCap = 1 << 16;

}  // namespace

MassSeries mass_series(const TimeOneMap& m, const RectUnion& A, const Grid& g, int q_max, std::size_t guard) {
    MassSeries out;
    RectUnion cur = coalesce(A, g);
    for (int q = 0;; ++q) {
        out.masses.push_back(square_masses(cur, g));
        if (out.onset < 0 && is_horizontal_strips(cur, g)) out.onset = q;
        if (q == q_max) break;
        RectUnion next = pushforward_set(m, cur);
        if (next.size() > guard) {
            out.truncated = true;
            break;
        }
        if (next.size() > kBreadthFirstCap) {
            out.truncated = !mass_dfs(m, cur, g, q, q_max, guard, out);
            break;
        }
        cur = coalesce(next, g);
    }
    return out;
}

std::vector<ExactScalar> mass_per_square(const TimeOneMap& m, const RectUnion& A, const Grid& g, int q,
                                         std::size_t guard) {
    auto s = mass_series(m, A, g, q, guard);
    if (s.truncated || static_cast<int>(s.masses.size()) != q + 1) throw GuardExceeded(guard + 1, guard);
    return s.masses.back();
}

CorrelationSeries correlation_series(const TimeOneMap& m, const RectUnion& A, const RectUnion& B, int n_max,
                                     std::size_t guard, const std::optional<Grid>& grid) {
    if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");
    const Grid cg = grid.value_or(Grid(1));
    const ExactScalar product = A.area_unchecked() * B.area_unchecked();
    TimeOneMap inv = m.inverse();
    RectUnion fwd = coalesce(B, cg), bwd = coalesce(A, cg);
    int nf = 0, nb = 0;
    CorrelationSeries out;
    for (int n = 0; n <= n_max; ++n) {
        // forward half gets the extra step on odd n
        bool step_fwd = nf < (n + 1) / 2;
        if (n > 0) {
            RectUnion next = pushforward_set(step_fwd ? m : inv, step_fwd ? fwd : bwd);
            if (next.size() > guard) {
                out.truncated = true;
                std::ostringstream os;
                os << "rect guard " << guard << " reached at n=" << n << " (" << next.size() << " rects)";
                out.warning = os.str();
                break;
            }
            (step_fwd ? fwd : bwd) = coalesce(next, cg);
            (step_fwd ? nf : nb) += 1;
        }
        ExactScalar meet;
        if (grid && is_horizontal_strips(fwd, cg) && is_vertical_strips(bwd, cg)) {
            meet = fubini(fwd, bwd, cg);
            ++out.fubini_entries;
        } else {
            meet = intersection_area(fwd, bwd);
        }
        out.entries.push_back({n, meet - product});
    }
    return out;
}

std::vector<ExactScalar> cesaro_weak_mixing(const CorrelationSeries& s) {
    std::vector<ExactScalar> out;
    ExactScalar sum = 0;
    for (std::size_t j = 0; j < s.entries.size(); ++j) {
        sum += s.entries[j].value * s.entries[j].value;
        out.push_back(sum / static_cast<long long>(j + 1));
    }
    return out;
}

std::vector<ExactScalar> cesaro_weak_mixing(const TimeOneMap& m, const RectUnion& A, const RectUnion& B, int n_max,
                                            std::size_t guard) {
    return cesaro_weak_mixing(correlation_series(m, A, B, n_max, guard));
}

ExactScalar birkhoff_average(const TimeOneMap& m, const Point& x, const RectUnion& A, long n) {
    if (n <= 0) throw std::invalid_argument("n must be positive");
    Point y = x;
    long hits = 0;
    for (long k = 0; k < n; ++k) {
        if (in_union(A, y)) ++hits;
        if (k + 1 == n) break;
        try {
            y = m.apply(y);
        } catch (const UndefinedSetHit& e) {
            throw OrbitUndefined(k + 1, e.what());
        }
    }
    return ExactScalar(hits, n);
}

FlowAverage flow_time_average(const FlowSchedule& s, const RectUnion& A, int sample_count, int spatial) {
    if (sample_count < 2 || spatial < 1) throw std::invalid_argument("need at least two time samples");
    const ExactScalar t0 = s.start(), len = s.end() - s.start();
    const double area = A.area_unchecked().to_double();
    // offsets with odd prime denominators keep samples off dyadic lines and breakpoints
    const long long P = 1009, Q = 1013;
    FlowAverage out;
    out.sample_count = sample_count;
    out.spatial = spatial;
    auto estimate = [&](int N, bool count_skips) {
        double dist = 0;
        for (int a = 0; a < spatial; ++a)
            for (int b = 0; b < spatial; ++b) {
                Point x{ExactScalar(a * P + 503, spatial * P), ExactScalar(b * P + 499, spatial * P)};
                int in = 0, used = 0;
                for (int j = 0; j < N; ++j) {
                    ExactScalar t = t0 + len * ExactScalar(j * Q + 507, N * Q);
                    try {
                        if (in_union(A, eval_flow_inverse(s, t, x))) ++in;
                        ++used;
                    } catch (const UndefinedSetHit&) {
                        if (count_skips) ++out.skipped;
                    }
                }
                if (used > 0) dist += std::fabs(static_cast<double>(in) / used - area);
            }
        return dist / (static_cast<double>(spatial) * spatial);
    };
    out.distance = estimate(sample_count, true);
    out.error_estimate = std::fabs(out.distance - estimate(sample_count / 2, false));
    return out;
}

FlowSchedule repeat_schedule(const FlowSchedule& s, int R) {
    if (R < 1) throw std::invalid_argument("R must be positive");
    FlowSchedule out = rescale(s, 0, 1);
    for (int k = 1; k < R; ++k) out = compose_schedules(out, rescale(s, k, k + 1));
    return out;
}

DecayFit fit_exponential(const CorrelationSeries& s, int n_start, int n_end) {
    DecayFit f;
    f.n_start = n_start;
    f.n_end = n_end;
    std::vector<std::pair<double, double>> pts;
    int zeros = 0;
    for (const auto& e : s.entries) {
        if (e.n < n_start || e.n > n_end) continue;
        if (e.value.is_zero()) {
            ++zeros;
            continue;
        }
        pts.emplace_back(e.n, log_abs(e.value));
    }
    if (zeros > 0 && pts.empty()) {
        f.rate = std::numeric_limits<double>::infinity();
        f.goodness = 1;
        return f;
    }
    if (zeros > 0) throw std::invalid_argument("fit window contains exact zeros");
    if (pts.size() < 2) throw std::invalid_argument("fit window needs two entries");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, k = static_cast<double>(pts.size());
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    double vx = sxx - sx * sx / k, vy = syy - sy * sy / k, cxy = sxy - sx * sy / k;
    double slope = cxy / vx;
    f.rate = -slope;
    f.prefactor = std::exp((sy - slope * sx) / k);
    f.goodness = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    return f;
}

}  // namespace mixflow
