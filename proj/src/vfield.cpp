#include "mixflow/vfield.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

namespace mixflow {

namespace {

using Poly = std::vector<Point>;

Point sub(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y}; }
ExactScalar cross(const Point& a, const Point& b) { return a.x * b.y - a.y * b.x; }
ExactScalar dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

// keep alpha x + beta y + gamma >= 0
Poly clip(const Poly& poly, const ExactScalar& alpha, const ExactScalar& beta, const ExactScalar& gamma) {
    Poly out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    std::vector<ExactScalar> val(n);
    bool all_in = true, all_out = true;
    for (std::size_t i = 0; i < n; ++i) {
        val[i] = alpha * poly[i].x + beta * poly[i].y + gamma;
        if (val[i].sign() < 0) all_in = false;
        if (val[i].sign() > 0) all_out = false;
    }
    if (all_in) return poly;
    if (all_out) return out;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = (i + 1) % n;
        const ExactScalar &vi = val[i], &vj = val[j];
        if (vi.sign() >= 0) out.push_back(poly[i]);
        if ((vi.sign() > 0 && vj.sign() < 0) || (vi.sign() < 0 && vj.sign() > 0)) {
            ExactScalar s = vi / (vi - vj);
            out.push_back({poly[i].x + (poly[j].x - poly[i].x) * s, poly[i].y + (poly[j].y - poly[i].y) * s});
        }
    }
    Poly dedup;
    for (auto& p : out)
        if (dedup.empty() || !(dedup.back() == p)) dedup.push_back(std::move(p));
    while (dedup.size() > 1 && dedup.front() == dedup.back()) dedup.pop_back();
    if (dedup.size() < 3 || polygon_area(dedup).sign() <= 0) return {};
    return dedup;
}

// half-plane to the left of p -> q
Poly clip_left(const Poly& poly, const Point& p, const Point& q) {
    Point d = sub(q, p);
    return clip(poly, -d.y, d.x, d.y * p.x - d.x * p.y);
}

Poly clip_right(const Poly& poly, const Point& p, const Point& q) { return clip_left(poly, q, p); }

Poly intersect(const Poly& a, const Poly& b) {
    Poly r = a;
    for (std::size_t i = 0; i < b.size() && !r.empty(); ++i) r = clip_left(r, b[i], b[(i + 1) % b.size()]);
    return r;
}

// a minus b as convex fragments
std::vector<Poly> subtract(const Poly& a, const Poly& b) {
    std::vector<Poly> out;
    Poly rest = a;
    for (std::size_t i = 0; i < b.size() && !rest.empty(); ++i) {
        const Point &p = b[i], &q = b[(i + 1) % b.size()];
        Poly outside = clip_right(rest, p, q);
        if (!outside.empty()) out.push_back(std::move(outside));
        rest = clip_left(rest, p, q);
    }
    return out;
}

Point centroid(const Poly& poly) {
    ExactScalar a = 0, cx = 0, cy = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point &p = poly[i], &q = poly[(i + 1) % poly.size()];
        ExactScalar c = cross(p, q);
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    return {cx / (3 * a), cy / (3 * a)};
}

// integral of |alpha x + beta y + gamma| over a convex polygon
ExactScalar abs_affine_integral(const Poly& poly, const ExactScalar& alpha, const ExactScalar& beta,
                                const ExactScalar& gamma) {
    auto integral = [&](const Poly& p) {
        if (p.empty()) return ExactScalar(0);
        Point c = centroid(p);
        return polygon_area(p) * (alpha * c.x + beta * c.y + gamma);
    };
    if (alpha.is_zero() && beta.is_zero()) return polygon_area(poly) * abs(gamma);
    return integral(clip(poly, alpha, beta, gamma)) - integral(clip(poly, -alpha, -beta, -gamma));
}

bool is_zero_piece(const FieldPiece& p) {
    return p.G.a.is_zero() && p.G.b.is_zero() && p.G.c.is_zero() && p.G.d.is_zero() && p.h.x.is_zero() &&
           p.h.y.is_zero();
}

Rect bbox(const Poly& p) {
    Rect r{p[0].x, p[0].x, p[0].y, p[0].y};
    for (const auto& v : p) {
        r.x_lo = min(r.x_lo, v.x);
        r.x_hi = max(r.x_hi, v.x);
        r.y_lo = min(r.y_lo, v.y);
        r.y_hi = max(r.y_hi, v.y);
    }
    return r;
}

bool boxes_overlap(const Rect& a, const Rect& b) {
    return a.x_lo < b.x_hi && b.x_lo < a.x_hi && a.y_lo < b.y_hi && b.y_lo < a.y_hi;
}

// uniform bucket grid over the unit square for bounding-box queries
class BoxIndex {
public:
    explicit BoxIndex(const std::vector<Rect>& boxes) : boxes_(boxes) {
        B_ = 1;
        while (B_ < 64 && B_ * B_ < static_cast<int>(boxes.size())) B_ *= 2;
        cells_.assign(static_cast<std::size_t>(B_) * B_, {});
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            auto [i0, i1, j0, j1] = range(boxes[i]);
            for (int j = j0; j <= j1; ++j)
                for (int k = i0; k <= i1; ++k) cells_[static_cast<std::size_t>(j) * B_ + k].push_back(i);
        }
    }

    std::vector<std::size_t> query(const Rect& r) const {
        std::vector<std::size_t> out;
        auto [i0, i1, j0, j1] = range(r);
        for (int j = j0; j <= j1; ++j)
            for (int k = i0; k <= i1; ++k)
                for (std::size_t idx : cells_[static_cast<std::size_t>(j) * B_ + k])
                    if (boxes_overlap(boxes_[idx], r)) out.push_back(idx);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    int cell(const ExactScalar& v) const {
        return std::clamp(static_cast<int>(floor(v * B_).to_double()), 0, B_ - 1);
    }
    std::tuple<int, int, int, int> range(const Rect& r) const {
        return {cell(r.x_lo), cell(r.x_hi), cell(r.y_lo), cell(r.y_hi)};
    }

    std::vector<Rect> boxes_;
    int B_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

std::string piece_key(const FieldPiece& p) {
    std::ostringstream os;
    for (const auto& v : p.polygon) os << v.x << ',' << v.y << ';';
    os << '|' << p.G.a << ',' << p.G.b << ',' << p.G.c << ',' << p.G.d << '|' << p.h.x << ',' << p.h.y;
    return os.str();
}

FieldPiece negated(const FieldPiece& p) {
    return {p.polygon, {-p.G.a, -p.G.b, -p.G.c, -p.G.d}, {-p.h.x, -p.h.y}};
}

// ---- jump set bookkeeping

using LineKey = std::tuple<int, ExactScalar, ExactScalar>;  // (vertical?, slope or x, intercept)

struct EdgeRec {
    ExactScalar s0, s1;
    std::size_t piece;
    bool left;
};

struct JumpInterval {
    Point pu, pv;
    Point du, dv;  // left minus right at both ends
};

template <class F>
void for_each_jump(const PiecewiseField& f, F&& visit) {
    std::map<LineKey, std::vector<EdgeRec>> lines;
    for (std::size_t k = 0; k < f.pieces.size(); ++k) {
        const Poly& poly = f.pieces[k].polygon;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Point &p = poly[i], &q = poly[(i + 1) % poly.size()];
            if (p.x == q.x) {
                bool up = p.y < q.y;
                lines[{1, p.x, 0}].push_back({min(p.y, q.y), max(p.y, q.y), k, up});
            } else {
                ExactScalar m = (q.y - p.y) / (q.x - p.x);
                ExactScalar c = p.y - m * p.x;
                bool right = p.x < q.x;
                lines[{0, m, c}].push_back({min(p.x, q.x), max(p.x, q.x), k, right});
            }
        }
    }
    for (auto& [key, edges] : lines) {
        const bool vertical = std::get<0>(key) == 1;
        const ExactScalar &m = std::get<1>(key), &c = std::get<2>(key);
        auto point = [&](const ExactScalar& s) -> Point {
            if (vertical) return {m, s};
            return {s, m * s + c};
        };
        std::vector<ExactScalar> bps;
        for (const auto& e : edges) {
            bps.push_back(e.s0);
            bps.push_back(e.s1);
        }
        std::sort(bps.begin(), bps.end());
        bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
        const std::size_t nint = bps.size() - 1;
        std::vector<long> left(nint, -1), right(nint, -1);
        for (const auto& e : edges) {
            std::size_t a = std::lower_bound(bps.begin(), bps.end(), e.s0) - bps.begin();
            std::size_t b = std::lower_bound(bps.begin(), bps.end(), e.s1) - bps.begin();
            for (std::size_t i = a; i < b; ++i) {
                long& slot = e.left ? left[i] : right[i];
                if (slot >= 0) throw std::logic_error("field pieces overlap along an edge");
                slot = static_cast<long>(e.piece);
            }
        }
        for (std::size_t i = 0; i < nint; ++i) {
            if (left[i] < 0 && right[i] < 0) continue;
            JumpInterval J{point(bps[i]), point(bps[i + 1]), {0, 0}, {0, 0}};
            auto val = [&](long k, const Point& x) -> Point {
                if (k < 0) return {0, 0};
                return f.pieces[static_cast<std::size_t>(k)].at(x);
            };
            J.du = sub(val(left[i], J.pu), val(right[i], J.pu));
            J.dv = sub(val(left[i], J.pv), val(right[i], J.pv));
            visit(J);
        }
    }
}

// integral of |(1-s) du + s dv| * |pv - pu| ds over [0,1]
ExactScalar jump_integral(const JumpInterval& J) {
    const Point &du = J.du, &dv = J.dv;
    bool zu = du.x.is_zero() && du.y.is_zero(), zv = dv.x.is_zero() && dv.y.is_zero();
    if (zu && zv) return 0;
    if (!cross(du, dv).is_zero()) throw std::domain_error("jump is not collinear along a segment; TV integral is irrational");
    const Point& w = zu ? dv : du;
    ExactScalar ww = dot(w, w);
    ExactScalar alpha = dot(du, w) / ww, beta = dot(dv, w) / ww;
    Point seg = sub(J.pv, J.pu);
    auto root = exact_sqrt(ww * dot(seg, seg));
    if (!root) throw std::domain_error("jump integral needs an irrational square root");
    ExactScalar aa = abs(alpha), bb = abs(beta), mean;
    if (alpha.sign() * beta.sign() >= 0)
        mean = (aa + bb) / 2;
    else
        mean = (alpha * alpha + beta * beta) / (2 * (aa + bb));
    return *root * mean;
}

void check_time(const ExactScalar& t, const ExactScalar& a, const ExactScalar& b, const char* what) {
    if (t == a || t == b) {
        std::ostringstream os;
        os << "field undefined at " << what << " boundary t=" << t;
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

ExactScalar polygon_area(const std::vector<Point>& poly) {
    ExactScalar a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
    return a / 2;
}

PiecewiseField rotation_field(const Rect& r, const ExactScalar& rate) {
    ExactScalar a = r.width(), b = r.height();
    Point c = r.center();
    ExactScalar k = rate * 2 * b / a, m = rate * 2 * a / b;
    Mat2 Gew{0, 0, k, 0}, Gns{0, -m, 0, 0};
    Point hew{0, -k * c.x}, hns{m * c.y, 0};
    Point sw{r.x_lo, r.y_lo}, se{r.x_hi, r.y_lo}, ne{r.x_hi, r.y_hi}, nw{r.x_lo, r.y_hi};
    PiecewiseField f;
    f.pieces.push_back({{se, ne, c}, Gew, hew});
    f.pieces.push_back({{ne, nw, c}, Gns, hns});
    f.pieces.push_back({{nw, sw, c}, Gew, hew});
    f.pieces.push_back({{sw, se, c}, Gns, hns});
    return f;
}

PiecewiseField field_at(const FlowSchedule& s, const ExactScalar& t) {
    if (t <= s.start() || t >= s.end()) throw std::invalid_argument("field time outside the open schedule interval");
    PiecewiseField f;
    for (const auto& g : s.groups) {
        check_time(t, g.t_begin, g.t_end, "group");
        if (!(g.t_begin < t && t < g.t_end)) continue;
        for (const auto& st : g.stages) {
            check_time(t, stage_begin(st), stage_end(st), "stage");
            if (!(stage_begin(st) < t && t < stage_end(st))) continue;
            for (const auto& layer : stage_layers(st)) {
                check_time(t, layer.t_begin, layer.t_end, "substage");
                if (!(layer.t_begin < t && t < layer.t_end)) continue;
                for (const auto& sub_stage : layer.subs) {
                    ExactScalar rate = ExactScalar(sub_stage.quarter_turns) / (layer.t_end - layer.t_begin);
                    auto rf = rotation_field(sub_stage.rect, rate);
                    f.pieces.insert(f.pieces.end(), rf.pieces.begin(), rf.pieces.end());
                }
            }
        }
    }
    return f;
}

TVReport total_variation(const PiecewiseField& f) {
    TVReport r;
    for (const auto& p : f.pieces) {
        ExactScalar fro2 = p.G.a * p.G.a + p.G.b * p.G.b + p.G.c * p.G.c + p.G.d * p.G.d;
        auto fro = exact_sqrt(fro2);
        if (!fro) throw std::domain_error("gradient norm is irrational");
        ExactScalar part = polygon_area(p.polygon) * *fro;
        r.per_piece.push_back(part);
        r.continuous_part += part;
    }
    for_each_jump(f, [&](const JumpInterval& J) { r.jump_part += jump_integral(J); });
    r.total = r.continuous_part + r.jump_part;
    return r;
}

ExactScalar l1_norm(const PiecewiseField& f) {
    ExactScalar total = 0;
    for (const auto& p : f.pieces) {
        total += abs_affine_integral(p.polygon, p.G.a, p.G.b, p.h.x);
        total += abs_affine_integral(p.polygon, p.G.c, p.G.d, p.h.y);
    }
    return total;
}

DivergenceReport check_divergence_free(const PiecewiseField& f) {
    DivergenceReport rep;
    for (std::size_t k = 0; k < f.pieces.size(); ++k) {
        if (!f.pieces[k].G.trace().is_zero()) {
            rep.ok = false;
            std::ostringstream os;
            os << "piece " << k << " has divergence " << f.pieces[k].G.trace();
            rep.violations.push_back(os.str());
        }
    }
    for_each_jump(f, [&](const JumpInterval& J) {
        Point d = sub(J.pv, J.pu);
        Point n{-d.y, d.x};
        if (!dot(J.du, n).is_zero() || !dot(J.dv, n).is_zero()) {
            rep.ok = false;
            std::ostringstream os;
            os << "normal velocity jumps across " << J.pu << " - " << J.pv;
            rep.violations.push_back(os.str());
        }
    });
    return rep;
}

PiecewiseField field_difference(const PiecewiseField& f, const PiecewiseField& g) {
    // identical pieces cancel outright
    std::map<std::string, std::vector<std::size_t>> g_by_key;
    for (std::size_t j = 0; j < g.pieces.size(); ++j) g_by_key[piece_key(g.pieces[j])].push_back(j);
    std::vector<char> f_live(f.pieces.size(), 1), g_live(g.pieces.size(), 1);
    for (std::size_t i = 0; i < f.pieces.size(); ++i) {
        auto it = g_by_key.find(piece_key(f.pieces[i]));
        if (it == g_by_key.end() || it->second.empty()) continue;
        g_live[it->second.back()] = 0;
        it->second.pop_back();
        f_live[i] = 0;
    }
    std::vector<std::size_t> fi, gi;
    for (std::size_t i = 0; i < f.pieces.size(); ++i)
        if (f_live[i] && !is_zero_piece(f.pieces[i])) fi.push_back(i);
    for (std::size_t j = 0; j < g.pieces.size(); ++j)
        if (g_live[j] && !is_zero_piece(g.pieces[j])) gi.push_back(j);

    std::vector<Rect> fbox, gbox;
    for (auto i : fi) fbox.push_back(bbox(f.pieces[i].polygon));
    for (auto j : gi) gbox.push_back(bbox(g.pieces[j].polygon));
    BoxIndex gindex(gbox), findex(fbox);

    PiecewiseField out;
    auto emit = [&](Poly poly, const Mat2& G, const Point& h) {
        FieldPiece p{std::move(poly), G, h};
        if (!is_zero_piece(p)) out.pieces.push_back(std::move(p));
    };
    for (std::size_t a = 0; a < fi.size(); ++a) {
        const FieldPiece& pf = f.pieces[fi[a]];
        std::vector<Poly> rest{pf.polygon};
        for (std::size_t b : gindex.query(fbox[a])) {
            const FieldPiece& pg = g.pieces[gi[b]];
            Poly both = intersect(pf.polygon, pg.polygon);
            if (both.empty()) continue;
            emit(std::move(both), {pf.G.a - pg.G.a, pf.G.b - pg.G.b, pf.G.c - pg.G.c, pf.G.d - pg.G.d},
                 sub(pf.h, pg.h));
            std::vector<Poly> next;
            for (const auto& r : rest) {
                auto parts = subtract(r, pg.polygon);
                next.insert(next.end(), parts.begin(), parts.end());
            }
            rest = std::move(next);
        }
        for (auto& r : rest) emit(std::move(r), pf.G, pf.h);
    }
    for (std::size_t b = 0; b < gi.size(); ++b) {
        FieldPiece ng = negated(g.pieces[gi[b]]);
        std::vector<Poly> rest{ng.polygon};
        for (std::size_t a : findex.query(gbox[b])) {
            std::vector<Poly> next;
            for (const auto& r : rest) {
                auto parts = subtract(r, f.pieces[fi[a]].polygon);
                next.insert(next.end(), parts.begin(), parts.end());
            }
            rest = std::move(next);
        }
        for (auto& r : rest) emit(std::move(r), ng.G, ng.h);
    }
    return out;
}

ExactScalar field_distance_l1(const PiecewiseField& f, const PiecewiseField& g) {
    return l1_norm(field_difference(f, g));
}

PiecewiseField transport_field(const PiecewiseField& f, const Affine2& A) {
    if (!A.L.is_monomial()) throw std::invalid_argument("transport needs a monomial linear part");
    Mat2 Li = A.L.inverse();
    bool flip = A.L.det().sign() < 0;
    PiecewiseField out;
    for (const auto& p : f.pieces) {
        FieldPiece q;
        for (const auto& v : p.polygon) q.polygon.push_back(A.apply(v));
        if (flip) std::reverse(q.polygon.begin(), q.polygon.end());
        q.G = A.L * p.G * Li;
        Point Lh = A.L.apply(p.h), Gt = q.G.apply(A.t);
        q.h = sub(Lh, Gt);
        out.pieces.push_back(std::move(q));
    }
    return out;
}

PiecewiseField field_sum(const PiecewiseField& f, const PiecewiseField& g) {
    PiecewiseField ng;
    for (const auto& p : g.pieces) ng.pieces.push_back(negated(p));
    return field_difference(f, ng);
}

std::vector<ExactScalar> common_breakpoints(const FlowSchedule& a, const FlowSchedule& b) {
    if (a.start() != b.start() || a.end() != b.end()) throw std::invalid_argument("schedules cover different times");
    auto ta = a.breakpoints(), tb = b.breakpoints();
    std::vector<ExactScalar> ts;
    std::merge(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(ts));
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

ExactScalar schedule_distance_l1(const FlowSchedule& a, const FlowSchedule& b) {
    auto ts = common_breakpoints(a, b);
    ExactScalar total = 0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        ExactScalar mid = (ts[i] + ts[i + 1]) / 2;
        total += (ts[i + 1] - ts[i]) * field_distance_l1(field_at(a, mid), field_at(b, mid));
    }
    return total;
}

ExactScalar schedule_distance_linf_l1(const FlowSchedule& a, const FlowSchedule& b) {
    auto ts = common_breakpoints(a, b);
    ExactScalar best = 0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        ExactScalar mid = (ts[i] + ts[i + 1]) / 2;
        best = max(best, field_distance_l1(field_at(a, mid), field_at(b, mid)));
    }
    return best;
}

ExactScalar schedule_tv_sup(const FlowSchedule& a, const FlowSchedule& b) {
    auto ts = common_breakpoints(a, b);
    ExactScalar best = 0;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        ExactScalar mid = (ts[i] + ts[i + 1]) / 2;
        best = max(best, total_variation(field_difference(field_at(a, mid), field_at(b, mid))).total);
    }
    return best;
}

ExactScalar schedule_tv_sup(const FlowSchedule& s) {
    return schedule_tv_sup(s, FlowSchedule::identity(s.start(), s.end()));
}

}  // namespace mixflow
