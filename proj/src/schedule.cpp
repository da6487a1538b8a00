#include "mixflow/schedule.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <sstream>
#include <tuple>

namespace mixflow {

namespace {

std::atomic<long> g_checks{0};
std::atomic<long> g_violations{0};

using Layer = StageLayer;

std::vector<Layer> layers_of(const Stage& s) { return stage_layers(s); }

std::string where(const Point& p) {
    std::ostringstream os;
    os << p;
    return os.str();
}

const RotationStage* pick_sub(const Layer& l, const Point& x) {
    const RotationStage* hit = nullptr;
    for (const auto& sub : l.subs) {
        if (!sub.rect.contains_closed(x)) continue;
        if (hit) throw UndefinedSetHit("point on a shared edge of simultaneous rotations " + where(x));
        hit = &sub;
    }
    return hit;
}

const Stage* pick_stage(const StageGroup& g, const Point& x) {
    const Stage* hit = nullptr;
    for (const auto& st : g.stages) {
        if (!stage_support(st).contains_closed(x)) continue;
        if (hit) throw UndefinedSetHit("point on a shared edge of two stages " + where(x));
        hit = &st;
    }
    return hit;
}

Point eval_group(const StageGroup& g, const ExactScalar& tau, const Point& x) {
    const Stage* st = pick_stage(g, x);
    if (!st) return x;
    Point y = x;
    for (const auto& layer : layers_of(*st)) {
        if (tau <= layer.t_begin) break;
        ExactScalar tl = min(tau, layer.t_end);
        if (const RotationStage* sub = pick_sub(layer, y)) y = rotation_flow_eval(*sub, tl, y);
    }
    return y;
}

Point eval_group_inverse(const StageGroup& g, const ExactScalar& tau, const Point& y) {
    const Stage* st = pick_stage(g, y);
    if (!st) return y;
    auto layers = layers_of(*st);
    Point x = y;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        if (tau <= it->t_begin) continue;
        ExactScalar tl = min(tau, it->t_end);
        if (const RotationStage* sub = pick_sub(*it, x)) x = rotation_flow_inverse(*sub, tl, x);
    }
    return x;
}

using AffineKey = std::tuple<ExactScalar, ExactScalar, ExactScalar, ExactScalar, ExactScalar, ExactScalar>;

AffineKey key_of(const Affine2& f) { return {f.L.a, f.L.b, f.L.c, f.L.d, f.t.x, f.t.y}; }

bool merge_pass(std::vector<Rect>& rs, bool horizontal) {
    if (horizontal) {
        std::sort(rs.begin(), rs.end(), [](const Rect& a, const Rect& b) {
            return std::tie(a.y_lo, a.y_hi, a.x_lo) < std::tie(b.y_lo, b.y_hi, b.x_lo);
        });
    } else {
        std::sort(rs.begin(), rs.end(), [](const Rect& a, const Rect& b) {
            return std::tie(a.x_lo, a.x_hi, a.y_lo) < std::tie(b.x_lo, b.x_hi, b.y_lo);
        });
    }
    std::vector<Rect> out;
    bool changed = false;
    for (auto& r : rs) {
        if (!out.empty()) {
            Rect& p = out.back();
            bool join = horizontal ? (p.y_lo == r.y_lo && p.y_hi == r.y_hi && p.x_hi == r.x_lo)
                                   : (p.x_lo == r.x_lo && p.x_hi == r.x_hi && p.y_hi == r.y_lo);
            if (join) {
                if (horizontal)
                    p.x_hi = r.x_hi;
                else
                    p.y_hi = r.y_hi;
                changed = true;
                continue;
            }
        }
        out.push_back(std::move(r));
    }
    rs = std::move(out);
    return changed;
}

int floor_times(const ExactScalar& v, int B) {
    if (v.is_small()) {
        __int128 n = static_cast<__int128>(v.small_num()) * B;
        __int128 d = v.small_den();
        __int128 q = n / d;
        if (n % d != 0 && n < 0) --q;
        return static_cast<int>(q);
    }
    return static_cast<int>(floor(v * B).small_num());
}

bool integer_times(const ExactScalar& v, int B) {
    if (v.is_small()) return (static_cast<__int128>(v.small_num()) * B) % v.small_den() == 0;
    return (v * B).is_integer();
}

}  // namespace

std::vector<StageLayer> stage_layers(const Stage& s) {
    std::vector<StageLayer> out;
    for (auto& sub : stage_substages(s)) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const StageLayer& l) { return l.t_begin == sub.t_begin && l.t_end == sub.t_end; });
        if (it == out.end()) {
            out.push_back({sub.t_begin, sub.t_end, {sub}});
        } else {
            it->subs.push_back(sub);
        }
    }
    std::sort(out.begin(), out.end(), [](const StageLayer& a, const StageLayer& b) { return a.t_begin < b.t_begin; });
    return out;
}

Rect stage_support(const Stage& s) {
    return std::visit(
        [](const auto& st) -> Rect {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, TranspositionStage>)
                return bounding_union(st.k1, st.k2);
            else
                return st.rect;
        },
        s);
}

std::vector<RotationStage> stage_substages(const Stage& s) {
    return std::visit(
        [](const auto& st) -> std::vector<RotationStage> {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, RotationStage>)
                return {st};
            else if constexpr (std::is_same_v<T, BakerStage>)
                return baker_substages(st);
            else
                return transposition_substages(st);
        },
        s);
}

const ExactScalar& stage_begin(const Stage& s) {
    return std::visit([](const auto& st) -> const ExactScalar& { return st.t_begin; }, s);
}

const ExactScalar& stage_end(const Stage& s) {
    return std::visit([](const auto& st) -> const ExactScalar& { return st.t_end; }, s);
}

std::string stage_kind(const Stage& s) {
    switch (s.index()) {
        case 0: return "rotation";
        case 1: return "baker";
        default: return "transposition";
    }
}

Stage with_times(const Stage& s, const ExactScalar& t_begin, const ExactScalar& t_end) {
    Stage out = s;
    std::visit(
        [&](auto& st) {
            st.t_begin = t_begin;
            st.t_end = t_end;
        },
        out);
    return out;
}

FlowSchedule FlowSchedule::identity(const ExactScalar& t_begin, const ExactScalar& t_end) {
    return FlowSchedule{{StageGroup{t_begin, t_end, {}}}};
}

void FlowSchedule::validate() const {
    if (groups.empty()) throw std::invalid_argument("schedule has no groups");
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        if (!(g.t_begin < g.t_end)) throw std::invalid_argument("empty group interval");
        if (i > 0 && groups[i - 1].t_end != g.t_begin) throw std::invalid_argument("group intervals do not abut");
        std::vector<Rect> supports;
        for (const auto& st : g.stages) {
            if (stage_begin(st) < g.t_begin || stage_end(st) > g.t_end || !(stage_begin(st) < stage_end(st)))
                throw std::invalid_argument("stage leaves its group interval");
            Rect r = stage_support(st);
            if (r.x_lo.sign() < 0 || r.y_lo.sign() < 0 || r.x_hi > 1 || r.y_hi > 1)
                throw std::invalid_argument("stage support outside the unit square");
            stage_substages(st);  // validates stage geometry
            supports.push_back(std::move(r));
        }
        if (find_overlap(RectUnion(supports))) throw std::invalid_argument("stage supports overlap within a group");
    }
}

std::vector<ExactScalar> FlowSchedule::breakpoints() const {
    std::vector<ExactScalar> ts;
    for (const auto& g : groups) {
        ts.push_back(g.t_begin);
        ts.push_back(g.t_end);
        for (const auto& st : g.stages)
            for (const auto& sub : stage_substages(st)) {
                ts.push_back(sub.t_begin);
                ts.push_back(sub.t_end);
            }
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

std::size_t FlowSchedule::stage_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.stages.size();
    return n;
}

FlowSchedule compose_schedules(const FlowSchedule& prefix, const FlowSchedule& suffix) {
    prefix.validate();
    suffix.validate();
    if (prefix.end() != suffix.start()) throw std::invalid_argument("schedules do not abut in time");
    FlowSchedule out = prefix;
    out.groups.insert(out.groups.end(), suffix.groups.begin(), suffix.groups.end());
    return out;
}

FlowSchedule rescale(const FlowSchedule& s, const ExactScalar& a, const ExactScalar& b) {
    ExactScalar s0 = s.start(), s1 = s.end();
    ExactScalar k = (b - a) / (s1 - s0);
    auto map = [&](const ExactScalar& t) { return a + (t - s0) * k; };
    FlowSchedule out;
    for (const auto& g : s.groups) {
        StageGroup ng{map(g.t_begin), map(g.t_end), {}};
        for (const auto& st : g.stages) ng.stages.push_back(with_times(st, map(stage_begin(st)), map(stage_end(st))));
        out.groups.push_back(std::move(ng));
    }
    return out;
}

FlowSchedule reverse_schedule(const FlowSchedule& s) {
    ExactScalar s0 = s.start(), s1 = s.end();
    auto map = [&](const ExactScalar& t) { return s0 + s1 - t; };
    FlowSchedule out;
    for (auto it = s.groups.rbegin(); it != s.groups.rend(); ++it) {
        StageGroup ng{map(it->t_end), map(it->t_begin), {}};
        for (const auto& st : it->stages) {
            Stage r = std::visit(
                [&](const auto& x) -> Stage {
                    auto y = x;
                    using T = std::decay_t<decltype(x)>;
                    y.t_begin = map(x.t_end);
                    y.t_end = map(x.t_begin);
                    if constexpr (std::is_same_v<T, RotationStage>) y.quarter_turns = -x.quarter_turns;
                    if constexpr (std::is_same_v<T, BakerStage>) y.inverse = !x.inverse;
                    if constexpr (std::is_same_v<T, TranspositionStage>) y.reversed = !x.reversed;
                    return y;
                },
                st);
            ng.stages.push_back(std::move(r));
        }
        out.groups.push_back(std::move(ng));
    }
    return out;
}

Point eval_flow(const FlowSchedule& s, const ExactScalar& t, const Point& x) {
    if (t < s.start() || t > s.end()) throw std::invalid_argument("time outside schedule");
    Point y = x;
    for (const auto& g : s.groups) {
        if (t <= g.t_begin) break;
        try {
            y = eval_group(g, min(t, g.t_end), y);
        } catch (const UndefinedSetHit& e) {
            std::ostringstream os;
            os << e.what() << " in group [" << g.t_begin << "," << g.t_end << "]";
            throw UndefinedSetHit(os.str());
        }
    }
    return y;
}

Point eval_flow_inverse(const FlowSchedule& s, const ExactScalar& t, const Point& y) {
    if (t < s.start() || t > s.end()) throw std::invalid_argument("time outside schedule");
    Point x = y;
    for (auto it = s.groups.rbegin(); it != s.groups.rend(); ++it) {
        if (t <= it->t_begin) continue;
        x = eval_group_inverse(*it, min(t, it->t_end), x);
    }
    return x;
}

// ---------------------------------------------------------------- TimeOneMap

TimeOneMap::TimeOneMap(std::vector<AffinePiece> pieces) : pieces_(std::move(pieces)) {
    for (const auto& p : pieces_) {
        if (!p.map.L.is_monomial()) throw std::invalid_argument("time-1 pieces must have monomial linear parts");
        if (abs(p.map.L.det()) != 1) throw std::invalid_argument("time-1 piece is not measure preserving");
    }
    build_index();
}

TimeOneMap TimeOneMap::identity() { return TimeOneMap({{Rect::unit(), Affine2::identity()}}); }

void TimeOneMap::build_index() {
    int B = 1;
    while (B < 64 && 2 * B * B * 2 <= static_cast<int>(pieces_.size())) B *= 2;
    B_ = B;
    buckets_.assign(static_cast<std::size_t>(B) * B, {});
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        const Rect& d = pieces_[i].domain;
        int i0 = bucket_lo(d.x_lo), i1 = bucket_hi(d.x_hi), j0 = bucket_lo(d.y_lo), j1 = bucket_hi(d.y_hi);
        for (int j = j0; j <= j1; ++j)
            for (int k = i0; k <= i1; ++k) buckets_[static_cast<std::size_t>(j) * B + k].push_back(static_cast<std::uint32_t>(i));
    }
}

int TimeOneMap::bucket_lo(const ExactScalar& v) const { return std::clamp(floor_times(v, B_), 0, B_ - 1); }

int TimeOneMap::bucket_hi(const ExactScalar& v) const {
    int f = floor_times(v, B_);
    if (integer_times(v, B_)) --f;
    return std::clamp(f, 0, B_ - 1);
}

void TimeOneMap::for_each_candidate(const Rect& r, const std::function<void(const AffinePiece&, Rect&&)>& f) const {
    int i0 = bucket_lo(r.x_lo), i1 = bucket_hi(r.x_hi), j0 = bucket_lo(r.y_lo), j1 = bucket_hi(r.y_hi);
    bool single = i0 == i1 && j0 == j1;
    for (int j = j0; j <= j1; ++j)
        for (int k = i0; k <= i1; ++k)
            for (std::uint32_t idx : buckets_[static_cast<std::size_t>(j) * B_ + k]) {
                const AffinePiece& p = pieces_[idx];
                auto part = rect_intersect(p.domain, r);
                if (!part) continue;
                // report each pair once: in the bucket holding the part's lower-left corner
                if (!single && (std::max(bucket_lo(part->x_lo), i0) != k || std::max(bucket_lo(part->y_lo), j0) != j))
                    continue;
                f(p, std::move(*part));
            }
}

Point TimeOneMap::apply(const Point& x) const {
    if (x.x.sign() < 0 || x.y.sign() < 0 || x.x > 1 || x.y > 1) throw std::invalid_argument("point outside unit square");
    auto lo = [&](const ExactScalar& v) {
        int f = floor_times(v, B_);
        if (integer_times(v, B_)) --f;
        return std::clamp(f, 0, B_ - 1);
    };
    int i0 = lo(x.x), i1 = bucket_lo(x.x), j0 = lo(x.y), j1 = bucket_lo(x.y);
    std::optional<Point> img;
    for (int j = j0; j <= j1; ++j)
        for (int k = i0; k <= i1; ++k)
            for (std::uint32_t idx : buckets_[static_cast<std::size_t>(j) * B_ + k]) {
                const AffinePiece& p = pieces_[idx];
                if (!p.domain.contains_closed(x)) continue;
                Point y = p.map.apply(x);
                if (img && !(*img == y)) throw UndefinedSetHit("time-1 map is discontinuous at " + where(x));
                img = std::move(y);
            }
    if (!img) throw std::invalid_argument("point not covered by any piece " + where(x));
    return *img;
}

TimeOneMap TimeOneMap::inverse() const {
    std::vector<AffinePiece> out;
    out.reserve(pieces_.size());
    for (const auto& p : pieces_) out.push_back({affine_image(p.map, p.domain), p.map.inverse()});
    return TimeOneMap(std::move(out));
}

TimeOneMap TimeOneMap::then(const TimeOneMap& next) const {
    std::vector<AffinePiece> out;
    for (const auto& p : pieces_) {
        Rect img = affine_image(p.map, p.domain);
        Affine2 back = p.map.inverse();
        next.for_each_candidate(img, [&](const AffinePiece& q, Rect&& part) {
            out.push_back({affine_image(back, part), q.map.after(p.map)});
        });
    }
    return TimeOneMap(std::move(out)).coalesced();
}

TimeOneMap TimeOneMap::coalesced() const {
    std::map<AffineKey, std::pair<Affine2, std::vector<Rect>>> groups;
    for (const auto& p : pieces_) {
        auto& slot = groups[key_of(p.map)];
        slot.first = p.map;
        slot.second.push_back(p.domain);
    }
    std::vector<AffinePiece> out;
    for (auto& [k, slot] : groups) {
        auto& rs = slot.second;
        bool changed = true;
        while (changed) {
            bool h = merge_pass(rs, true);
            bool v = merge_pass(rs, false);
            changed = h || v;
        }
        for (auto& r : rs) out.push_back({std::move(r), slot.first});
    }
    return TimeOneMap(std::move(out));
}

bool TimeOneMap::is_identity() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const AffinePiece& p) { return p.map == Affine2::identity(); });
}

void TimeOneMap::validate_tiling() const {
    std::vector<Rect> doms, imgs;
    for (const auto& p : pieces_) {
        doms.push_back(p.domain);
        imgs.push_back(affine_image(p.map, p.domain));
    }
    if (union_area(RectUnion(doms)) != 1) throw std::logic_error("time-1 pieces do not tile the unit square");
    if (union_area(RectUnion(imgs)) != 1) throw std::logic_error("time-1 images do not tile the unit square");
}

TimeOneMap stage_time_one(const Stage& s) {
    std::optional<TimeOneMap> acc;
    for (const auto& layer : layers_of(s)) {
        std::vector<AffinePiece> ps;
        for (const auto& sub : layer.subs) ps.push_back({sub.rect, rotation_affine(sub.rect, sub.quarter_turns)});
        TimeOneMap m(std::move(ps));
        acc = acc ? acc->then(m) : m.coalesced();
    }
    return acc ? *acc : TimeOneMap();
}

TimeOneMap group_time_one(const StageGroup& g) {
    std::vector<AffinePiece> ps;
    std::vector<Rect> holes;
    for (const auto& st : g.stages) {
        holes.push_back(stage_support(st));
        TimeOneMap m = stage_time_one(st);
        ps.insert(ps.end(), m.pieces().begin(), m.pieces().end());
    }
    for (auto& r : complement_in_unit(holes)) ps.push_back({std::move(r), Affine2::identity()});
    return TimeOneMap(std::move(ps));
}

TimeOneMap time_one_map(const FlowSchedule& s) {
    s.validate();
    TimeOneMap acc = TimeOneMap::identity();
    for (const auto& g : s.groups) {
        if (g.stages.empty()) continue;
        acc = acc.then(group_time_one(g));
    }
    return acc;
}

RectUnion pushforward_set(const TimeOneMap& m, const RectUnion& u, Direction direction) {
    TimeOneMap inv;
    const TimeOneMap* use = &m;
    if (direction == Direction::inverse) {
        inv = m.inverse();
        use = &inv;
    }
    RectUnion out;
    for (const auto& r : u.parts) use->for_each_image(r, [&](Rect&& img) { out.parts.push_back(std::move(img)); });
    measure_audit_record(u.area_unchecked(), out.area_unchecked(), "pushforward_set");
    return out;
}

std::optional<SquarePermutation> square_translation(const TimeOneMap& m, const Grid& g) {
    std::vector<int> image(g.size(), -1);
    std::vector<char> hit(g.size(), 0);
    for (int k = 0; k < g.size(); ++k) {
        Rect sq = g.square(k);
        std::optional<Affine2> map;
        ExactScalar covered = 0;
        bool ok = true;
        m.for_each_candidate(sq, [&](const AffinePiece& p, Rect&& part) {
            if (!p.map.is_translation() || (map && !(*map == p.map))) ok = false;
            map = p.map;
            covered += part.area();
        });
        if (!ok || !map || covered != sq.area()) return std::nullopt;
        Rect img = affine_image(*map, sq);
        auto idx = g.containing_square(img);
        if (!idx || !(g.square(*idx) == img) || hit[*idx]) return std::nullopt;
        hit[*idx] = 1;
        image[k] = *idx;
    }
    return SquarePermutation::from_image(g.D, std::move(image));
}

long measure_audit_checks() { return g_checks.load(); }
long measure_audit_violations() { return g_violations.load(); }

void measure_audit_record(const ExactScalar& before, const ExactScalar& after, const char* where_) {
    ++g_checks;
    if (before != after) {
        ++g_violations;
        std::ostringstream os;
        os << where_ << ": area changed from " << before << " to " << after;
        throw std::logic_error(os.str());
    }
}

}  // namespace mixflow
