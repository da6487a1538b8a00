#include "mixflow/elementary.hpp"

#include <sstream>

namespace mixflow {

namespace {

const ExactScalar kHalf(1, 2);

Affine2 to_unit(const Rect& r) {
    ExactScalar a = r.width(), b = r.height();
    return {Mat2::diag(1 / a, 1 / b), {-r.x_lo / a, -r.y_lo / b}};
}

Affine2 from_unit(const Rect& r) { return {Mat2::diag(r.width(), r.height()), {r.x_lo, r.y_lo}}; }

// quarter turns about (1/2,1/2) on the unit square
Affine2 unit_turn(int q) {
    switch (((q % 4) + 4) % 4) {
        case 0: return Affine2::identity();
        case 1: return {{0, -1, 1, 0}, {1, 0}};
        case 2: return {{-1, 0, 0, -1}, {1, 1}};
        default: return {{0, 1, -1, 0}, {0, 1}};
    }
}

int side_index(Side s) { return static_cast<int>(s); }

void check_turns(int q) {
    if (q == 0 || q < -2 || q > 2) throw std::invalid_argument("quarter_turns must be in {-2,-1,1,2}");
}

ExactScalar stage_fraction(const ExactScalar& t, const ExactScalar& tb, const ExactScalar& te) {
    if (!(tb < te)) throw std::invalid_argument("empty stage interval");
    if (t < tb || t > te) throw std::invalid_argument("time outside stage interval");
    return (t - tb) / (te - tb);
}

// advance a unit-square point by phi quarter turns along its level square
Point advance(const Point& u, const ExactScalar& phi) {
    SquarePolar sp = to_square_polar(u);
    const ExactScalar& d = sp.radius;
    if (d.is_zero()) return u;
    ExactScalar perim = 8 * d;
    ExactScalar arc = 2 * d * side_index(sp.side) + sp.offset + 2 * d * phi;
    arc -= perim * floor(arc / perim);
    ExactScalar k = floor(arc / (2 * d));
    sp.side = static_cast<Side>(k.small_num());
    sp.offset = arc - 2 * d * k;
    return from_square_polar(sp);
}

std::string describe(const Point& p) {
    std::ostringstream os;
    os << p;
    return os.str();
}

}  // namespace

SquarePolar to_square_polar(const Point& u) {
    ExactScalar dx = u.x - kHalf, dy = u.y - kHalf;
    ExactScalar d = max(abs(dx), abs(dy));
    SquarePolar sp{d, Side::E, 0};
    if (d.is_zero()) return sp;
    if (dx == d && dy < d) {
        sp.side = Side::E;
        sp.offset = dy + d;
    } else if (dy == d && dx > -d) {
        sp.side = Side::N;
        sp.offset = d - dx;
    } else if (dx == -d && dy > -d) {
        sp.side = Side::W;
        sp.offset = d - dy;
    } else {
        sp.side = Side::S;
        sp.offset = dx + d;
    }
    return sp;
}

Point from_square_polar(const SquarePolar& sp) {
    const ExactScalar& d = sp.radius;
    switch (sp.side) {
        case Side::E: return {kHalf + d, kHalf - d + sp.offset};
        case Side::N: return {kHalf + d - sp.offset, kHalf + d};
        case Side::W: return {kHalf - d, kHalf + d - sp.offset};
        default: return {kHalf - d + sp.offset, kHalf - d};
    }
}

Point rotation_field_eval(const Rect& rect, const Point& x) {
    if (!rect.contains_open(x)) throw UndefinedSetHit("rotation field: point not in rect interior " + describe(x));
    ExactScalar a = rect.width(), b = rect.height();
    Point c = rect.center();
    ExactScalar rx = abs(x.x - c.x) / a, ry = abs(x.y - c.y) / b;
    if (rx == ry) throw UndefinedSetHit("rotation field: point on a diagonal " + describe(x));
    if (rx > ry) return {0, 2 * b / a * (x.x - c.x)};
    return {-(2 * a / b) * (x.y - c.y), 0};
}

Affine2 rotation_affine(const Rect& rect, int quarter_turns) {
    return from_unit(rect).after(unit_turn(quarter_turns).after(to_unit(rect)));
}

Point rotation_flow_eval(const RotationStage& stage, const ExactScalar& t, const Point& x) {
    check_turns(stage.quarter_turns);
    if (!stage.rect.contains_closed(x)) throw std::invalid_argument("point outside rotation rect");
    ExactScalar tau = stage_fraction(t, stage.t_begin, stage.t_end);
    Point u = to_unit(stage.rect).apply(x);
    return from_unit(stage.rect).apply(advance(u, tau * stage.quarter_turns));
}

Point rotation_flow_inverse(const RotationStage& stage, const ExactScalar& t, const Point& y) {
    check_turns(stage.quarter_turns);
    if (!stage.rect.contains_closed(y)) throw std::invalid_argument("point outside rotation rect");
    ExactScalar tau = stage_fraction(t, stage.t_begin, stage.t_end);
    Point u = to_unit(stage.rect).apply(y);
    return from_unit(stage.rect).apply(advance(u, -(tau * stage.quarter_turns)));
}

bool squares_adjacent(const Rect& k1, const Rect& k2) {
    if (k1.width() != k1.height() || k2.width() != k2.height() || k1.width() != k2.width()) return false;
    bool horiz = k1.y_lo == k2.y_lo && (k1.x_hi == k2.x_lo || k2.x_hi == k1.x_lo);
    bool vert = k1.x_lo == k2.x_lo && (k1.y_hi == k2.y_lo || k2.y_hi == k1.y_lo);
    return horiz || vert;
}

Rect bounding_union(const Rect& a, const Rect& b) {
    return {min(a.x_lo, b.x_lo), max(a.x_hi, b.x_hi), min(a.y_lo, b.y_lo), max(a.y_hi, b.y_hi)};
}

std::vector<RotationStage> transposition_stage_pair(const Rect& k1, const Rect& k2, const ExactScalar& t_begin,
                                                    const ExactScalar& t_end) {
    return transposition_substages({k1, k2, t_begin, t_end, false});
}

std::vector<RotationStage> transposition_substages(const TranspositionStage& s) {
    if (!squares_adjacent(s.k1, s.k2)) throw std::invalid_argument("transposition needs adjacent congruent squares");
    if (!(s.t_begin < s.t_end)) throw std::invalid_argument("empty stage interval");
    Rect R = bounding_union(s.k1, s.k2);
    ExactScalar mid = (s.t_begin + s.t_end) / 2;
    if (!s.reversed) return {{R, 2, s.t_begin, mid}, {s.k1, 2, mid, s.t_end}, {s.k2, 2, mid, s.t_end}};
    return {{s.k1, -2, s.t_begin, mid}, {s.k2, -2, s.t_begin, mid}, {R, -2, mid, s.t_end}};
}

std::vector<RotationStage> baker_substages(const BakerStage& s) {
    if (!(s.t_begin < s.t_end)) throw std::invalid_argument("empty stage interval");
    const Rect& R = s.rect;
    ExactScalar ym = (R.y_lo + R.y_hi) / 2;
    Rect bottom{R.x_lo, R.x_hi, R.y_lo, ym}, top{R.x_lo, R.x_hi, ym, R.y_hi};
    ExactScalar mid = (s.t_begin + s.t_end) / 2;
    if (!s.inverse) return {{R, 1, s.t_begin, mid}, {bottom, 1, mid, s.t_end}, {top, -1, mid, s.t_end}};
    return {{bottom, -1, s.t_begin, mid}, {top, 1, s.t_begin, mid}, {R, -1, mid, s.t_end}};
}

std::vector<AffinePiece> baker_pieces(const Rect& rect, bool inverse) {
    Affine2 left_u{{-2, 0, 0, ExactScalar(-1, 2)}, {1, kHalf}};
    Affine2 right_u{{2, 0, 0, kHalf}, {-1, kHalf}};
    Affine2 in = to_unit(rect), out = from_unit(rect);
    Affine2 left = out.after(left_u.after(in)), right = out.after(right_u.after(in));
    ExactScalar xm = (rect.x_lo + rect.x_hi) / 2, ym = (rect.y_lo + rect.y_hi) / 2;
    if (!inverse)
        return {{{rect.x_lo, xm, rect.y_lo, rect.y_hi}, left}, {{xm, rect.x_hi, rect.y_lo, rect.y_hi}, right}};
    return {{{rect.x_lo, rect.x_hi, rect.y_lo, ym}, left.inverse()}, {{rect.x_lo, rect.x_hi, ym, rect.y_hi}, right.inverse()}};
}

Point baker_map(const Rect& rect, const Point& x) {
    if (!rect.contains_closed(x)) throw std::invalid_argument("point outside Baker rect");
    ExactScalar xm = (rect.x_lo + rect.x_hi) / 2;
    if (x.x == xm) throw UndefinedSetHit("Baker map undefined on the vertical midline " + describe(x));
    auto pieces = baker_pieces(rect, false);
    return (x.x < xm ? pieces[0] : pieces[1]).map.apply(x);
}

Point baker_inverse(const Rect& rect, const Point& y) {
    if (!rect.contains_closed(y)) throw std::invalid_argument("point outside Baker rect");
    ExactScalar ym = (rect.y_lo + rect.y_hi) / 2;
    auto pieces = baker_pieces(rect, true);
    // the midline itself is the image of the bottom edge; the lower branch is used there
    return (y.y <= ym ? pieces[0] : pieces[1]).map.apply(y);
}

}  // namespace mixflow
