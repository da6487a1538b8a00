#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mixflow {

// Rational in lowest terms. Small values live in two int64s; anything that
// overflows moves to a shared, immutable mpq_class.
class ExactScalar {
public:
    ExactScalar() = default;
    ExactScalar(long long n);  // NOLINT: implicit from integers is intended
    ExactScalar(int n) : ExactScalar(static_cast<long long>(n)) {}
    ExactScalar(long n) : ExactScalar(static_cast<long long>(n)) {}
    ExactScalar(long long num, long long den);
    explicit ExactScalar(const mpq_class& q);

    static ExactScalar parse(std::string_view text);

    std::string str() const;
    mpq_class to_mpq() const;
    mpz_class numerator() const;
    mpz_class denominator() const;
    double to_double() const;

    bool is_small() const { return !big_; }
    int sign() const;
    bool is_zero() const { return sign() == 0; }
    bool is_integer() const;

    ExactScalar operator-() const;
    ExactScalar& operator+=(const ExactScalar& o);
    ExactScalar& operator-=(const ExactScalar& o);
    ExactScalar& operator*=(const ExactScalar& o);
    ExactScalar& operator/=(const ExactScalar& o);

    friend ExactScalar operator+(ExactScalar a, const ExactScalar& b) { return a += b; }
    friend ExactScalar operator-(ExactScalar a, const ExactScalar& b) { return a -= b; }
    friend ExactScalar operator*(ExactScalar a, const ExactScalar& b) { return a *= b; }
    friend ExactScalar operator/(ExactScalar a, const ExactScalar& b) { return a /= b; }

    friend bool operator==(const ExactScalar& a, const ExactScalar& b);
    friend std::strong_ordering operator<=>(const ExactScalar& a, const ExactScalar& b);

    // small-path accessors, only meaningful when is_small()
    std::int64_t small_num() const { return n_; }
    std::int64_t small_den() const { return d_; }

private:
    void set_from_mpq(mpq_class q);
    void set_small(__int128 n, __int128 d);  // reduces, may promote

    std::int64_t n_ = 0;
    std::int64_t d_ = 1;
    std::shared_ptr<const mpq_class> big_;
};

std::ostream& operator<<(std::ostream& os, const ExactScalar& x);

ExactScalar abs(const ExactScalar& x);
ExactScalar min(const ExactScalar& a, const ExactScalar& b);
ExactScalar max(const ExactScalar& a, const ExactScalar& b);
// floor as an integer-valued scalar
ExactScalar floor(const ExactScalar& x);
// exact square root if x is the square of a rational
std::optional<ExactScalar> exact_sqrt(const ExactScalar& x);
// natural log of |x|, accurate far below the double range; throws on zero
double log_abs(const ExactScalar& x);

struct Point {
    ExactScalar x;
    ExactScalar y;
    friend bool operator==(const Point&, const Point&) = default;
};

std::ostream& operator<<(std::ostream& os, const Point& p);

// 2x2 exact matrix [[a,b],[c,d]]
struct Mat2 {
    ExactScalar a = 1, b = 0, c = 0, d = 1;

    static Mat2 identity() { return {}; }
    static Mat2 diag(const ExactScalar& p, const ExactScalar& q) { return {p, 0, 0, q}; }

    ExactScalar det() const { return a * d - b * c; }
    ExactScalar trace() const { return a + d; }
    Mat2 inverse() const;
    bool is_monomial() const;  // diagonal or antidiagonal
    bool is_identity() const;

    Point apply(const Point& p) const { return {a * p.x + b * p.y, c * p.x + d * p.y}; }
    friend Mat2 operator*(const Mat2& l, const Mat2& r);
    friend bool operator==(const Mat2&, const Mat2&) = default;
};

// x -> L x + t
struct Affine2 {
    Mat2 L;
    Point t{0, 0};

    static Affine2 identity() { return {}; }
    static Affine2 translation(const ExactScalar& dx, const ExactScalar& dy) {
        return {Mat2::identity(), {dx, dy}};
    }

    Point apply(const Point& p) const {
        Point q = L.apply(p);
        return {q.x + t.x, q.y + t.y};
    }
    Affine2 inverse() const;
    bool is_translation() const { return L.is_identity(); }
    // (*this) after `first`
    Affine2 after(const Affine2& first) const;
    friend bool operator==(const Affine2&, const Affine2&) = default;
};

struct Rect {
    ExactScalar x_lo, x_hi, y_lo, y_hi;

    // validated constructor: nondegenerate and inside [0,1]^2
    static Rect make(ExactScalar x_lo, ExactScalar x_hi, ExactScalar y_lo, ExactScalar y_hi);
    static Rect unit() { return {0, 1, 0, 1}; }

    ExactScalar width() const { return x_hi - x_lo; }
    ExactScalar height() const { return y_hi - y_lo; }
    ExactScalar area() const { return width() * height(); }
    Point center() const;
    Point lower_left() const { return {x_lo, y_lo}; }

    bool contains_closed(const Point& p) const;
    bool contains_open(const Point& p) const;
    bool contains(const Rect& r) const;  // r subset of *this
    bool on_boundary(const Point& p) const { return contains_closed(p) && !contains_open(p); }

    friend bool operator==(const Rect&, const Rect&) = default;
};

std::ostream& operator<<(std::ostream& os, const Rect& r);

std::optional<Rect> rect_intersect(const Rect& a, const Rect& b);
bool interiors_overlap(const Rect& a, const Rect& b);
bool share_edge(const Rect& a, const Rect& b);  // contact along a segment of positive length

// image of a rect under an affine map with monomial linear part
Rect affine_image(const Affine2& f, const Rect& r);

struct Grid {
    int D = 1;

    explicit Grid(int d);
    int size() const { return D * D; }
    int index(int i, int j) const { return j * D + i; }
    int col(int k) const { return k % D; }
    int row(int k) const { return k / D; }
    Rect square(int i, int j) const;
    Rect square(int k) const { return square(col(k), row(k)); }
    ExactScalar side() const { return ExactScalar(1, D); }
    // index of the square whose open interior contains p
    std::optional<int> locate(const Point& p) const;
    // index of the square containing r, if r fits inside one square
    std::optional<int> containing_square(const Rect& r) const;
    bool adjacent(int k1, int k2) const;
    friend bool operator==(const Grid&, const Grid&) = default;
};

Rect grid_square(const Grid& g, int i, int j);

struct RectUnion {
    std::vector<Rect> parts;

    RectUnion() = default;
    explicit RectUnion(std::vector<Rect> p) : parts(std::move(p)) {}
    static RectUnion of(const Rect& r) { return RectUnion({r}); }

    ExactScalar area_unchecked() const;
    std::size_t size() const { return parts.size(); }
};

// exact area; throws if two parts overlap in their interiors
ExactScalar union_area(const RectUnion& u);
// first overlapping pair, if any
std::optional<std::pair<std::size_t, std::size_t>> find_overlap(const RectUnion& u);

// [0,1]^2 minus the given rects, as disjoint rects
std::vector<Rect> complement_in_unit(const std::vector<Rect>& holes);

}  // namespace mixflow
