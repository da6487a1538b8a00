#include "mixflow/exact.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mixflow {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

std::uint64_t gcd64(std::uint64_t a, std::uint64_t b) {
    if (a == 0) return b;
    if (b == 0) return a;
    int shift = __builtin_ctzll(a | b);
    a >>= __builtin_ctzll(a);
    do {
        b >>= __builtin_ctzll(b);
        if (a > b) std::swap(a, b);
        b -= a;
    } while (b != 0);
    return a << shift;
}

u128 gcd128(u128 a, u128 b) {
    while (b != 0) {
        if ((a >> 64) == 0 && (b >> 64) == 0) return gcd64(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
        u128 r = a % b;
        a = b;
        b = r;
    }
    return a;
}

mpz_class mpz_from_i128(i128 v) {
    bool neg = v < 0;
    u128 u = neg ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v);
    mpz_class hi(static_cast<unsigned long>(static_cast<std::uint64_t>(u >> 64)));
    mpz_class lo(static_cast<unsigned long>(static_cast<std::uint64_t>(u)));
    mpz_class r = (hi << 64) + lo;
    return neg ? mpz_class(-r) : r;
}

constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();

bool fits(i128 v) { return v <= kMax && v >= -kMax; }

bool mpz_to_int64(const mpz_class& z, std::int64_t& out) {
    if (!mpz_fits_slong_p(z.get_mpz_t())) return false;
    long v = z.get_si();
    if (v == std::numeric_limits<long>::min()) return false;
    out = v;
    return true;
}

}  // namespace

ExactScalar::ExactScalar(long long n) : n_(n), d_(1) {
    if (n == std::numeric_limits<long long>::min()) set_from_mpq(mpq_class(mpz_from_i128(n)));
}

ExactScalar::ExactScalar(long long num, long long den) {
    if (den == 0) throw std::domain_error("zero denominator");
    set_small(static_cast<i128>(num), static_cast<i128>(den));
}

ExactScalar::ExactScalar(const mpq_class& q) { set_from_mpq(q); }

void ExactScalar::set_small(i128 n, i128 d) {
    if (d < 0) {
        n = -n;
        d = -d;
    }
    u128 an = n < 0 ? static_cast<u128>(-n) : static_cast<u128>(n);
    u128 g = gcd128(an, static_cast<u128>(d));
    if (g > 1) {
        n /= static_cast<i128>(g);
        d /= static_cast<i128>(g);
    }
    if (n == 0) d = 1;
    if (fits(n) && d <= kMax) {
        n_ = static_cast<std::int64_t>(n);
        d_ = static_cast<std::int64_t>(d);
        big_.reset();
        return;
    }
    mpq_class q(mpz_from_i128(n), mpz_from_i128(d));
    big_ = std::make_shared<const mpq_class>(std::move(q));
    n_ = 0;
    d_ = 1;
}

void ExactScalar::set_from_mpq(mpq_class q) {
    q.canonicalize();
    std::int64_t n, d;
    if (mpz_to_int64(q.get_num(), n) && mpz_to_int64(q.get_den(), d)) {
        n_ = n;
        d_ = d;
        big_.reset();
        return;
    }
    big_ = std::make_shared<const mpq_class>(std::move(q));
    n_ = 0;
    d_ = 1;
}

ExactScalar ExactScalar::parse(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.empty()) throw std::invalid_argument("empty rational");
    if (s.front() == '+') s.erase(s.begin());
    auto valid = [](const std::string& part, bool allow_sign) {
        if (part.empty()) return false;
        std::size_t i = 0;
        if (allow_sign && part[0] == '-') i = 1;
        if (i == part.size()) return false;
        for (; i < part.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(part[i]))) return false;
        return true;
    };
    auto slash = s.find('/');
    std::string num = s.substr(0, slash);
    std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
    if (!valid(num, true) || !valid(den, false)) throw std::invalid_argument("bad rational: " + s);
    mpz_class zn(num), zd(den);
    if (zd == 0) throw std::domain_error("zero denominator");
    return ExactScalar(mpq_class(zn, zd));
}

std::string ExactScalar::str() const {
    if (big_) {
        std::string s = big_->get_num().get_str();
        if (big_->get_den() != 1) s += "/" + big_->get_den().get_str();
        return s;
    }
    std::string s = std::to_string(n_);
    if (d_ != 1) s += "/" + std::to_string(d_);
    return s;
}

mpq_class ExactScalar::to_mpq() const {
    if (big_) return *big_;
    return mpq_class(mpz_class(static_cast<long>(n_)), mpz_class(static_cast<long>(d_)));
}

mpz_class ExactScalar::numerator() const { return big_ ? mpz_class(big_->get_num()) : mpz_class(static_cast<long>(n_)); }
mpz_class ExactScalar::denominator() const { return big_ ? mpz_class(big_->get_den()) : mpz_class(static_cast<long>(d_)); }

double ExactScalar::to_double() const {
    if (big_) return big_->get_d();
    return static_cast<double>(n_) / static_cast<double>(d_);
}

int ExactScalar::sign() const {
    if (big_) return sgn(*big_);
    return (n_ > 0) - (n_ < 0);
}

bool ExactScalar::is_integer() const { return big_ ? big_->get_den() == 1 : d_ == 1; }

ExactScalar ExactScalar::operator-() const {
    ExactScalar r;
    if (big_) {
        r.set_from_mpq(-*big_);
    } else {
        r.n_ = -n_;
        r.d_ = d_;
    }
    return r;
}

ExactScalar& ExactScalar::operator+=(const ExactScalar& o) {
    if (!big_ && !o.big_) {
        if (d_ == o.d_) {
            i128 n = static_cast<i128>(n_) + o.n_;
            if (d_ == 1 && fits(n)) {
                n_ = static_cast<std::int64_t>(n);
                return *this;
            }
            set_small(n, d_);
        } else {
            set_small(static_cast<i128>(n_) * o.d_ + static_cast<i128>(o.n_) * d_, static_cast<i128>(d_) * o.d_);
        }
        return *this;
    }
    set_from_mpq(to_mpq() + o.to_mpq());
    return *this;
}

ExactScalar& ExactScalar::operator-=(const ExactScalar& o) { return *this += -o; }

ExactScalar& ExactScalar::operator*=(const ExactScalar& o) {
    if (!big_ && !o.big_) {
        set_small(static_cast<i128>(n_) * o.n_, static_cast<i128>(d_) * o.d_);
        return *this;
    }
    set_from_mpq(to_mpq() * o.to_mpq());
    return *this;
}

ExactScalar& ExactScalar::operator/=(const ExactScalar& o) {
    if (o.is_zero()) throw std::domain_error("division by zero");
    if (!big_ && !o.big_) {
        set_small(static_cast<i128>(n_) * o.d_, static_cast<i128>(d_) * o.n_);
        return *this;
    }
    set_from_mpq(to_mpq() / o.to_mpq());
    return *this;
}

bool operator==(const ExactScalar& a, const ExactScalar& b) {
    if (!a.big_ && !b.big_) return a.n_ == b.n_ && a.d_ == b.d_;
    return a.to_mpq() == b.to_mpq();
}

std::strong_ordering operator<=>(const ExactScalar& a, const ExactScalar& b) {
    if (!a.big_ && !b.big_) {
        i128 l = static_cast<i128>(a.n_) * b.d_;
        i128 r = static_cast<i128>(b.n_) * a.d_;
        return l <=> r;
    }
    int c = cmp(a.to_mpq(), b.to_mpq());
    return c <=> 0;
}

std::ostream& operator<<(std::ostream& os, const ExactScalar& x) { return os << x.str(); }

ExactScalar abs(const ExactScalar& x) { return x.sign() < 0 ? -x : x; }
ExactScalar min(const ExactScalar& a, const ExactScalar& b) { return b < a ? b : a; }
ExactScalar max(const ExactScalar& a, const ExactScalar& b) { return a < b ? b : a; }

ExactScalar floor(const ExactScalar& x) {
    if (x.is_small()) {
        std::int64_t n = x.small_num(), d = x.small_den();
        std::int64_t q = n / d;
        if (n % d != 0 && n < 0) --q;
        return ExactScalar(q);
    }
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), x.numerator().get_mpz_t(), x.denominator().get_mpz_t());
    return ExactScalar(mpq_class(q));
}

std::optional<ExactScalar> exact_sqrt(const ExactScalar& x) {
    if (x.sign() < 0) return std::nullopt;
    mpz_class n = x.numerator(), d = x.denominator();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
    return ExactScalar(mpq_class(rn, rd));
}

std::ostream& operator<<(std::ostream& os, const Point& p) { return os << "(" << p.x << ", " << p.y << ")"; }

Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

Mat2 Mat2::inverse() const {
    ExactScalar dt = det();
    if (dt.is_zero()) throw std::domain_error("singular matrix");
    return {d / dt, -b / dt, -c / dt, a / dt};
}

bool Mat2::is_monomial() const {
    bool diag = b.is_zero() && c.is_zero() && !a.is_zero() && !d.is_zero();
    bool anti = a.is_zero() && d.is_zero() && !b.is_zero() && !c.is_zero();
    return diag || anti;
}

bool Mat2::is_identity() const { return a == 1 && d == 1 && b.is_zero() && c.is_zero(); }

Affine2 Affine2::inverse() const {
    Mat2 li = L.inverse();
    Point p = li.apply(t);
    return {li, {-p.x, -p.y}};
}

Affine2 Affine2::after(const Affine2& first) const {
    Point p = L.apply(first.t);
    return {L * first.L, {p.x + t.x, p.y + t.y}};
}

Rect Rect::make(ExactScalar x_lo, ExactScalar x_hi, ExactScalar y_lo, ExactScalar y_hi) {
    if (!(x_lo < x_hi) || !(y_lo < y_hi)) throw std::invalid_argument("degenerate rect");
    if (x_lo.sign() < 0 || y_lo.sign() < 0 || x_hi > 1 || y_hi > 1) throw std::invalid_argument("rect outside unit square");
    return {std::move(x_lo), std::move(x_hi), std::move(y_lo), std::move(y_hi)};
}

Point Rect::center() const { return {(x_lo + x_hi) / 2, (y_lo + y_hi) / 2}; }

bool Rect::contains_closed(const Point& p) const {
    return x_lo <= p.x && p.x <= x_hi && y_lo <= p.y && p.y <= y_hi;
}

bool Rect::contains_open(const Point& p) const { return x_lo < p.x && p.x < x_hi && y_lo < p.y && p.y < y_hi; }

bool Rect::contains(const Rect& r) const {
    return x_lo <= r.x_lo && r.x_hi <= x_hi && y_lo <= r.y_lo && r.y_hi <= y_hi;
}

std::ostream& operator<<(std::ostream& os, const Rect& r) {
    return os << "[" << r.x_lo << "," << r.x_hi << "]x[" << r.y_lo << "," << r.y_hi << "]";
}

std::optional<Rect> rect_intersect(const Rect& a, const Rect& b) {
    const ExactScalar& xl = a.x_lo < b.x_lo ? b.x_lo : a.x_lo;
    const ExactScalar& xh = a.x_hi < b.x_hi ? a.x_hi : b.x_hi;
    if (!(xl < xh)) return std::nullopt;
    const ExactScalar& yl = a.y_lo < b.y_lo ? b.y_lo : a.y_lo;
    const ExactScalar& yh = a.y_hi < b.y_hi ? a.y_hi : b.y_hi;
    if (!(yl < yh)) return std::nullopt;
    return Rect{xl, xh, yl, yh};
}

bool interiors_overlap(const Rect& a, const Rect& b) {
    return a.x_lo < b.x_hi && b.x_lo < a.x_hi && a.y_lo < b.y_hi && b.y_lo < a.y_hi;
}

bool share_edge(const Rect& a, const Rect& b) {
    bool vertical = (a.x_hi == b.x_lo || b.x_hi == a.x_lo) && max(a.y_lo, b.y_lo) < min(a.y_hi, b.y_hi);
    bool horizontal = (a.y_hi == b.y_lo || b.y_hi == a.y_lo) && max(a.x_lo, b.x_lo) < min(a.x_hi, b.x_hi);
    return vertical || horizontal;
}

Rect affine_image(const Affine2& f, const Rect& r) {
    if (!f.L.is_monomial()) throw std::domain_error("affine_image needs a monomial linear part");
    Point p = f.apply({r.x_lo, r.y_lo});
    Point q = f.apply({r.x_hi, r.y_hi});
    Rect out;
    if (p.x < q.x) {
        out.x_lo = std::move(p.x);
        out.x_hi = std::move(q.x);
    } else {
        out.x_lo = std::move(q.x);
        out.x_hi = std::move(p.x);
    }
    if (p.y < q.y) {
        out.y_lo = std::move(p.y);
        out.y_hi = std::move(q.y);
    } else {
        out.y_lo = std::move(q.y);
        out.y_hi = std::move(p.y);
    }
    return out;
}

Grid::Grid(int d) : D(d) {
    if (d <= 0) throw std::invalid_argument("grid size must be positive");
}

Rect Grid::square(int i, int j) const {
    if (i < 0 || j < 0 || i >= D || j >= D) throw std::out_of_range("grid index out of range");
    return {ExactScalar(i, D), ExactScalar(i + 1, D), ExactScalar(j, D), ExactScalar(j + 1, D)};
}

std::optional<int> Grid::locate(const Point& p) const {
    ExactScalar fx = p.x * D, fy = p.y * D;
    ExactScalar ix = floor(fx), iy = floor(fy);
    if (ix == fx || iy == fy) return std::nullopt;
    if (ix.sign() < 0 || iy.sign() < 0 || ix >= D || iy >= D) return std::nullopt;
    return index(static_cast<int>(ix.small_num()), static_cast<int>(iy.small_num()));
}

std::optional<int> Grid::containing_square(const Rect& r) const {
    ExactScalar ix = floor(r.x_lo * D), iy = floor(r.y_lo * D);
    if (ix.sign() < 0 || iy.sign() < 0 || ix >= D || iy >= D) return std::nullopt;
    int i = static_cast<int>(ix.small_num()), j = static_cast<int>(iy.small_num());
    if (r.x_hi > ExactScalar(i + 1, D) || r.y_hi > ExactScalar(j + 1, D)) return std::nullopt;
    return index(i, j);
}

bool Grid::adjacent(int k1, int k2) const {
    int di = std::abs(col(k1) - col(k2)), dj = std::abs(row(k1) - row(k2));
    return di + dj == 1;
}

Rect grid_square(const Grid& g, int i, int j) { return g.square(i, j); }

ExactScalar RectUnion::area_unchecked() const {
    ExactScalar s = 0;
    for (const auto& r : parts) s += r.area();
    return s;
}

std::optional<std::pair<std::size_t, std::size_t>> find_overlap(const RectUnion& u) {
    std::vector<std::size_t> order(u.parts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u.parts[a].x_lo < u.parts[b].x_lo; });
    for (std::size_t a = 0; a < order.size(); ++a) {
        const Rect& ra = u.parts[order[a]];
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const Rect& rb = u.parts[order[b]];
            if (rb.x_lo >= ra.x_hi) break;
            if (interiors_overlap(ra, rb)) return std::make_pair(order[a], order[b]);
        }
    }
    return std::nullopt;
}

ExactScalar union_area(const RectUnion& u) {
    if (auto hit = find_overlap(u)) {
        std::ostringstream os;
        os << "rect union parts overlap: " << u.parts[hit->first] << " and " << u.parts[hit->second];
        throw std::invalid_argument(os.str());
    }
    return u.area_unchecked();
}

std::vector<Rect> complement_in_unit(const std::vector<Rect>& holes) {
    // vertical slabs between all hole x-coordinates; each hole spans whole slabs
    std::vector<ExactScalar> xs{0, 1};
    for (const auto& h : holes) {
        xs.push_back(h.x_lo);
        xs.push_back(h.x_hi);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<std::vector<std::pair<ExactScalar, ExactScalar>>> covered(xs.size() - 1);
    for (const auto& h : holes) {
        std::size_t a = std::lower_bound(xs.begin(), xs.end(), h.x_lo) - xs.begin();
        std::size_t b = std::lower_bound(xs.begin(), xs.end(), h.x_hi) - xs.begin();
        for (std::size_t i = a; i < b; ++i) covered[i].emplace_back(h.y_lo, h.y_hi);
    }
    std::vector<Rect> out;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        auto& iv = covered[i];
        std::sort(iv.begin(), iv.end());
        ExactScalar y = 0;
        for (const auto& [lo, hi] : iv) {
            if (y < lo) out.push_back({xs[i], xs[i + 1], y, lo});
            y = max(y, hi);
        }
        if (y < 1) out.push_back({xs[i], xs[i + 1], y, 1});
    }
    return out;
}

double log_abs(const ExactScalar& x) {
    if (x.is_zero()) throw std::domain_error("log of zero");
    auto lg = [](const mpz_class& z) {
        long e = 0;
        double d = mpz_get_d_2exp(&e, z.get_mpz_t());
        return std::log(std::fabs(d)) + static_cast<double>(e) * std::log(2.0);
    };
    return lg(x.numerator()) - lg(x.denominator());
}

}  // namespace mixflow
