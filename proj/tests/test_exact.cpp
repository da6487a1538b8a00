#include <gtest/gtest.h>

#include <random>

#include "mixflow/exact.hpp"
#include "oracles.hpp"

using namespace mixflow;

TEST(ExactScalar, LowestTermsAndSign) {
    ExactScalar a(6, -4);
    EXPECT_EQ(a.small_num(), -3);
    EXPECT_EQ(a.small_den(), 2);
    EXPECT_EQ(ExactScalar(0, 7).small_den(), 1);
    EXPECT_EQ(ExactScalar::parse("10/4"), ExactScalar(5, 2));
    EXPECT_EQ(ExactScalar::parse("-7"), ExactScalar(-7));
    EXPECT_EQ(ExactScalar(3, 9).str(), "1/3");
    EXPECT_THROW(ExactScalar(1, 0), std::exception);
    EXPECT_THROW(ExactScalar::parse("1/"), std::exception);
    EXPECT_THROW(ExactScalar::parse("x"), std::exception);
}

TEST(ExactScalar, ParseRoundTripsBigValues) {
    ExactScalar big = ExactScalar(1LL << 62) * ExactScalar(1LL << 62) / ExactScalar(3);
    EXPECT_FALSE(big.is_small());
    EXPECT_EQ(ExactScalar::parse(big.str()), big);
}

TEST(ExactScalar, MatchesGmpOnRandomArithmetic) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<long long> small(-1000, 1000);
    std::uniform_int_distribution<long long> huge(-(1LL << 61), 1LL << 61);
    for (int it = 0; it < 3000; ++it) {
        bool big = it % 3 == 0;
        long long an = big ? huge(rng) : small(rng), ad = big ? std::abs(huge(rng)) + 1 : std::abs(small(rng)) + 1;
        long long bn = big ? huge(rng) : small(rng), bd = big ? std::abs(huge(rng)) + 1 : std::abs(small(rng)) + 1;
        ExactScalar a(an, ad), b(bn, bd);
        mpq_class qa = oracle::q(an, ad), qb = oracle::q(bn, bd);
        ASSERT_EQ(oracle::q(a + b), qa + qb);
        ASSERT_EQ(oracle::q(a - b), qa - qb);
        ASSERT_EQ(oracle::q(a * b), qa * qb);
        if (bn != 0) ASSERT_EQ(oracle::q(a / b), qa / qb);
        ASSERT_EQ(a < b, qa < qb);
        ASSERT_EQ(a == b, qa == qb);
        // canonical form is unique whichever path produced it
        if (bn != 0) ASSERT_EQ((a * b) / b, a);
    }
}

TEST(ExactScalar, ChainedProductsStayExact) {
    ExactScalar x(1);
    mpq_class r(1);
    for (int k = 1; k <= 60; ++k) {
        x *= ExactScalar(2 * k + 1, 3 * k + 2);
        r *= oracle::q(2 * k + 1, 3 * k + 2);
    }
    EXPECT_EQ(oracle::q(x), r);
    for (int k = 60; k >= 1; --k) x /= ExactScalar(2 * k + 1, 3 * k + 2);
    EXPECT_EQ(x, ExactScalar(1));
    EXPECT_TRUE(x.is_small());
}

TEST(ExactScalar, FloorAndSqrt) {
    EXPECT_EQ(floor(ExactScalar(-1, 2)), ExactScalar(-1));
    EXPECT_EQ(floor(ExactScalar(7, 2)), ExactScalar(3));
    EXPECT_EQ(floor(ExactScalar(4)), ExactScalar(4));
    EXPECT_EQ(*exact_sqrt(ExactScalar(9, 49)), ExactScalar(3, 7));
    EXPECT_FALSE(exact_sqrt(ExactScalar(2)).has_value());
    EXPECT_FALSE(exact_sqrt(ExactScalar(-1)).has_value());
}

TEST(Rect, IntersectExamples) {
    auto r = rect_intersect({0, ExactScalar(1, 2), 0, 1}, {ExactScalar(1, 4), ExactScalar(3, 4), 0, 1});
    ASSERT_TRUE(r);
    EXPECT_EQ(*r, (Rect{ExactScalar(1, 4), ExactScalar(1, 2), 0, 1}));
    EXPECT_FALSE(rect_intersect({0, ExactScalar(1, 2), 0, ExactScalar(1, 2)}, {ExactScalar(1, 2), 1, ExactScalar(1, 2), 1}));
    Grid g(4);
    auto s = rect_intersect(g.square(0, 0), {ExactScalar(1, 8), 1, ExactScalar(1, 8), 1});
    ASSERT_TRUE(s);
    EXPECT_EQ(*s, (Rect{ExactScalar(1, 8), ExactScalar(1, 4), ExactScalar(1, 8), ExactScalar(1, 4)}));
}

TEST(Rect, IntersectIsCommutativeAndIdempotent) {
    std::mt19937_64 rng(5);
    auto rnd = [&] {
        ExactScalar a = oracle::random_unit(rng, 16), b = oracle::random_unit(rng, 16);
        ExactScalar c = oracle::random_unit(rng, 12), d = oracle::random_unit(rng, 12);
        if (a == b) b = a + ExactScalar(1, 64);
        if (c == d) d = c + ExactScalar(1, 64);
        return Rect{min(a, b), max(a, b), min(c, d), max(c, d)};
    };
    for (int it = 0; it < 500; ++it) {
        Rect a = rnd(), b = rnd();
        auto ab = rect_intersect(a, b), ba = rect_intersect(b, a);
        ASSERT_EQ(ab.has_value(), ba.has_value());
        if (ab) {
            ASSERT_EQ(*ab, *ba);
            ASSERT_EQ(*rect_intersect(*ab, *ab), *ab);
            ASSERT_EQ(*rect_intersect(*ab, a), *ab);
        }
        ASSERT_EQ(*rect_intersect(a, a), a);
    }
}

TEST(RectUnion, AreaExamples) {
    ExactScalar h(1, 2);
    EXPECT_EQ(union_area(RectUnion({{0, h, 0, 1}})), h);
    EXPECT_EQ(union_area(RectUnion({{0, h, 0, h}, {h, 1, h, 1}})), h);
    for (int D : {1, 2, 3, 5, 8}) {
        Grid g(D);
        std::vector<Rect> all;
        for (int k = 0; k < g.size(); ++k) all.push_back(g.square(k));
        EXPECT_EQ(union_area(RectUnion(all)), ExactScalar(1));
    }
    EXPECT_THROW(union_area(RectUnion({{0, h, 0, 1}, {ExactScalar(1, 4), 1, 0, 1}})), std::invalid_argument);
}

TEST(RectUnion, GridSubsetAreaIsCountOverDSquared) {
    std::mt19937_64 rng(3);
    for (int D : {2, 4, 6, 12}) {
        Grid g(D);
        auto perm = oracle::random_permutation(g.size(), rng);
        int count = 1 + static_cast<int>(rng() % g.size());
        std::vector<Rect> parts;
        for (int i = 0; i < count; ++i) parts.push_back(g.square(perm[i]));
        EXPECT_EQ(union_area(RectUnion(parts)), ExactScalar(count, D * D));
    }
}

TEST(Grid, SquareExamples) {
    ExactScalar h(1, 2);
    EXPECT_EQ(grid_square(Grid(2), 0, 0), (Rect{0, h, 0, h}));
    EXPECT_EQ(grid_square(Grid(2), 1, 1), (Rect{h, 1, h, 1}));
    EXPECT_EQ(grid_square(Grid(4), 2, 0), (Rect{h, ExactScalar(3, 4), 0, ExactScalar(1, 4)}));
    EXPECT_THROW(grid_square(Grid(2), 2, 0), std::out_of_range);
    EXPECT_THROW(grid_square(Grid(2), 0, -1), std::out_of_range);
    EXPECT_THROW(Grid(0), std::invalid_argument);
}

TEST(Grid, LocateAndContainment) {
    Grid g(4);
    EXPECT_EQ(g.locate({ExactScalar(3, 8), ExactScalar(5, 8)}), g.index(1, 2));
    EXPECT_FALSE(g.locate({ExactScalar(1, 4), ExactScalar(5, 8)}));
    EXPECT_EQ(g.containing_square({ExactScalar(1, 4), ExactScalar(3, 8), 0, ExactScalar(1, 8)}), g.index(1, 0));
    EXPECT_FALSE(g.containing_square({ExactScalar(1, 8), ExactScalar(3, 8), 0, ExactScalar(1, 8)}));
    EXPECT_TRUE(g.adjacent(0, 1));
    EXPECT_TRUE(g.adjacent(0, 4));
    EXPECT_FALSE(g.adjacent(3, 4));
    EXPECT_FALSE(g.adjacent(0, 5));
}

TEST(Geometry, ComplementTilesTheRest) {
    std::vector<Rect> holes{{0, ExactScalar(1, 4), 0, ExactScalar(1, 2)},
                            {ExactScalar(1, 2), ExactScalar(3, 4), ExactScalar(1, 3), ExactScalar(2, 3)}};
    auto rest = complement_in_unit(holes);
    std::vector<Rect> all = rest;
    all.insert(all.end(), holes.begin(), holes.end());
    EXPECT_EQ(union_area(RectUnion(all)), ExactScalar(1));
}

TEST(Geometry, AffineImageOfMonomialMaps) {
    Affine2 swap_axes{{0, 1, 1, 0}, {0, 0}};
    Rect r{ExactScalar(1, 4), ExactScalar(1, 2), 0, ExactScalar(1, 8)};
    EXPECT_EQ(affine_image(swap_axes, r), (Rect{0, ExactScalar(1, 8), ExactScalar(1, 4), ExactScalar(1, 2)}));
    Affine2 flip{{-1, 0, 0, 1}, {1, 0}};
    EXPECT_EQ(affine_image(flip, r), (Rect{ExactScalar(1, 2), ExactScalar(3, 4), 0, ExactScalar(1, 8)}));
    Affine2 shear{{1, 1, 0, 1}, {0, 0}};
    EXPECT_THROW(affine_image(shear, r), std::domain_error);
}

TEST(Affine2, InverseAndComposition) {
    Affine2 f{{0, -2, ExactScalar(1, 2), 0}, {1, ExactScalar(1, 3)}};
    Point p{ExactScalar(2, 7), ExactScalar(5, 11)};
    EXPECT_EQ(f.inverse().apply(f.apply(p)), p);
    Affine2 g{{-1, 0, 0, 1}, {ExactScalar(1, 2), 0}};
    EXPECT_EQ(g.after(f).apply(p), g.apply(f.apply(p)));
    EXPECT_TRUE(f.L.is_monomial());
    EXPECT_EQ(f.L.det(), ExactScalar(1));
}
