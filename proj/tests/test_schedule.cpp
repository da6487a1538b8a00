#include <gtest/gtest.h>

#include <random>

#include "mixflow/schedule.hpp"
#include "oracles.hpp"

using namespace mixflow;

namespace {

const ExactScalar h(1, 2);

Point random_point(std::mt19937_64& rng, long long den = 101) {
    return {oracle::random_unit(rng, den), oracle::random_unit(rng, den)};
}

FlowSchedule swap_then_spin() {
    Grid g(2);
    FlowSchedule s;
    s.groups.push_back({0, h, {TranspositionStage{g.square(0), g.square(1), 0, h}}});
    s.groups.push_back({h, 1, {RotationStage{g.square(3), 1, h, 1}, BakerStage{g.square(2), false, h, ExactScalar(3, 4)}}});
    return s;
}

// cyclic shift of Grid(2) squares 0 -> 1 -> 3 -> 2 -> 0 as three transpositions
FlowSchedule grid2_cycle(const ExactScalar& t0, const ExactScalar& t1) {
    Grid g(2);
    ExactScalar dt = (t1 - t0) / 3;
    FlowSchedule s;
    s.groups.push_back({t0, t0 + dt, {TranspositionStage{g.square(2), g.square(0), t0, t0 + dt}}});
    s.groups.push_back({t0 + dt, t0 + 2 * dt, {TranspositionStage{g.square(2), g.square(3), t0 + dt, t0 + 2 * dt}}});
    s.groups.push_back({t0 + 2 * dt, t1, {TranspositionStage{g.square(3), g.square(1), t0 + 2 * dt, t1}}});
    return s;
}

}  // namespace

TEST(Schedule, ValidationCatchesBadLayouts) {
    Grid g(2);
    FlowSchedule gap;
    gap.groups.push_back({0, h, {}});
    gap.groups.push_back({ExactScalar(3, 4), 1, {}});
    EXPECT_THROW(gap.validate(), std::invalid_argument);
    FlowSchedule overlap;
    overlap.groups.push_back({0, 1, {RotationStage{g.square(0), 1, 0, 1}, RotationStage{{0, 1, 0, h}, 1, 0, 1}}});
    EXPECT_THROW(overlap.validate(), std::invalid_argument);
    FlowSchedule outside;
    outside.groups.push_back({0, h, {RotationStage{g.square(0), 1, 0, 1}}});
    EXPECT_THROW(outside.validate(), std::invalid_argument);
    EXPECT_NO_THROW(swap_then_spin().validate());
}

TEST(Schedule, EvalFlowExamples) {
    std::mt19937_64 rng(1);
    auto s = swap_then_spin();
    for (int it = 0; it < 50; ++it) {
        Point x = random_point(rng);
        EXPECT_EQ(eval_flow(s, 0, x), x);
        EXPECT_EQ(eval_flow(FlowSchedule::identity(), oracle::random_unit(rng, 9), x), x);
    }
    Grid g(2);
    EXPECT_EQ(eval_flow(s, h, g.square(0).center()), g.square(1).center());
    EXPECT_EQ(eval_flow(s, 1, g.square(1).center()), g.square(0).center());
}

TEST(Schedule, EvalFlowReportsUndefinedSet) {
    auto s = swap_then_spin();
    // shared edge of the two Baker halves at the moment they counter-rotate
    Grid g(2);
    Rect k2 = g.square(2);
    Point on_fold{k2.x_lo + ExactScalar(1, 8), (k2.y_lo + k2.y_hi) / 2};
    EXPECT_THROW(eval_flow(s, ExactScalar(3, 4), eval_flow_inverse(s, ExactScalar(5, 8), on_fold)), UndefinedSetHit);
}

TEST(Schedule, EvalAtOneMatchesTimeOneMap) {
    std::mt19937_64 rng(2);
    auto s = swap_then_spin();
    auto T = time_one_map(s);
    T.validate_tiling();
    for (int it = 0; it < 400; ++it) {
        Point x = random_point(rng);
        ASSERT_EQ(eval_flow(s, 1, x), T.apply(x));
        ExactScalar t = oracle::random_unit(rng, 17);
        ASSERT_EQ(eval_flow_inverse(s, t, eval_flow(s, t, x)), x);
    }
}

TEST(Schedule, PureQuarterTurnIsOnePiece) {
    FlowSchedule s{{StageGroup{0, 1, {RotationStage{Rect::unit(), 1, 0, 1}}}}};
    auto T = time_one_map(s);
    ASSERT_EQ(T.size(), 1u);
    EXPECT_EQ(T.pieces()[0].map.L, (Mat2{0, -1, 1, 0}));
}

TEST(Schedule, IdentityPrefixKeepsTimeOneMap) {
    std::mt19937_64 rng(3);
    auto body = rescale(swap_then_spin(), ExactScalar(1, 4), 1);
    auto full = compose_schedules(FlowSchedule::identity(0, ExactScalar(1, 4)), body);
    auto a = time_one_map(swap_then_spin()), b = time_one_map(full);
    for (int it = 0; it < 200; ++it) {
        Point x = random_point(rng);
        ASSERT_EQ(a.apply(x), b.apply(x));
    }
    EXPECT_THROW(compose_schedules(FlowSchedule::identity(0, h), body), std::invalid_argument);
}

TEST(Schedule, SwapPrefixThenCycleIsPermutationAfterSwap) {
    Grid g(2);
    FlowSchedule prefix{{StageGroup{0, ExactScalar(1, 8), {TranspositionStage{g.square(0), g.square(1), 0, ExactScalar(1, 8)}}}}};
    auto suffix = grid2_cycle(ExactScalar(1, 8), 1);
    auto full = compose_schedules(prefix, suffix);
    auto perm = square_translation(time_one_map(suffix), g);
    ASSERT_TRUE(perm);
    EXPECT_TRUE(cycle_decompose(*perm).is_single_cycle());
    auto got = square_translation(time_one_map(full), g);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, apply_transpositions(*perm, {{0, 1}}));
}

TEST(Schedule, ReverseUndoesTheFlow) {
    std::mt19937_64 rng(4);
    auto s = swap_then_spin();
    auto back = rescale(reverse_schedule(s), 1, 2);
    auto there = time_one_map(s), undo = time_one_map(rescale(reverse_schedule(s), 0, 1));
    EXPECT_TRUE(there.then(undo).is_identity());
    // trajectories are retraced: X_rev(t) = X(1 - t) o X(1)^-1
    for (int it = 0; it < 100; ++it) {
        Point x = random_point(rng);
        ExactScalar t = oracle::random_unit(rng, 13);
        Point y = there.apply(x);
        ASSERT_EQ(eval_flow(back, 1 + t, y), eval_flow(s, 1 - t, x));
    }
}

TEST(TimeOneMap, InverseAndComposition) {
    std::mt19937_64 rng(5);
    auto T = time_one_map(swap_then_spin());
    auto Ti = T.inverse();
    EXPECT_TRUE(T.then(Ti).is_identity());
    EXPECT_TRUE(Ti.then(T).is_identity());
    auto T2 = T.then(T);
    for (int it = 0; it < 200; ++it) {
        Point x = random_point(rng, 211);
        ASSERT_EQ(Ti.apply(T.apply(x)), x);
        ASSERT_EQ(T2.apply(x), T.apply(T.apply(x)));
    }
}

TEST(TimeOneMap, DiscontinuityIsReported) {
    FlowSchedule s{{StageGroup{0, 1, {BakerStage{Rect::unit(), false, 0, 1}}}}};
    auto T = time_one_map(s);
    EXPECT_THROW(T.apply({h, ExactScalar(1, 3)}), UndefinedSetHit);
    EXPECT_EQ(T.apply({ExactScalar(1, 4), 0}), (Point{h, h}));
}

TEST(Pushforward, Examples) {
    Grid g(2);
    auto cyc = time_one_map(grid2_cycle(0, 1));
    RectUnion u({g.square(0), {h, 1, h, ExactScalar(3, 4)}});
    auto img = pushforward_set(cyc, u);
    EXPECT_EQ(img.size(), u.size());
    EXPECT_EQ(union_area(img), union_area(u));

    FlowSchedule b{{StageGroup{0, 1, {BakerStage{Rect::unit(), false, 0, 1}}}}};
    auto B = time_one_map(b);
    auto split = pushforward_set(B, RectUnion::of({0, 1, 0, h}));
    EXPECT_EQ(split.size(), 2u);
    auto back = pushforward_set(B, RectUnion::of({0, 1, 0, h}), Direction::inverse);
    EXPECT_EQ(back.size(), 1u);
    EXPECT_EQ(back.parts[0], (Rect{0, h, 0, 1}));
}

TEST(Pushforward, PreservesAreaOnRandomDyadicUnions) {
    std::mt19937_64 rng(6);
    auto T = time_one_map(swap_then_spin());
    long before = measure_audit_checks();
    for (int it = 0; it < 200; ++it) {
        Grid g(16);
        auto perm = oracle::random_permutation(g.size(), rng);
        int n = 1 + static_cast<int>(rng() % 40);
        std::vector<Rect> parts;
        for (int i = 0; i < n; ++i) parts.push_back(g.square(perm[i]));
        RectUnion u(parts);
        auto fwd = pushforward_set(T, u);
        auto bwd = pushforward_set(T, u, Direction::inverse);
        ASSERT_EQ(union_area(fwd), union_area(u));
        ASSERT_EQ(union_area(bwd), union_area(u));
    }
    EXPECT_EQ(measure_audit_checks() - before, 400);
    EXPECT_EQ(measure_audit_violations(), 0);
}

TEST(TimeOneMap, RejectsNonPreservingPieces) {
    EXPECT_THROW(TimeOneMap({{Rect::unit(), {Mat2::diag(2, 1), {0, 0}}}}), std::invalid_argument);
    EXPECT_THROW(TimeOneMap({{Rect::unit(), {{1, 1, 0, 1}, {0, 0}}}}), std::invalid_argument);
}

TEST(SquareTranslation, DetectsNonTranslations) {
    FlowSchedule s{{StageGroup{0, 1, {RotationStage{Grid(2).square(0), 1, 0, 1}}}}};
    EXPECT_FALSE(square_translation(time_one_map(s), Grid(2)));
    EXPECT_TRUE(square_translation(time_one_map(FlowSchedule::identity()), Grid(4))->is_identity());
}
