#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "mixflow/constructions.hpp"
#include "mixflow/vfield.hpp"
#include "oracles.hpp"

using namespace mixflow;

namespace {

SquarePermutation random_perm(int D, std::mt19937_64& rng) {
    return SquarePermutation::from_image(D, oracle::random_permutation(D * D, rng));
}

ConstructionParams params(int D, int M, ExactScalar delta = ExactScalar(1, 8)) {
    ConstructionParams p;
    p.D = D;
    p.M = M;
    p.delta = delta;
    return p;
}

// mass of u in each square of g
std::vector<mpq_class> masses(const RectUnion& u, const Grid& g) {
    std::vector<mpq_class> out(g.size(), 0);
    for (const auto& r : u.parts)
        for (int k = 0; k < g.size(); ++k)
            if (auto c = rect_intersect(r, g.square(k))) out[k] += c->area().to_mpq();
    return out;
}

void expect_divergence_free(const FlowSchedule& s) {
    auto bps = s.breakpoints();
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        auto f = field_at(s, (bps[i] + bps[i + 1]) / 2);
        auto rep = check_divergence_free(f);
        EXPECT_TRUE(rep.ok) << (rep.violations.empty() ? "" : rep.violations.front());
    }
}

}  // namespace

TEST(Params, Validation) {
    EXPECT_NO_THROW(params(2, 4).validate());
    EXPECT_THROW(params(0, 4).validate(), std::invalid_argument);
    EXPECT_THROW(params(2, 3).validate(), std::invalid_argument);
    EXPECT_THROW(params(2, 1).validate(), std::invalid_argument);
    EXPECT_THROW(params(2, 4, ExactScalar(1, 3)).validate(), std::invalid_argument);
    EXPECT_THROW(params(2, 4, 0).validate(), std::invalid_argument);
    EXPECT_EQ(parse_pipeline("mixing"), Pipeline::strong_mixing);
    EXPECT_EQ(pipeline_name(parse_pipeline("ergodic")), "ergodic");
    EXPECT_THROW(parse_pipeline("weak"), std::invalid_argument);
}

TEST(PermutationFlow, IdentityIsOneEmptyGroup) {
    auto s = permutation_flow(SquarePermutation::identity(3));
    ASSERT_EQ(s.groups.size(), 1u);
    EXPECT_TRUE(s.groups[0].stages.empty());
}

TEST(PermutationFlow, RealizesRandomPermutations) {
    std::mt19937_64 rng(11);
    for (int D : {1, 2, 3, 4}) {
        for (int trial = 0; trial < 4; ++trial) {
            auto p = random_perm(D, rng);
            auto s = permutation_flow(p, ExactScalar(1, 4), 1);
            EXPECT_NO_THROW(s.validate());
            EXPECT_EQ(s.start(), ExactScalar(1, 4));
            auto perm = square_translation(time_one_map(s), Grid(D));
            ASSERT_TRUE(perm.has_value());
            EXPECT_EQ(perm->image, p.image);
        }
    }
}

TEST(Cyclic, SingleCycleAndScheduleAgree) {
    std::mt19937_64 rng(5);
    for (auto [D, M] : std::vector<std::pair<int, int>>{{1, 2}, {1, 4}, {2, 4}, {3, 4}, {2, 8}}) {
        auto p = random_perm(D, rng);
        if (M == 2 && !cycle_decompose(lift_to_refinement(p, M)).is_single_cycle()) continue;
        auto c = build_cyclic(p, params(D, M));
        EXPECT_EQ(oracle::count_cycles(c.time_one.image), 1) << D << " " << M;
        EXPECT_EQ(static_cast<int>(c.time_one.image.size()), D * D * M * M);
        auto perm = square_translation(time_one_map(c.schedule), Grid(D * M));
        ASSERT_TRUE(perm.has_value());
        EXPECT_EQ(perm->image, c.time_one.image);
        // without the merges the schedule realizes the lift
        auto base = square_translation(time_one_map(c.base), Grid(D * M));
        ASSERT_TRUE(base.has_value());
        EXPECT_EQ(base->image, lift_to_refinement(p, M).image);
    }
}

TEST(Cyclic, IdentityNeedsTree) {
    auto c = build_cyclic(SquarePermutation::identity(2), params(2, 4));
    EXPECT_EQ(c.tree.edges.size(), 3u);
    EXPECT_EQ(oracle::count_cycles(c.time_one.image), 1);
    // tree merges need a sub-square off the corners
    EXPECT_THROW(build_cyclic(SquarePermutation::identity(2), params(2, 2)), std::invalid_argument);
}

TEST(Cyclic, TimeLayout) {
    auto d = ExactScalar(1, 8);
    auto c = build_cyclic(SquarePermutation::identity(2), params(2, 4, d));
    const auto& g = c.schedule.groups;
    ASSERT_GE(g.size(), 4u);
    EXPECT_EQ(g[0].t_end, d);
    EXPECT_TRUE(g[0].stages.empty());
    EXPECT_TRUE(g[1].stages.empty());
    EXPECT_EQ(g[2].t_begin, 2 * d);
    EXPECT_EQ(g.back().t_end, 1);
    // first merge slot is the tree round
    EXPECT_EQ(g[2].stages.size(), c.tree.pairs().size());
    // all three variants share the group boundaries
    ASSERT_EQ(c.base.groups.size(), g.size());
    ASSERT_EQ(c.square_merged.groups.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(c.base.groups[i].t_begin, g[i].t_begin);
        EXPECT_EQ(c.square_merged.groups[i].t_end, g[i].t_end);
    }
    EXPECT_NO_THROW(c.schedule.validate());
    EXPECT_NO_THROW(c.square_merged.validate());
}

TEST(Cyclic, DivergenceFree) {
    std::mt19937_64 rng(3);
    auto c = build_cyclic(random_perm(2, rng), params(2, 4));
    expect_divergence_free(c.schedule);
}

TEST(Cyclic, TreeDistanceScalesAsCube) {
    auto id = SquarePermutation::identity(2);
    auto d4 = cyclic_distances(build_cyclic(id, params(2, 4)));
    auto d8 = cyclic_distances(build_cyclic(id, params(2, 8)));
    EXPECT_GT(d4.tree.sign(), 0);
    EXPECT_EQ(d4.tree / d8.tree, 8);
    EXPECT_GT(d4.square.sign(), 0);
    EXPECT_LT(d8.square, d4.square);
}

TEST(Ergodic, ReturnMapIsBaker) {
    std::mt19937_64 rng(9);
    auto c = build_cyclic(random_perm(2, rng), params(2, 4));
    auto s = build_ergodic(c);
    EXPECT_NO_THROW(s.validate());
    auto T = time_one_map(s);
    const int n = static_cast<int>(c.time_one.image.size());
    Rect k0 = Grid(8).square(0);
    for (int trial = 0; trial < 20; ++trial) {
        Point x{oracle::random_unit(rng, 7919) / 8, oracle::random_unit(rng, 7907) / 8};
        Point y = x;
        for (int i = 0; i < n; ++i) y = T.apply(y);
        auto [bx, by] = oracle::baker_unit(oracle::q(x.x * 8), oracle::q(x.y * 8));
        EXPECT_EQ(oracle::q(y.x * 8), bx);
        EXPECT_EQ(oracle::q(y.y * 8), by);
        EXPECT_TRUE(k0.contains_closed(y));
    }
    expect_divergence_free(s);
}

TEST(Ergodic, RejectsNonCyclic) {
    CyclicConstruction c;
    c.params = params(1, 2);
    c.time_one = SquarePermutation::identity(2);
    EXPECT_THROW(build_ergodic(c), std::invalid_argument);
}

TEST(StrongMixing, OneStepMassMatchesChain) {
    auto c = build_cyclic(SquarePermutation::identity(1), params(1, 4));
    auto s = build_strong_mixing(c);
    EXPECT_NO_THROW(s.validate());
    auto T = time_one_map(s);
    T.validate_tiling();
    const int G = 4, n = 16;
    Grid g(G);
    auto order = snake_order(G);
    std::vector<int> pos(n);
    for (int l = 0; l < n; ++l) pos[order[l]] = l;
    // naive chain: half to each of the even pair, then each of the odd pair, then the cyclic map
    for (int l0 = 0; l0 < n; ++l0) {
        std::vector<mpq_class> v(n, 0), w(n, 0), u(n, 0);
        v[l0] = 1;
        for (int l = 0; l < n; l += 2) w[l] = w[l + 1] = (v[l] + v[l + 1]) / 2;
        for (int l = 1; l < n; l += 2) u[l] = u[(l + 1) % n] = (w[l] + w[(l + 1) % n]) / 2;
        std::vector<mpq_class> expect(n, 0);
        for (int l = 0; l < n; ++l) expect[pos[c.time_one(order[l])]] += u[l];
        auto got = masses(pushforward_set(T, RectUnion::of(g.square(order[l0]))), g);
        for (int l = 0; l < n; ++l) EXPECT_EQ(got[order[l]] * n, expect[l]) << l0 << " " << l;
    }
    expect_divergence_free(s);
}

TEST(StrongMixing, TvScalesInverselyWithDelta) {
    auto id = SquarePermutation::identity(1);
    auto c8 = build_cyclic(id, params(1, 4, ExactScalar(1, 8)));
    auto c16 = build_cyclic(id, params(1, 4, ExactScalar(1, 16)));
    auto tv8 = schedule_tv_sup(c8.schedule, build_strong_mixing(c8));
    auto tv16 = schedule_tv_sup(c16.schedule, build_strong_mixing(c16));
    EXPECT_EQ(tv16 / tv8, 2);
}

TEST(Rectifier, IdentityPieces) {
    Grid g(3);
    std::vector<DiagonalAffine> pieces;
    for (int k = 0; k < 9; ++k) pieces.push_back({g.square(k)});
    auto r = rectify_diagonal_affine(pieces);
    EXPECT_EQ(r.M, 3);
    EXPECT_TRUE(r.permutation.is_identity());
    EXPECT_TRUE(r.composite.is_identity());
}

TEST(Rectifier, QuarterStrips) {
    auto r = rectify_diagonal_affine(fixture::quarter_strips());
    EXPECT_EQ(r.M, 4);
    for (const auto& pc : r.composite.pieces()) EXPECT_TRUE(pc.map.is_translation());
    r.composite.validate_tiling();
    expect_divergence_free(r.schedule);
    // sub-square (0,0) of the first source lands in the first quarter strip
    Point x{ExactScalar(1, 8), ExactScalar(1, 8)};
    auto img = r.composite.apply(x);
    EXPECT_LT(img.x, ExactScalar(1, 4));
}

TEST(Rectifier, TwoTypeTiling) {
    auto pieces = fixture::two_type_tiling();
    auto r = rectify_diagonal_affine(pieces);
    EXPECT_EQ(r.M, 36);
    EXPECT_EQ(r.permutation.grid.D, 36);
    for (const auto& pc : r.composite.pieces()) EXPECT_TRUE(pc.map.is_translation());
    // oracle: every point goes where the composite square permutation sends its square
    std::mt19937_64 rng(21);
    Grid g(36);
    for (int trial = 0; trial < 50; ++trial) {
        Point x{oracle::random_unit(rng, 1009), oracle::random_unit(rng, 1013)};
        int k = *g.locate(x);
        Point y = r.composite.apply(x);
        Rect from = g.square(k), to = g.square(r.permutation(k));
        EXPECT_EQ(y.x - to.x_lo, x.x - from.x_lo);
        EXPECT_EQ(y.y - to.y_lo, x.y - from.y_lo);
    }
    EXPECT_THROW(rectify_diagonal_affine(pieces, 30), std::overflow_error);
}

TEST(Rectifier, RejectsBadTilings) {
    auto pieces = fixture::quarter_strips();
    pieces[2].shift = pieces[0].shift;
    EXPECT_THROW(rectify_diagonal_affine(pieces), std::invalid_argument);
    EXPECT_THROW(rectify_diagonal_affine({}), std::invalid_argument);
}

TEST(Pipeline, IdentityReport) {
    auto p = SquarePermutation::identity(2);
    for (auto kind : {Pipeline::cyclic, Pipeline::ergodic, Pipeline::strong_mixing}) {
        auto pr = params(2, 4);
        pr.pipeline = kind;
        auto r = full_pipeline(p, pr, 1);
        EXPECT_EQ(r.cycle_length, 64);
        EXPECT_EQ(r.time_shift, 0);
        EXPECT_EQ(r.total, r.time_shift + r.square_merges + r.tree_merges + r.perturbation);
        EXPECT_EQ(r.perturbation.sign() == 0, kind == Pipeline::cyclic);
        EXPECT_TRUE(r.grid_heuristic_ok);  // 8 * 1 * 1/8 = 1
    }
}

TEST(Pipeline, BudgetAndHeuristic) {
    std::mt19937_64 rng(2);
    auto p = random_perm(2, rng);
    auto r = full_pipeline(p, params(2, 8), ExactScalar(1, 2));
    EXPECT_GT(r.time_shift.sign(), 0);
    EXPECT_TRUE(r.grid_heuristic_ok);  // 16 * 1/2 * 1/8 = 1
    auto quarter = r.epsilon / 4;
    EXPECT_EQ(r.within_budget, r.time_shift <= quarter && r.square_merges <= quarter && r.tree_merges <= quarter &&
                                   r.perturbation <= quarter);
    EXPECT_THROW(full_pipeline(p, params(2, 8), 0), std::invalid_argument);
}
