#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <string>

#include "mixflow/permutation.hpp"
#include "oracles.hpp"

using namespace mixflow;

namespace {

SquarePermutation snake_rotation(int G) {
    auto order = snake_order(G);
    std::vector<int> image(order.size());
    for (std::size_t l = 0; l < order.size(); ++l) image[order[l]] = order[(l + 1) % order.size()];
    return SquarePermutation::from_image(G, image);
}

// full merge: lift, merge each cycle inside its leader square, then along the tree
SquarePermutation merge_everything(const SquarePermutation& p, int M) {
    auto dec = cycle_decompose(p);
    SquarePermutation q = lift_to_refinement(p, M);
    for (const auto& cyc : dec.cycles) q = merge_within_square(q, cyc.front(), M).result;
    auto tree = build_merge_tree(dec, Grid(p.grid.D * M));
    return apply_transpositions(q, tree.pairs());
}

// cycles from a letter picture, top row first
CycleDecomposition cycles_from_picture(const std::vector<std::string>& rows) {
    const int D = static_cast<int>(rows.size());
    std::map<char, std::vector<int>> by_letter;
    for (int r = 0; r < D; ++r)
        for (int i = 0; i < D; ++i) by_letter[rows[r][i]].push_back((D - 1 - r) * D + i);
    CycleDecomposition c;
    for (auto& [ch, ks] : by_letter) c.cycles.push_back(ks);
    return c;
}

}  // namespace

TEST(CycleDecompose, Examples) {
    auto id = cycle_decompose(SquarePermutation::identity(2));
    EXPECT_EQ(id.count(), 4u);
    auto two = cycle_decompose(SquarePermutation::from_image(2, {1, 0, 3, 2}));
    ASSERT_EQ(two.count(), 2u);
    EXPECT_EQ(two.cycles[0], (std::vector<int>{0, 1}));
    EXPECT_EQ(two.cycles[1], (std::vector<int>{2, 3}));
    auto rot = snake_rotation(2);
    EXPECT_TRUE(cycle_decompose(rot).is_single_cycle());
    SquarePermutation it = rot;
    for (int k = 1; k < 4; ++k) it = rot.after(it);
    EXPECT_TRUE(it.is_identity());
}

TEST(CycleDecompose, CanonicalFormAndReconstruction) {
    std::mt19937_64 rng(17);
    for (int D : {1, 2, 3, 4, 7}) {
        for (int rep = 0; rep < 20; ++rep) {
            auto p = SquarePermutation::from_image(D, oracle::random_permutation(D * D, rng));
            auto c = cycle_decompose(p);
            EXPECT_EQ(static_cast<int>(c.count()), oracle::count_cycles(p.image));
            for (std::size_t i = 0; i < c.count(); ++i) {
                EXPECT_EQ(c.cycles[i].front(), *std::min_element(c.cycles[i].begin(), c.cycles[i].end()));
                if (i) EXPECT_LT(c.cycles[i - 1].front(), c.cycles[i].front());
            }
            EXPECT_EQ(from_cycles(D, c), p);
        }
    }
}

TEST(Permutation, RejectsNonBijections) {
    EXPECT_THROW(SquarePermutation::from_image(2, {0, 0, 1, 2}), std::invalid_argument);
    EXPECT_THROW(SquarePermutation::from_image(2, {0, 1, 2}), std::invalid_argument);
}

TEST(Lift, Examples) {
    EXPECT_TRUE(lift_to_refinement(SquarePermutation::identity(2), 2).is_identity());
    auto lifted = lift_to_refinement(snake_rotation(2), 2);
    auto lens = oracle::cycle_lengths(lifted.image);
    EXPECT_EQ(lens, (std::vector<int>{4, 4, 4, 4}));
    EXPECT_THROW(lift_to_refinement(SquarePermutation::identity(2), 0), std::invalid_argument);
}

TEST(Lift, CycleCountScalesByMSquared) {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 30; ++rep) {
        auto p = SquarePermutation::from_image(4, oracle::random_permutation(16, rng));
        for (int M : {2, 3}) {
            auto lifted = lift_to_refinement(p, M);
            EXPECT_EQ(oracle::count_cycles(lifted.image), oracle::count_cycles(p.image) * M * M);
        }
    }
}

TEST(Lift, PreservesOffsetsInsideSquares) {
    std::mt19937_64 rng(29);
    auto p = SquarePermutation::from_image(3, oracle::random_permutation(9, rng));
    const int M = 4;
    auto lifted = lift_to_refinement(p, M);
    Grid fine(12), coarse(3);
    for (int s = 0; s < fine.size(); ++s) {
        int kappa = coarse.index(fine.col(s) / M, fine.row(s) / M);
        int t = lifted(s);
        EXPECT_EQ(coarse.index(fine.col(t) / M, fine.row(t) / M), p(kappa));
        EXPECT_EQ(fine.col(t) % M, fine.col(s) % M);
        EXPECT_EQ(fine.row(t) % M, fine.row(s) % M);
        // translation semantics: the rect moves rigidly
        Rect from = fine.square(s), to = fine.square(t);
        Rect kf = coarse.square(kappa), kt = coarse.square(p(kappa));
        EXPECT_EQ(to.x_lo - kt.x_lo, from.x_lo - kf.x_lo);
        EXPECT_EQ(to.y_lo - kt.y_lo, from.y_lo - kf.y_lo);
    }
}

TEST(ApplyTranspositions, Examples) {
    auto p = apply_transpositions(SquarePermutation::identity(2), {{0, 1}});
    EXPECT_EQ(p.image, (std::vector<int>{1, 0, 2, 3}));
    auto q = apply_transpositions(SquarePermutation::from_image(2, {1, 0, 3, 2}), {{1, 2}});
    EXPECT_TRUE(cycle_decompose(q).is_single_cycle());
    // swap first: q(x) = p(swap(x))
    EXPECT_EQ(q.image, (std::vector<int>{1, 3, 0, 2}));
    EXPECT_THROW(apply_transpositions(SquarePermutation::identity(2), {{0, 1}, {1, 2}}), std::invalid_argument);
}

TEST(ApplyTranspositions, SharedSwapJoinsTwoCycles) {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        auto p = SquarePermutation::from_image(4, oracle::random_permutation(16, rng));
        auto c = cycle_decompose(p);
        if (c.count() < 2) continue;
        int a = c.cycles[0][rng() % c.cycles[0].size()], b = c.cycles[1][rng() % c.cycles[1].size()];
        auto q = apply_transpositions(p, {{a, b}});
        EXPECT_EQ(oracle::count_cycles(q.image), static_cast<int>(c.count()) - 1);
    }
}

TEST(MergeWithinSquare, FixedSquareBecomesFourCycle) {
    auto lifted = lift_to_refinement(SquarePermutation::identity(1), 2);
    auto m = merge_within_square(lifted, 0, 2);
    EXPECT_EQ(oracle::cycle_lengths(m.result.image), (std::vector<int>{4}));
    EXPECT_EQ(m.rounds.size(), 2u);
}

TEST(MergeWithinSquare, FourCycleOnGrid2WithM2) {
    auto lifted = lift_to_refinement(snake_rotation(2), 2);
    auto m = merge_within_square(lifted, 0, 2);
    EXPECT_EQ(oracle::cycle_lengths(m.result.image), (std::vector<int>{16}));
}

TEST(MergeWithinSquare, RoundByRoundHalving) {
    for (int D : {1, 2, 4}) {
        for (int M : {2, 4, 8}) {
            auto base = snake_rotation(D);
            const int k = D * D;
            auto q = lift_to_refinement(base, M);
            auto rounds = within_square_rounds(q.grid, 0, M);
            int log2M2 = 0;
            while ((1 << log2M2) < M * M) ++log2M2;
            ASSERT_EQ(static_cast<int>(rounds.size()), log2M2);
            for (int i = 1; i <= log2M2; ++i) {
                q = apply_transpositions(q, rounds[i - 1]);
                auto lens = oracle::cycle_lengths(q.image);
                EXPECT_EQ(static_cast<int>(lens.size()), M * M >> i) << "D=" << D << " M=" << M << " round " << i;
                for (int len : lens) EXPECT_EQ(len, (1 << i) * k);
            }
        }
    }
}

TEST(MergeWithinSquare, RoundsPairAdjacentSquaresAlternatingDirection) {
    Grid fine(8);
    auto rounds = within_square_rounds(fine, 0, 8);
    for (std::size_t r = 0; r < rounds.size(); ++r)
        for (auto [a, b] : rounds[r]) {
            EXPECT_TRUE(fine.adjacent(a, b));
            bool horizontal = fine.row(a) == fine.row(b);
            EXPECT_EQ(horizontal, r % 2 == 0);
        }
}

TEST(MergeWithinSquare, Errors) {
    auto lifted = lift_to_refinement(SquarePermutation::identity(2), 4);
    EXPECT_THROW(merge_within_square(lifted, 0, 3), std::invalid_argument);
    // two sub-squares of kappa on one cycle
    auto bad = apply_transpositions(lifted, {{0, 1}});
    EXPECT_THROW(merge_within_square(bad, 0, 4), std::invalid_argument);
}

TEST(MergeTree, SingleCycleHasNoEdges) {
    auto t = build_merge_tree(cycle_decompose(snake_rotation(2)), Grid(8));
    EXPECT_EQ(t.node_count, 1);
    EXPECT_TRUE(t.edges.empty());
}

TEST(MergeTree, TwoAdjacentTwoCycles) {
    auto p = SquarePermutation::from_image(2, {1, 0, 3, 2});
    auto t = build_merge_tree(cycle_decompose(p), Grid(8));
    ASSERT_EQ(t.edges.size(), 1u);
    auto lens = oracle::cycle_lengths(merge_everything(p, 4).image);
    EXPECT_EQ(lens, (std::vector<int>{64}));
    // two merged 32-cycles joined by the single tree swap
    EXPECT_THROW(build_merge_tree(cycle_decompose(p), Grid(4)), std::invalid_argument);
}

TEST(MergeTree, RemarkLayout) {
    std::vector<std::string> pic{"YYCCCCCT", "YYYCCCAA", "YYYNCAAA", "YYRMCAAA",
                                 "RRRMCAAA", "RRMMCABS", "RRMMCBBB", "GGGGGBBB"};
    auto c = cycles_from_picture(pic);
    ASSERT_EQ(c.count(), 10u);
    std::multiset<std::size_t> sizes;
    for (auto& cyc : c.cycles) sizes.insert(cyc.size());
    EXPECT_EQ(sizes, (std::multiset<std::size_t>{1, 1, 1, 5, 6, 7, 8, 10, 12, 13}));
    auto t = build_merge_tree(c, Grid(32));
    ASSERT_EQ(t.layers.size(), 3u);
    EXPECT_EQ(t.layers[0].size(), 1u);
    EXPECT_EQ(t.layers[1].size(), 4u);
    EXPECT_EQ(t.layers[2].size(), 5u);
    EXPECT_EQ(t.edges.size(), 9u);
    // root is the cycle holding square 0
    const auto& root = c.cycles[t.layers[0][0]];
    EXPECT_NE(std::find(root.begin(), root.end(), 0), root.end());
}

TEST(MergeTree, PairsAreAdjacentCornerFreeAndDisjoint) {
    std::mt19937_64 rng(37);
    for (int D : {2, 3, 4, 6}) {
        for (int M : {4, 8}) {
            auto p = SquarePermutation::from_image(D, oracle::random_permutation(D * D, rng));
            auto c = cycle_decompose(p);
            Grid fine(D * M);
            auto t = build_merge_tree(c, fine);
            EXPECT_EQ(static_cast<int>(t.edges.size()), t.node_count - 1);
            std::set<int> used;
            for (const auto& e : t.edges) {
                EXPECT_TRUE(share_edge(fine.square(e.a), fine.square(e.a_prime)));
                EXPECT_FALSE(is_corner_subsquare(fine, M, e.a));
                EXPECT_FALSE(is_corner_subsquare(fine, M, e.a_prime));
                EXPECT_TRUE(used.insert(e.a).second);
                EXPECT_TRUE(used.insert(e.a_prime).second);
                EXPECT_EQ(t.depth[e.child], t.depth[e.parent] + 1);
            }
        }
    }
}

TEST(MergeTree, FullMergeGivesOneCycle) {
    std::mt19937_64 rng(41);
    for (int D : {1, 2, 3, 4}) {
        for (int M : {4, 8}) {
            for (int rep = 0; rep < 4; ++rep) {
                auto p = SquarePermutation::from_image(D, oracle::random_permutation(D * D, rng));
                auto lens = oracle::cycle_lengths(merge_everything(p, M).image);
                ASSERT_EQ(lens.size(), 1u) << "D=" << D << " M=" << M;
                EXPECT_EQ(lens[0], D * D * M * M);
            }
        }
    }
}

TEST(Snake, ClosedAndAdjacent) {
    for (int G : {2, 4, 6, 8, 16}) {
        auto order = snake_order(G);
        Grid g(G);
        ASSERT_EQ(static_cast<int>(order.size()), G * G);
        std::set<int> seen(order.begin(), order.end());
        EXPECT_EQ(static_cast<int>(seen.size()), G * G);
        EXPECT_EQ(order[0], 0);
        for (std::size_t l = 0; l < order.size(); ++l) EXPECT_TRUE(g.adjacent(order[l], order[(l + 1) % order.size()]));
        auto pos = snake_positions(G);
        for (std::size_t l = 0; l < order.size(); ++l) EXPECT_EQ(pos[order[l]], static_cast<int>(l));
    }
    EXPECT_EQ(snake_order(1), std::vector<int>{0});
    EXPECT_THROW(snake_order(3), std::invalid_argument);
}
