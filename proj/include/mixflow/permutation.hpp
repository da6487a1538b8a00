#pragma once

#include <utility>
#include <vector>

#include "mixflow/exact.hpp"

namespace mixflow {

// time-1 map translating square k rigidly onto square image[k]
struct SquarePermutation {
    Grid grid{1};
    std::vector<int> image;

    static SquarePermutation identity(int D);
    static SquarePermutation from_image(int D, std::vector<int> image);

    int operator()(int k) const { return image[k]; }
    SquarePermutation inverse() const;
    // (*this) after `first`
    SquarePermutation after(const SquarePermutation& first) const;
    bool is_identity() const;
    friend bool operator==(const SquarePermutation&, const SquarePermutation&) = default;
};

struct CycleDecomposition {
    std::vector<std::vector<int>> cycles;

    std::size_t count() const { return cycles.size(); }
    bool is_single_cycle() const { return cycles.size() == 1; }
};

CycleDecomposition cycle_decompose(const SquarePermutation& p);
SquarePermutation from_cycles(int D, const CycleDecomposition& c);

SquarePermutation lift_to_refinement(const SquarePermutation& p, int M);

using SwapPair = std::pair<int, int>;
using SwapRound = std::vector<SwapPair>;

// result(x) = p(swap(x)): the swaps act first
SquarePermutation apply_transpositions(const SquarePermutation& p, const std::vector<SwapPair>& pairs);

struct WithinSquareMerge {
    SquarePermutation result;
    std::vector<SwapRound> rounds;  // in application order
};

// kappa indexes the coarse grid Grid(D) with D = p_lifted.grid.D / M
WithinSquareMerge merge_within_square(const SquarePermutation& p_lifted, int kappa, int M);
// pairing rounds inside one coarse square, without touching a permutation
std::vector<SwapRound> within_square_rounds(const Grid& refined, int kappa, int M);

struct MergeEdge {
    int parent = 0;  // cycle indices into the decomposition
    int child = 0;
    int square_parent = 0;  // coarse squares
    int square_child = 0;
    int a = 0;  // refined sub-squares
    int a_prime = 0;
};

struct MergeTree {
    int node_count = 0;
    std::vector<int> depth;
    std::vector<int> parent;  // -1 at the root
    std::vector<std::vector<int>> layers;
    std::vector<MergeEdge> edges;

    std::vector<SwapPair> pairs() const;
};

MergeTree build_merge_tree(const CycleDecomposition& c, const Grid& refined_grid);

bool is_corner_subsquare(const Grid& refined, int M, int a);

// closed boustrophedon: consecutive entries (cyclically) are adjacent squares; G even or 1
std::vector<int> snake_order(int G);
std::vector<int> snake_positions(int G);  // inverse of snake_order

}  // namespace mixflow
