#pragma once

#include <string>
#include <vector>

#include "mixflow/exact.hpp"
#include "mixflow/permutation.hpp"
#include "mixflow/schedule.hpp"

namespace mixflow {

enum class Pipeline { cyclic, ergodic, strong_mixing };

Pipeline parse_pipeline(const std::string& name);
std::string pipeline_name(Pipeline p);

struct ConstructionParams {
    int D = 2;
    int M = 4;
    ExactScalar delta{1, 8};
    Pipeline pipeline = Pipeline::cyclic;

    // D >= 1, M a power of two >= 2, 0 < delta < 1/3
    void validate() const;
};

// flow realizing a permutation of Grid(D) squares by adjacent swaps, on [t0,t1]
FlowSchedule permutation_flow(const SquarePermutation& p, const ExactScalar& t0 = 0, const ExactScalar& t1 = 1);

// Time layout on [0,1]:
//   [0,d] and [d,2d]  free (Baker steps of the mixing pipelines go here)
//   [2d,3d]           merges: tree round, then within-square rounds last to first
//   [3d,1]            base flow of p
struct CyclicConstruction {
    ConstructionParams params;
    FlowSchedule schedule;
    FlowSchedule base;        // same layout, merges removed
    FlowSchedule square_merged;  // base plus within-square merges
    SquarePermutation time_one{Grid(1), {0}};  // on Grid(DM)
    MergeTree tree;
};

CyclicConstruction build_cyclic(const SquarePermutation& p, const ConstructionParams& params);

struct CyclicDistances {
    ExactScalar square;  // L1L1 base vs square_merged
    ExactScalar tree;   // L1L1 square_merged vs full
};
CyclicDistances cyclic_distances(const CyclicConstruction& c);

// Baker step in the leader square of Grid(DM) on [0,2d]
FlowSchedule build_ergodic(const CyclicConstruction& cyclic);
// Baker steps on snake pairs: even pairs on [0,d], odd pairs on [d,2d]
FlowSchedule build_strong_mixing(const CyclicConstruction& cyclic);

// x -> diag(lambda, 1/lambda) x + shift on a square of Grid(N)
struct DiagonalAffine {
    Rect source;
    ExactScalar lambda = 1;
    Point shift{0, 0};

    Affine2 map() const { return {Mat2::diag(lambda, 1 / lambda), shift}; }
};

struct Rectification {
    int M = 1;
    FlowSchedule schedule;   // runs after the affine map
    TimeOneMap composite;    // schedule after affine map
    SquarePermutation permutation{Grid(1), {0}};
};

Rectification rectify_diagonal_affine(const std::vector<DiagonalAffine>& pieces, int max_M = 4096);

struct PipelineReport {
    FlowSchedule schedule;
    ExactScalar time_shift;   // base on [0,1] vs base frozen on [0,3d]
    ExactScalar square_merges;
    ExactScalar tree_merges;
    ExactScalar perturbation;  // cyclic vs ergodic / mixing
    ExactScalar total;
    ExactScalar epsilon;
    bool within_budget = false;      // every step <= epsilon/4
    bool grid_heuristic_ok = false;  // D M >= 1/(epsilon delta)
    int cycle_length = 0;
};

PipelineReport full_pipeline(const SquarePermutation& p, const ConstructionParams& params,
                             const ExactScalar& epsilon = 1);

}  // namespace mixflow
