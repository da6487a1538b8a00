#include "mixflow/constructions.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "mixflow/vfield.hpp"

namespace mixflow {

namespace {

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

// row-wise zigzag; consecutive squares share an edge for every D
std::vector<int> open_path(int D) {
    Grid g(D);
    std::vector<int> out;
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) out.push_back(g.index(j % 2 == 0 ? i : D - 1 - i, j));
    return out;
}

StageGroup swap_group(const Grid& g, const SwapRound& round, const ExactScalar& t0, const ExactScalar& t1) {
    StageGroup grp{t0, t1, {}};
    for (auto [a, b] : round) grp.stages.push_back(TranspositionStage{g.square(a), g.square(b), t0, t1});
    return grp;
}

// groups for consecutive rounds, splitting [t0,t1] evenly
std::vector<StageGroup> swap_groups(const Grid& g, const std::vector<SwapRound>& rounds, const ExactScalar& t0,
                                    const ExactScalar& t1) {
    if (rounds.empty()) return {StageGroup{t0, t1, {}}};
    std::vector<StageGroup> out;
    ExactScalar dt = (t1 - t0) / static_cast<long long>(rounds.size());
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        ExactScalar a = t0 + dt * static_cast<long long>(r);
        ExactScalar b = r + 1 == rounds.size() ? t1 : a + dt;
        out.push_back(rounds[r].empty() ? StageGroup{a, b, {}} : swap_group(g, rounds[r], a, b));
    }
    return out;
}

long long lcm_checked(long long a, long long b, long long cap) {
    long long l = a / std::gcd(a, b) * b;
    if (l > cap || l <= 0) throw std::overflow_error("refinement exceeds the grid-size guard");
    return l;
}

}  // namespace

Pipeline parse_pipeline(const std::string& name) {
    if (name == "cyclic") return Pipeline::cyclic;
    if (name == "ergodic") return Pipeline::ergodic;
    if (name == "mixing" || name == "strong_mixing") return Pipeline::strong_mixing;
    throw std::invalid_argument("unknown pipeline: " + name);
}

std::string pipeline_name(Pipeline p) {
    switch (p) {
        case Pipeline::cyclic: return "cyclic";
        case Pipeline::ergodic: return "ergodic";
        default: return "mixing";
    }
}

void ConstructionParams::validate() const {
    if (D < 1) throw std::invalid_argument("D must be positive");
    if (M < 2 || !is_power_of_two(M)) throw std::invalid_argument("M must be a power of two >= 2");
    if (delta.sign() <= 0 || 3 * delta >= 1) throw std::invalid_argument("delta must lie in (0, 1/3)");
}

FlowSchedule permutation_flow(const SquarePermutation& p, const ExactScalar& t0, const ExactScalar& t1) {
    const int n = p.grid.size();
    auto path = open_path(p.grid.D);
    std::vector<int> pos(n);
    for (int l = 0; l < n; ++l) pos[path[l]] = l;
    // token at path position l must travel to the position of p(path[l])
    std::vector<int> target(n);
    for (int l = 0; l < n; ++l) target[l] = pos[p(path[l])];
    std::vector<SwapRound> rounds;
    for (int r = 0; !std::is_sorted(target.begin(), target.end()); ++r) {
        SwapRound round;
        for (int l = r % 2; l + 1 < n; l += 2)
            if (target[l] > target[l + 1]) {
                std::swap(target[l], target[l + 1]);
                round.emplace_back(path[l], path[l + 1]);
            }
        if (!round.empty()) rounds.push_back(std::move(round));
    }
    FlowSchedule s;
    s.groups = swap_groups(p.grid, rounds, t0, t1);
    return s;
}

CyclicConstruction build_cyclic(const SquarePermutation& p, const ConstructionParams& params) {
    params.validate();
    if (p.grid.D != params.D) throw std::invalid_argument("permutation grid does not match D");
    const int M = params.M;
    const ExactScalar& d = params.delta;
    Grid fine(params.D * M);

    auto dec = cycle_decompose(p);
    std::vector<SwapRound> rounds;
    for (const auto& cyc : dec.cycles) {
        auto r = within_square_rounds(fine, cyc.front(), M);
        if (rounds.empty()) rounds.resize(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) rounds[i].insert(rounds[i].end(), r[i].begin(), r[i].end());
    }

    CyclicConstruction c;
    c.params = params;
    c.tree = build_merge_tree(dec, fine);

    SquarePermutation q = lift_to_refinement(p, M);
    for (const auto& r : rounds) q = apply_transpositions(q, r);
    q = apply_transpositions(q, c.tree.pairs());
    c.time_one = q;

    // tree round acts first in time, the first within-square round last
    std::vector<SwapRound> slots;
    bool has_tree = !c.tree.edges.empty();
    if (has_tree) slots.push_back(c.tree.pairs());
    for (auto it = rounds.rbegin(); it != rounds.rend(); ++it) slots.push_back(*it);
    std::vector<SwapRound> square_slots = slots, empty_slots(slots.size());
    if (has_tree) square_slots.front().clear();

    FlowSchedule base_flow = permutation_flow(p, 3 * d, 1);
    auto assemble = [&](const std::vector<SwapRound>& merge_slots) {
        FlowSchedule s;
        s.groups.push_back({0, d, {}});
        s.groups.push_back({d, 2 * d, {}});
        auto merges = swap_groups(fine, merge_slots, 2 * d, 3 * d);
        s.groups.insert(s.groups.end(), merges.begin(), merges.end());
        s.groups.insert(s.groups.end(), base_flow.groups.begin(), base_flow.groups.end());
        return s;
    };
    c.schedule = assemble(slots);
    c.square_merged = assemble(square_slots);
    c.base = assemble(empty_slots);
    return c;
}

CyclicDistances cyclic_distances(const CyclicConstruction& c) {
    return {schedule_distance_l1(c.base, c.square_merged), schedule_distance_l1(c.square_merged, c.schedule)};
}

FlowSchedule build_ergodic(const CyclicConstruction& cyclic) {
    if (!cycle_decompose(cyclic.time_one).is_single_cycle()) throw std::invalid_argument("cyclic map is not a single cycle");
    const ExactScalar& d = cyclic.params.delta;
    Grid fine(cyclic.params.D * cyclic.params.M);
    FlowSchedule s;
    s.groups.push_back({0, 2 * d, {BakerStage{fine.square(0), false, 0, 2 * d}}});
    s.groups.insert(s.groups.end(), cyclic.schedule.groups.begin() + 2, cyclic.schedule.groups.end());
    return s;
}

FlowSchedule build_strong_mixing(const CyclicConstruction& cyclic) {
    if (!cycle_decompose(cyclic.time_one).is_single_cycle()) throw std::invalid_argument("cyclic map is not a single cycle");
    const int G = cyclic.params.D * cyclic.params.M;
    const ExactScalar& d = cyclic.params.delta;
    Grid fine(G);
    auto order = snake_order(G);
    const int n = static_cast<int>(order.size());
    StageGroup even{0, d, {}}, odd{d, 2 * d, {}};
    for (int l = 0; l < n; ++l) {
        Rect R = bounding_union(fine.square(order[l]), fine.square(order[(l + 1) % n]));
        if (l % 2 == 0)
            even.stages.push_back(BakerStage{R, false, 0, d});
        else
            odd.stages.push_back(BakerStage{R, false, d, 2 * d});
    }
    FlowSchedule s;
    s.groups.push_back(std::move(even));
    s.groups.push_back(std::move(odd));
    s.groups.insert(s.groups.end(), cyclic.schedule.groups.begin() + 2, cyclic.schedule.groups.end());
    return s;
}

Rectification rectify_diagonal_affine(const std::vector<DiagonalAffine>& pieces, int max_M) {
    if (pieces.empty()) throw std::invalid_argument("no pieces");
    const ExactScalar side = pieces.front().source.width();
    if (!(ExactScalar(1) / side).is_integer()) throw std::invalid_argument("sources must be squares of a grid");
    const long long N = (ExactScalar(1) / side).small_num();

    std::vector<Rect> sources, images;
    std::vector<AffinePiece> affine;
    for (const auto& pc : pieces) {
        if (pc.source.width() != side || pc.source.height() != side) throw std::invalid_argument("sources must be squares of one grid");
        if (pc.lambda.sign() <= 0) throw std::invalid_argument("lambda must be positive");
        sources.push_back(pc.source);
        images.push_back(affine_image(pc.map(), pc.source));
        if (!Rect::unit().contains(images.back())) throw std::invalid_argument("image leaves the unit square");
        affine.push_back({pc.source, pc.map()});
    }
    if (union_area(RectUnion(sources)) != 1) throw std::invalid_argument("sources do not tile the square");
    if (union_area(RectUnion(images)) != 1) throw std::invalid_argument("images do not tile the square");

    // sub-rects R_ij (p columns, q rows) and their images
    struct Cut {
        Rect image;
        bool identity;
    };
    std::vector<Cut> cuts;
    long long M = N;
    for (const auto& pc : pieces) {
        if (!pc.lambda.is_small()) throw std::overflow_error("lambda too large");
        long long p = pc.lambda.small_num(), q = pc.lambda.small_den();
        M = lcm_checked(M, N * p * q, max_M);
        for (long long i = 0; i < p; ++i)
            for (long long j = 0; j < q; ++j) {
                Rect r{pc.source.x_lo + side * ExactScalar(i, p), pc.source.x_lo + side * ExactScalar(i + 1, p),
                       pc.source.y_lo + side * ExactScalar(j, q), pc.source.y_lo + side * ExactScalar(j + 1, q)};
                Rect img = affine_image(pc.map(), r);
                for (const ExactScalar& v : {img.x_lo, img.x_hi, img.y_lo, img.y_hi}) {
                    if (!v.is_small()) throw std::overflow_error("image coordinate too large");
                    M = lcm_checked(M, v.small_den(), max_M);
                }
                cuts.push_back({img, pc.lambda == 1});
            }
    }

    Rectification out;
    out.M = static_cast<int>(M);
    Grid g(out.M);
    const ExactScalar h(1, 2);
    StageGroup turn{0, h, {}}, counter{h, 1, {}};
    for (const auto& c : cuts) {
        if (c.identity) continue;
        turn.stages.push_back(RotationStage{c.image, 1, 0, h});
        int i0 = floor(c.image.x_lo * M).small_num(), i1 = floor(c.image.x_hi * M).small_num();
        int j0 = floor(c.image.y_lo * M).small_num(), j1 = floor(c.image.y_hi * M).small_num();
        for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) counter.stages.push_back(RotationStage{g.square(i, j), -1, h, 1});
    }
    if (turn.stages.empty()) {
        out.schedule = FlowSchedule::identity();
    } else {
        out.schedule.groups = {std::move(turn), std::move(counter)};
    }
    out.composite = TimeOneMap(std::move(affine)).then(time_one_map(out.schedule));
    auto perm = square_translation(out.composite, g);
    if (!perm) throw std::logic_error("rectified map is not a square translation");
    out.permutation = *perm;
    return out;
}

PipelineReport full_pipeline(const SquarePermutation& p, const ConstructionParams& params, const ExactScalar& epsilon) {
    if (epsilon.sign() <= 0) throw std::invalid_argument("epsilon must be positive");
    PipelineReport r;
    auto c = build_cyclic(p, params);
    FlowSchedule original = permutation_flow(p, 0, 1);
    r.time_shift = schedule_distance_l1(original, c.base);
    auto cd = cyclic_distances(c);
    r.square_merges = cd.square;
    r.tree_merges = cd.tree;
    switch (params.pipeline) {
        case Pipeline::cyclic: r.schedule = c.schedule; break;
        case Pipeline::ergodic: r.schedule = build_ergodic(c); break;
        case Pipeline::strong_mixing: r.schedule = build_strong_mixing(c); break;
    }
    r.perturbation = schedule_distance_l1(c.schedule, r.schedule);
    r.total = r.time_shift + r.square_merges + r.tree_merges + r.perturbation;
    r.epsilon = epsilon;
    ExactScalar quarter = epsilon / 4;
    r.within_budget = r.time_shift <= quarter && r.square_merges <= quarter && r.tree_merges <= quarter &&
                      r.perturbation <= quarter;
    r.grid_heuristic_ok = ExactScalar(params.D * params.M) * epsilon * params.delta >= 1;
    auto dec = cycle_decompose(c.time_one);
    r.cycle_length = dec.is_single_cycle() ? static_cast<int>(dec.cycles[0].size()) : 0;
    return r;
}

}  // namespace mixflow
