#include "mixflow/permutation.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

namespace mixflow {

SquarePermutation SquarePermutation::identity(int D) {
    SquarePermutation p;
    p.grid = Grid(D);
    p.image.resize(static_cast<std::size_t>(D) * D);
    for (int k = 0; k < D * D; ++k) p.image[k] = k;
    return p;
}

SquarePermutation SquarePermutation::from_image(int D, std::vector<int> image) {
    Grid g(D);
    if (image.size() != static_cast<std::size_t>(g.size())) throw std::invalid_argument("image length must be D^2");
    std::vector<char> seen(image.size(), 0);
    for (int v : image) {
        if (v < 0 || v >= g.size() || seen[v]) throw std::invalid_argument("image is not a bijection");
        seen[v] = 1;
    }
    return {g, std::move(image)};
}

SquarePermutation SquarePermutation::inverse() const {
    SquarePermutation r{grid, std::vector<int>(image.size())};
    for (std::size_t k = 0; k < image.size(); ++k) r.image[image[k]] = static_cast<int>(k);
    return r;
}

SquarePermutation SquarePermutation::after(const SquarePermutation& first) const {
    if (!(grid == first.grid)) throw std::invalid_argument("grid mismatch");
    SquarePermutation r{grid, std::vector<int>(image.size())};
    for (std::size_t k = 0; k < image.size(); ++k) r.image[k] = image[first.image[k]];
    return r;
}

bool SquarePermutation::is_identity() const {
    for (std::size_t k = 0; k < image.size(); ++k)
        if (image[k] != static_cast<int>(k)) return false;
    return true;
}

CycleDecomposition cycle_decompose(const SquarePermutation& p) {
    CycleDecomposition c;
    std::vector<char> seen(p.image.size(), 0);
    for (std::size_t s = 0; s < p.image.size(); ++s) {
        if (seen[s]) continue;
        std::vector<int> cyc;
        for (int k = static_cast<int>(s); !seen[k]; k = p.image[k]) {
            seen[k] = 1;
            cyc.push_back(k);
        }
        c.cycles.push_back(std::move(cyc));
    }
    return c;
}

SquarePermutation from_cycles(int D, const CycleDecomposition& c) {
    std::vector<int> image(static_cast<std::size_t>(D) * D, -1);
    for (const auto& cyc : c.cycles)
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            int k = cyc[i];
            if (k < 0 || k >= D * D || image[k] != -1) throw std::invalid_argument("cycles overlap or out of range");
            image[k] = cyc[(i + 1) % cyc.size()];
        }
    return SquarePermutation::from_image(D, std::move(image));
}

SquarePermutation lift_to_refinement(const SquarePermutation& p, int M) {
    if (M <= 0) throw std::invalid_argument("refinement factor must be positive");
    const int D = p.grid.D;
    Grid fine(D * M);
    std::vector<int> image(fine.size());
    for (int k = 0; k < p.grid.size(); ++k) {
        int i = p.grid.col(k), j = p.grid.row(k);
        int ti = p.grid.col(p.image[k]), tj = p.grid.row(p.image[k]);
        for (int b = 0; b < M; ++b)
            for (int a = 0; a < M; ++a) image[fine.index(i * M + a, j * M + b)] = fine.index(ti * M + a, tj * M + b);
    }
    return {fine, std::move(image)};
}

SquarePermutation apply_transpositions(const SquarePermutation& p, const std::vector<SwapPair>& pairs) {
    std::vector<int> swap(p.image.size());
    for (std::size_t k = 0; k < swap.size(); ++k) swap[k] = static_cast<int>(k);
    std::vector<char> used(p.image.size(), 0);
    for (auto [a, b] : pairs) {
        if (a < 0 || b < 0 || a >= p.grid.size() || b >= p.grid.size() || a == b)
            throw std::invalid_argument("bad transposition pair");
        if (used[a] || used[b]) throw std::invalid_argument("overlapping transposition pairs");
        used[a] = used[b] = 1;
        swap[a] = b;
        swap[b] = a;
    }
    SquarePermutation r{p.grid, std::vector<int>(p.image.size())};
    for (std::size_t k = 0; k < swap.size(); ++k) r.image[k] = p.image[swap[k]];
    return r;
}

namespace {

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

}  // namespace

std::vector<SwapRound> within_square_rounds(const Grid& refined, int kappa, int M) {
    if (!is_power_of_two(M)) throw std::invalid_argument("M must be a power of two");
    if (refined.D % M != 0) throw std::invalid_argument("grid is not a refinement by M");
    Grid coarse(refined.D / M);
    const int x0 = coarse.col(kappa) * M, y0 = coarse.row(kappa) * M;
    std::vector<SwapRound> rounds;
    int w = 1, h = 1;
    bool horizontal = true;
    while (w < M || h < M) {
        SwapRound round;
        if (horizontal) {
            for (int by = 0; by < M; by += h)
                for (int bx = 0; bx < M; bx += 2 * w)
                    round.emplace_back(refined.index(x0 + bx + w - 1, y0 + by), refined.index(x0 + bx + w, y0 + by));
            w *= 2;
        } else {
            for (int by = 0; by < M; by += 2 * h)
                for (int bx = 0; bx < M; bx += w)
                    round.emplace_back(refined.index(x0 + bx, y0 + by + h - 1), refined.index(x0 + bx, y0 + by + h));
            h *= 2;
        }
        rounds.push_back(std::move(round));
        horizontal = !horizontal;
    }
    return rounds;
}

WithinSquareMerge merge_within_square(const SquarePermutation& p_lifted, int kappa, int M) {
    if (!is_power_of_two(M)) throw std::invalid_argument("M must be a power of two");
    const Grid& fine = p_lifted.grid;
    if (fine.D % M != 0) throw std::invalid_argument("grid is not a refinement by M");
    Grid coarse(fine.D / M);
    if (kappa < 0 || kappa >= coarse.size()) throw std::out_of_range("square index out of range");

    // every sub-square of kappa must sit on its own cycle
    auto dec = cycle_decompose(p_lifted);
    std::vector<int> cycle_of(fine.size());
    for (std::size_t c = 0; c < dec.cycles.size(); ++c)
        for (int k : dec.cycles[c]) cycle_of[k] = static_cast<int>(c);
    std::set<int> hit;
    const int x0 = coarse.col(kappa) * M, y0 = coarse.row(kappa) * M;
    for (int b = 0; b < M; ++b)
        for (int a = 0; a < M; ++a)
            if (!hit.insert(cycle_of[fine.index(x0 + a, y0 + b)]).second)
                throw std::invalid_argument("permutation is not a lifted single cycle through kappa");

    WithinSquareMerge out{p_lifted, within_square_rounds(fine, kappa, M)};
    for (const auto& round : out.rounds) out.result = apply_transpositions(out.result, round);
    return out;
}

std::vector<SwapPair> MergeTree::pairs() const {
    std::vector<SwapPair> r;
    for (const auto& e : edges) r.emplace_back(e.a, e.a_prime);
    return r;
}

bool is_corner_subsquare(const Grid& refined, int M, int a) {
    int u = refined.col(a) % M, v = refined.row(a) % M;
    return (u == 0 || u == M - 1) && (v == 0 || v == M - 1);
}

MergeTree build_merge_tree(const CycleDecomposition& c, const Grid& refined_grid) {
    const int n = static_cast<int>(c.cycles.size());
    int total = 0;
    for (const auto& cyc : c.cycles) total += static_cast<int>(cyc.size());
    int D = 1;
    while (D * D < total) ++D;
    if (D * D != total) throw std::invalid_argument("cycles do not cover a square grid");
    if (refined_grid.D % D != 0) throw std::invalid_argument("refined grid is not a refinement");
    const int M = refined_grid.D / D;
    Grid coarse(D);

    // cycles sorted by leader
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto leader = [&](int i) { return *std::min_element(c.cycles[i].begin(), c.cycles[i].end()); };
    std::sort(order.begin(), order.end(), [&](int a, int b) { return leader(a) < leader(b); });
    std::vector<int> cycle_of(total, -1);
    for (int i = 0; i < n; ++i)
        for (int k : c.cycles[i]) cycle_of[k] = i;

    MergeTree t;
    t.node_count = n;
    t.depth.assign(n, -1);
    t.parent.assign(n, -1);
    if (n == 0) return t;
    if (n > 1 && M < 4) throw std::invalid_argument("corner avoidance needs M >= 4");

    std::vector<std::set<int>> adj(n);
    for (int k = 0; k < total; ++k) {
        int i = coarse.col(k), j = coarse.row(k);
        if (i + 1 < D && cycle_of[k] != cycle_of[k + 1]) {
            adj[cycle_of[k]].insert(cycle_of[k + 1]);
            adj[cycle_of[k + 1]].insert(cycle_of[k]);
        }
        if (j + 1 < D && cycle_of[k] != cycle_of[k + D]) {
            adj[cycle_of[k]].insert(cycle_of[k + D]);
            adj[cycle_of[k + D]].insert(cycle_of[k]);
        }
    }

    std::set<int> used;
    auto place_pair = [&](int ks, int kc, MergeEdge& e) {
        int si = coarse.col(ks), sj = coarse.row(ks), ci = coarse.col(kc), cj = coarse.row(kc);
        for (int off = 1; off + 1 < M; ++off) {
            int a, b;
            if (ci == si + 1) {
                a = refined_grid.index(si * M + M - 1, sj * M + off);
                b = refined_grid.index(ci * M, cj * M + off);
            } else if (ci + 1 == si) {
                a = refined_grid.index(si * M, sj * M + off);
                b = refined_grid.index(ci * M + M - 1, cj * M + off);
            } else if (cj == sj + 1) {
                a = refined_grid.index(si * M + off, sj * M + M - 1);
                b = refined_grid.index(ci * M + off, cj * M);
            } else {
                a = refined_grid.index(si * M + off, sj * M);
                b = refined_grid.index(ci * M + off, cj * M + M - 1);
            }
            if (used.count(a) || used.count(b)) continue;
            used.insert(a);
            used.insert(b);
            e.a = a;
            e.a_prime = b;
            return;
        }
        throw std::runtime_error("no free non-corner pair along shared edge");
    };

    std::deque<int> queue{order[0]};
    t.depth[order[0]] = 0;
    t.layers.push_back({order[0]});
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        std::vector<int> kids;
        for (int v : adj[u])
            if (t.depth[v] < 0) kids.push_back(v);
        std::sort(kids.begin(), kids.end(), [&](int a, int b) { return leader(a) < leader(b); });
        std::vector<int> su = c.cycles[u];
        std::sort(su.begin(), su.end());
        for (int v : kids) {
            t.depth[v] = t.depth[u] + 1;
            t.parent[v] = u;
            if (static_cast<int>(t.layers.size()) <= t.depth[v]) t.layers.emplace_back();
            t.layers[t.depth[v]].push_back(v);
            queue.push_back(v);
            MergeEdge e;
            e.parent = u;
            e.child = v;
            bool found = false;
            for (int ks : su) {
                int i = coarse.col(ks), j = coarse.row(ks);
                int cand[4] = {j > 0 ? ks - D : -1, i > 0 ? ks - 1 : -1, i + 1 < D ? ks + 1 : -1, j + 1 < D ? ks + D : -1};
                for (int kc : cand) {
                    if (kc >= 0 && cycle_of[kc] == v) {
                        e.square_parent = ks;
                        e.square_child = kc;
                        found = true;
                        break;
                    }
                }
                if (found) break;
            }
            place_pair(e.square_parent, e.square_child, e);
            t.edges.push_back(e);
        }
    }
    for (int i = 0; i < n; ++i)
        if (t.depth[i] < 0) throw std::logic_error("cycle layout is disconnected");
    return t;
}

std::vector<int> snake_order(int G) {
    if (G <= 0) throw std::invalid_argument("grid size must be positive");
    if (G == 1) return {0};
    if (G % 2 != 0) throw std::invalid_argument("closed snake needs an even grid size");
    Grid g(G);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(G) * G);
    for (int i = 0; i < G; ++i) out.push_back(g.index(i, 0));
    for (int j = 1; j < G; ++j) {
        if (j % 2 == 1)
            for (int i = G - 1; i >= 1; --i) out.push_back(g.index(i, j));
        else
            for (int i = 1; i < G; ++i) out.push_back(g.index(i, j));
    }
    for (int j = G - 1; j >= 1; --j) out.push_back(g.index(0, j));
    return out;
}

std::vector<int> snake_positions(int G) {
    auto order = snake_order(G);
    std::vector<int> pos(order.size());
    for (std::size_t l = 0; l < order.size(); ++l) pos[order[l]] = static_cast<int>(l);
    return pos;
}

}  // namespace mixflow
