#include "mixflow/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mixflow::io {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

json times(const ExactScalar& a, const ExactScalar& b) { return json::array({to_json(a), to_json(b)}); }

}  // namespace

json to_json(const ExactScalar& v) { return v.str(); }

ExactScalar scalar_from_json(const json& j) {
    if (j.is_string()) return ExactScalar::parse(j.get<std::string>());
    require(j.is_number_integer(), "rational must be a string or integer");
    return ExactScalar(j.get<long>());
}

json to_json(const Point& p) { return json::array({to_json(p.x), to_json(p.y)}); }

Point point_from_json(const json& j) {
    require(j.is_array() && j.size() == 2, "point needs 2 entries");
    return {scalar_from_json(j[0]), scalar_from_json(j[1])};
}

json to_json(const Rect& r) {
    return json::array({to_json(r.x_lo), to_json(r.x_hi), to_json(r.y_lo), to_json(r.y_hi)});
}

Rect rect_from_json(const json& j) {
    require(j.is_array() && j.size() == 4, "rect needs 4 entries");
    return Rect::make(scalar_from_json(j[0]), scalar_from_json(j[1]), scalar_from_json(j[2]), scalar_from_json(j[3]));
}

json to_json(const RectUnion& u) {
    json a = json::array();
    for (const auto& r : u.parts) a.push_back(to_json(r));
    return a;
}

RectUnion rect_union_from_json(const json& j) {
    require(j.is_array(), "rect union must be an array");
    RectUnion u;
    for (const auto& r : j) u.parts.push_back(rect_from_json(r));
    return u;
}

json to_json(const Stage& s) {
    return std::visit(
        [](const auto& st) -> json {
            using T = std::decay_t<decltype(st)>;
            json j;
            j["time"] = times(st.t_begin, st.t_end);
            if constexpr (std::is_same_v<T, RotationStage>) {
                j["kind"] = "rotation";
                j["rect"] = to_json(st.rect);
                j["quarter_turns"] = st.quarter_turns;
            } else if constexpr (std::is_same_v<T, BakerStage>) {
                j["kind"] = "baker";
                j["rect"] = to_json(st.rect);
                j["inverse"] = st.inverse;
            } else {
                j["kind"] = "transposition";
                j["squares"] = json::array({to_json(st.k1), to_json(st.k2)});
                j["reversed"] = st.reversed;
            }
            return j;
        },
        s);
}

Stage stage_from_json(const json& j) {
    require(j.is_object() && j.contains("kind") && j.contains("time"), "stage needs kind and time");
    require(j["time"].is_array() && j["time"].size() == 2, "stage time needs 2 entries");
    ExactScalar t0 = scalar_from_json(j["time"][0]), t1 = scalar_from_json(j["time"][1]);
    require(t0 < t1, "stage time interval is empty");
    std::string kind = j["kind"].get<std::string>();
    if (kind == "rotation") {
        int q = j.value("quarter_turns", 1);
        require(q == 1 || q == -1 || q == 2 || q == -2, "quarter_turns must be +-1 or +-2");
        return RotationStage{rect_from_json(j.at("rect")), q, t0, t1};
    }
    if (kind == "baker") return BakerStage{rect_from_json(j.at("rect")), j.value("inverse", false), t0, t1};
    if (kind == "transposition") {
        const auto& sq = j.at("squares");
        require(sq.is_array() && sq.size() == 2, "transposition needs 2 squares");
        return TranspositionStage{rect_from_json(sq[0]), rect_from_json(sq[1]), t0, t1, j.value("reversed", false)};
    }
    throw std::invalid_argument("unknown stage kind: " + kind);
}

json to_json(const FlowSchedule& s) {
    json groups = json::array();
    for (const auto& g : s.groups) {
        json stages = json::array();
        for (const auto& st : g.stages) stages.push_back(to_json(st));
        groups.push_back({{"time", times(g.t_begin, g.t_end)}, {"stages", stages}});
    }
    return {{"format", "mixflow.schedule"}, {"version", schedule_format_version}, {"groups", groups}};
}

FlowSchedule schedule_from_json(const json& j) {
    require(j.is_object() && j.value("format", "") == "mixflow.schedule", "not a schedule document");
    int v = j.value("version", 0);
    require(v == schedule_format_version, "unsupported schedule version " + std::to_string(v));
    FlowSchedule s;
    for (const auto& g : j.at("groups")) {
        StageGroup sg;
        sg.t_begin = scalar_from_json(g.at("time").at(0));
        sg.t_end = scalar_from_json(g.at("time").at(1));
        for (const auto& st : g.at("stages")) sg.stages.push_back(stage_from_json(st));
        s.groups.push_back(std::move(sg));
    }
    require(!s.groups.empty(), "schedule has no groups");
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("invalid schedule: ") + e.what());
    }
    return s;
}

json to_json(const SquarePermutation& p) { return {{"D", p.grid.D}, {"image", p.image}}; }

SquarePermutation permutation_from_json(const json& j) {
    return SquarePermutation::from_image(j.at("D").get<int>(), j.at("image").get<std::vector<int>>());
}

json to_json(const TimeOneMap& m) {
    json pieces = json::array();
    for (const auto& p : m.pieces()) {
        const auto& L = p.map.L;
        pieces.push_back({{"domain", to_json(p.domain)},
                          {"linear", json::array({to_json(L.a), to_json(L.b), to_json(L.c), to_json(L.d)})},
                          {"shift", to_json(p.map.t)}});
    }
    return {{"format", "mixflow.map"}, {"version", schedule_format_version}, {"pieces", pieces}};
}

TimeOneMap map_from_json(const json& j) {
    require(j.is_object() && j.value("format", "") == "mixflow.map", "not a map document");
    std::vector<AffinePiece> pieces;
    for (const auto& p : j.at("pieces")) {
        const auto& l = p.at("linear");
        require(l.is_array() && l.size() == 4, "linear part needs 4 entries");
        Mat2 L{scalar_from_json(l[0]), scalar_from_json(l[1]), scalar_from_json(l[2]), scalar_from_json(l[3])};
        pieces.push_back({rect_from_json(p.at("domain")), Affine2{L, point_from_json(p.at("shift"))}});
    }
    TimeOneMap m(std::move(pieces));
    m.validate_tiling();
    return m;
}

json to_json(const ConstructionParams& p) {
    return {{"D", p.D}, {"M", p.M}, {"delta", to_json(p.delta)}, {"pipeline", pipeline_name(p.pipeline)}};
}

json to_json(const PipelineReport& r) {
    return {{"distances",
             {{"time_shift", to_json(r.time_shift)},
              {"square_merges", to_json(r.square_merges)},
              {"tree_merges", to_json(r.tree_merges)},
              {"perturbation", to_json(r.perturbation)},
              {"total", to_json(r.total)}}},
            {"epsilon", to_json(r.epsilon)},
            {"within_budget", r.within_budget},
            {"grid_heuristic_ok", r.grid_heuristic_ok},
            {"cycle_length", r.cycle_length},
            {"stage_count", r.schedule.stage_count()}};
}

json to_json(const SpectralReport& r) {
    return {{"lambda2_modulus", r.lambda2_modulus},
            {"residual", r.residual},
            {"one_is_simple", r.one_is_simple},
            {"uniform_fixed", r.uniform_fixed}};
}

Rect parse_rect(const std::string& text) {
    auto f = split(text, ',');
    require(f.size() == 4, "rect needs x0,x1,y0,y1: " + text);
    return Rect::make(ExactScalar::parse(f[0]), ExactScalar::parse(f[1]), ExactScalar::parse(f[2]),
                      ExactScalar::parse(f[3]));
}

Point parse_point(const std::string& text) {
    auto f = split(text, ',');
    require(f.size() == 2, "point needs x,y: " + text);
    return {ExactScalar::parse(f[0]), ExactScalar::parse(f[1])};
}

SquarePermutation parse_permutation(const std::string& text, int D) {
    if (text == "identity") return SquarePermutation::identity(D);
    int n = D * D;
    std::vector<int> image(n);
    if (text == "shift") {
        for (int k = 0; k < n; ++k) image[k] = (k + 1) % n;
        return SquarePermutation::from_image(D, image);
    }
    auto f = split(text, ',');
    require(static_cast<int>(f.size()) == n, "permutation needs " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k) {
        std::size_t used = 0;
        try {
            image[k] = std::stoi(f[k], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used == f[k].size() && used > 0, "bad permutation entry: " + f[k]);
    }
    return SquarePermutation::from_image(D, image);
}

std::string correlation_csv(const CorrelationSeries& s) {
    std::ostringstream out;
    out << "n,correlation,correlation_approx\n";
    out << std::setprecision(17);
    for (const auto& e : s.entries) out << e.n << ',' << e.value.str() << ',' << e.value.to_double() << '\n';
    return out.str();
}

std::string cesaro_csv(const std::vector<ExactScalar>& c) {
    std::ostringstream out;
    out << "n,cesaro_mean_sq,cesaro_approx\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < c.size(); ++i) out << i + 1 << ',' << c[i].str() << ',' << c[i].to_double() << '\n';
    return out.str();
}

std::string deviation_csv(const std::vector<DeviationSeries>& s) {
    std::ostringstream out;
    out << "state,q,deviation,deviation_approx\n";
    out << std::setprecision(17);
    for (const auto& d : s)
        for (std::size_t q = 0; q < d.deviation.size(); ++q)
            out << d.state << ',' << q << ',' << d.deviation[q].str() << ',' << d.deviation[q].to_double() << '\n';
    return out.str();
}

std::string mass_csv(const MassSeries& s) {
    std::ostringstream out;
    out << "q,square,mass\n";
    for (std::size_t q = 0; q < s.masses.size(); ++q)
        for (std::size_t k = 0; k < s.masses[q].size(); ++k) out << q << ',' << k << ',' << s.masses[q][k].str() << '\n';
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename onto " + path);
    }
}

std::string content_hash(const std::string& content) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

}  // namespace mixflow::io
