// mixflow command line: construct schedules, measure mixing, analyse the Markov model.
// Exit codes: 0 ok, 1 runtime failure (rect guard, undefined orbit, I/O), 2 usage.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mixflow/io.hpp"
#include "mixflow/vfield.hpp"

using namespace mixflow;
using mixflow::io::json;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// everything a run records about itself
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    json parameters = json::object();
    std::map<std::string, std::string> inputs;  // path -> hash
    std::vector<std::string> outputs;
    std::string warning;
};

void emit(const std::string& path, const std::string& content, Manifest& mf) {
    io::write_file_atomic(path, content);
    mf.outputs.push_back(path);
}

std::string load(const std::string& path, Manifest& mf) {
    auto text = io::read_file(path);
    mf.inputs[path] = io::content_hash(text);
    return text;
}

std::pair<int, int> parse_window(const std::string& s) {
    auto c = s.find(':');
    if (c == std::string::npos) throw UsageError("window must be a:b, got " + s);
    try {
        int a = std::stoi(s.substr(0, c)), b = std::stoi(s.substr(c + 1));
        if (a < 0 || b <= a) throw UsageError("window needs 0 <= a < b: " + s);
        return {a, b};
    } catch (const std::logic_error&) {
        throw UsageError("bad window: " + s);
    }
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// ---- construct

struct ConstructArgs {
    std::string pipeline = "cyclic";
    int D = 2;
    int M = 0;
    std::string delta = "1/8";
    std::string perm = "identity";
    std::string epsilon = "1";
    std::string out = "schedule.json";
    std::string report;
    std::string map_out;
    bool skip_distances = false;
};

int run_construct(const ConstructArgs& a, Manifest& mf) {
    ConstructionParams p;
    try {
        p.D = a.D;
        p.M = a.M;
        p.delta = ExactScalar::parse(a.delta);
        p.pipeline = parse_pipeline(a.pipeline);
        p.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    SquarePermutation perm = [&] {
        try {
            return io::parse_permutation(a.perm, a.D);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }();
    ExactScalar eps = ExactScalar::parse(a.epsilon);
    if (eps.sign() <= 0) throw UsageError("epsilon must be positive");
    mf.parameters = io::to_json(p);
    mf.parameters["perm"] = a.perm;
    mf.parameters["epsilon"] = io::to_json(eps);

    json report;
    FlowSchedule schedule;
    if (a.skip_distances) {
        auto c = build_cyclic(perm, p);
        schedule = p.pipeline == Pipeline::cyclic  ? c.schedule
                   : p.pipeline == Pipeline::ergodic ? build_ergodic(c)
                                                    : build_strong_mixing(c);
        report = {{"cycle_length", p.D * p.D * p.M * p.M}, {"stage_count", schedule.stage_count()}};
    } else {
        auto r = full_pipeline(perm, p, eps);
        schedule = r.schedule;
        report = io::to_json(r);
        report["tv_sup"] = io::to_json(schedule_tv_sup(schedule));
    }
    report["params"] = mf.parameters;

    emit(a.out, io::to_json(schedule).dump(1) + "\n", mf);
    if (!a.report.empty()) emit(a.report, report.dump(2) + "\n", mf);
    if (!a.map_out.empty()) emit(a.map_out, io::to_json(time_one_map(schedule)).dump(1) + "\n", mf);

    std::cout << "pipeline " << pipeline_name(p.pipeline) << " D=" << p.D << " M=" << p.M << " delta=" << p.delta
              << "\nstages " << schedule.stage_count() << "\ncycle_length " << report["cycle_length"] << "\n";
    if (report.contains("distances"))
        for (auto& [k, v] : report["distances"].items()) std::cout << k << " " << v.get<std::string>() << "\n";
    return 0;
}

// ---- mix

struct MixArgs {
    std::string schedule;
    std::string map;
    std::string mode = "correlation";
    std::vector<std::string> A, B;
    int n_max = 16;
    int grid = 0;
    std::string point;
    long iterates = 10000;
    std::string fit;
    std::string out;
    std::string summary;
    long long guard = -1;
    bool predict = false;
    int samples = 64;
    int spatial = 32;
};

RectUnion rect_set(const std::vector<std::string>& specs, const char* name) {
    if (specs.empty()) throw UsageError(std::string("--") + name + " is required for this mode");
    RectUnion u;
    try {
        for (const auto& s : specs) u.parts.push_back(io::parse_rect(s));
        union_area(u);
    } catch (const std::exception& e) {
        throw UsageError(std::string(name) + ": " + e.what());
    }
    return u;
}

int run_mix(const MixArgs& a, Manifest& mf) {
    if (a.schedule.empty() == a.map.empty()) throw UsageError("give exactly one of --schedule and --map");
    std::optional<FlowSchedule> schedule;
    TimeOneMap T;
    try {
        if (!a.schedule.empty()) {
            schedule = io::schedule_from_json(json::parse(load(a.schedule, mf)));
            T = time_one_map(*schedule);
        } else {
            T = io::map_from_json(json::parse(load(a.map, mf)));
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed input: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid input: ") + e.what());
    }
    const std::size_t guard = a.guard > 0 ? static_cast<std::size_t>(a.guard) : default_rect_guard();
    std::optional<Grid> grid;
    if (a.grid > 0) grid = Grid(a.grid);
    mf.parameters = {{"mode", a.mode}, {"n_max", a.n_max}, {"grid", a.grid}, {"guard", guard}};

    json summary = {{"mode", a.mode}};
    std::string csv;
    int code = 0;

    if (a.mode == "correlation" || a.mode == "cesaro") {
        auto A = rect_set(a.A, "A"), B = rect_set(a.B, "B");
        if (a.n_max < 0) throw UsageError("--n-max must be nonnegative");
        auto s = correlation_series(T, A, B, a.n_max, guard, grid);
        if (s.truncated) {
            mf.warning = s.warning;
            std::cerr << "warning: " << s.warning << "\n";
            code = 1;
        }
        summary["computed_through"] = s.entries.empty() ? -1 : s.entries.back().n;
        summary["truncated"] = s.truncated;
        if (a.mode == "cesaro") {
            auto c = cesaro_weak_mixing(s);
            csv = io::cesaro_csv(c);
            if (!c.empty()) summary["cesaro_last"] = io::to_json(c.back());
        } else {
            csv = io::correlation_csv(s);
        }
        if (!a.fit.empty()) {
            auto [lo, hi] = parse_window(a.fit);
            if (hi > summary["computed_through"].get<int>()) {
                std::cerr << "fit window exceeds computed entries\n";
                code = 1;
            } else {
                auto f = fit_exponential(s, lo, hi);
                summary["fit"] = {{"rate", f.rate}, {"prefactor", f.prefactor}, {"goodness", f.goodness},
                                  {"window", {lo, hi}}};
                std::cout << "fit rate " << fmt(f.rate) << " goodness " << fmt(f.goodness) << "\n";
            }
        }
        if (a.predict) {
            if (!grid) throw UsageError("--predict needs --grid");
            auto P = square_transition_matrix(T, *grid, snake_order(grid->D));
            auto rep = spectral_gap(model_from_matrix(P));
            summary["spectral"] = io::to_json(rep);
            summary["predicted_rate"] = rep.lambda2_modulus > 0 ? -std::log(rep.lambda2_modulus) : INFINITY;
            std::cout << "predicted rate " << fmt(summary["predicted_rate"].get<double>()) << "\n";
        }
    } else if (a.mode == "masses") {
        if (!grid) throw UsageError("masses mode needs --grid");
        auto A = rect_set(a.A, "A");
        auto ms = mass_series(T, A, *grid, a.n_max, guard);
        if (ms.truncated) {
            mf.warning = "rect guard reached, mass series truncated";
            std::cerr << "warning: " << mf.warning << "\n";
            code = 1;
        }
        csv = io::mass_csv(ms);
        summary["onset"] = ms.onset;
        summary["truncated"] = ms.truncated;
    } else if (a.mode == "birkhoff") {
        auto A = rect_set(a.A, "A");
        if (a.point.empty()) throw UsageError("birkhoff mode needs --point");
        Point x;
        try {
            x = io::parse_point(a.point);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        if (a.iterates < 1) throw UsageError("--iterates must be positive");
        try {
            auto avg = birkhoff_average(T, x, A, a.iterates);
            auto gap = abs(avg - union_area(A));
            summary["average"] = io::to_json(avg);
            summary["measure"] = io::to_json(union_area(A));
            summary["distance"] = gap.to_double();
            csv = "iterates,average,measure,distance\n" + std::to_string(a.iterates) + "," + avg.str() + "," +
                  union_area(A).str() + "," + fmt(gap.to_double()) + "\n";
            std::cout << "birkhoff " << avg << " (|A| = " << union_area(A) << ")\n";
        } catch (const OrbitUndefined& e) {
            throw RuntimeFailure(e.what());
        }
    } else if (a.mode == "flow") {
        if (!schedule) throw UsageError("flow mode needs --schedule");
        auto A = rect_set(a.A, "A");
        auto f = flow_time_average(*schedule, A, a.samples, a.spatial);
        summary["distance"] = f.distance;
        summary["error_estimate"] = f.error_estimate;
        summary["skipped"] = f.skipped;
        csv = "samples,spatial,distance,error_estimate\n" + std::to_string(f.sample_count) + "," +
              std::to_string(f.spatial) + "," + fmt(f.distance) + "," + fmt(f.error_estimate) + "\n";
        std::cout << "flow average distance " << fmt(f.distance) << " +- " << fmt(f.error_estimate) << "\n";
    } else {
        throw UsageError("unknown mode " + a.mode);
    }

    if (!a.out.empty()) emit(a.out, csv, mf);
    else std::cout << csv;
    if (!a.summary.empty()) emit(a.summary, summary.dump(2) + "\n", mf);
    return code;
}

// ---- markov

struct MarkovArgs {
    int n = 0;
    std::string shift = "snake";
    bool periodic = false;
    std::string schedule;
    int grid = 0;
    int q_max = 200;
    int state = -1;
    std::string fit;
    std::string csv;
    std::string out;
};

int run_markov(const MarkovArgs& a, Manifest& mf) {
    MarkovModel m;
    mf.parameters = {{"n", a.n}, {"shift", a.shift}, {"periodic", a.periodic}, {"q_max", a.q_max}};
    if (a.q_max < 0) throw UsageError("--q-max must be nonnegative");
    if (!a.schedule.empty()) {
        if (a.grid < 1) throw UsageError("--schedule needs --grid");
        FlowSchedule s;
        try {
            s = io::schedule_from_json(json::parse(load(a.schedule, mf)));
        } catch (const json::exception& e) {
            throw UsageError(std::string("malformed input: ") + e.what());
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("invalid input: ") + e.what());
        }
        Grid g(a.grid);
        m = model_from_matrix(square_transition_matrix(time_one_map(s), g, snake_order(g.D)));
        mf.parameters["grid"] = a.grid;
    } else {
        if (a.n < 2 || a.n % 2) throw UsageError("--n must be even and at least 2");
        std::vector<int> sigma;
        if (a.shift == "snake") {
            sigma = snake_shift(a.n);
        } else if (a.shift == "construction") {
            int G = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.n))));
            if (G * G != a.n || G < 2 || (G & (G - 1))) throw UsageError("construction shift needs n = 4^k");
            ConstructionParams p;
            p.D = 1;
            p.M = G;
            sigma = snake_cycle(build_cyclic(SquarePermutation::identity(1), p));
        } else {
            throw UsageError("unknown shift " + a.shift);
        }
        m = a.periodic ? permutation_only_model(a.n, sigma) : build_model(a.n, sigma);
    }
    if (a.state >= m.n) throw UsageError("--state out of range");

    auto ap = is_aperiodic(m);
    auto sp = spectral_gap(m);
    json summary = {{"n", m.n}, {"aperiodic", ap.aperiodic}, {"witness", ap.witness}, {"spectral", io::to_json(sp)}};
    std::cout << "n " << m.n << "\naperiodic " << (ap.aperiodic ? "yes" : "no") << " witness " << ap.witness
              << "\nlambda2 " << fmt(sp.lambda2_modulus) << "\none_is_simple " << (sp.one_is_simple ? "yes" : "no")
              << "\n";

    std::vector<DeviationSeries> dev;
    if (a.state >= 0) dev.push_back(power_convergence(m, a.q_max, a.state));
    else dev = power_convergence(m, a.q_max);
    if (!a.fit.empty()) {
        auto [lo, hi] = parse_window(a.fit);
        if (hi > a.q_max) throw UsageError("fit window beyond --q-max");
        auto f = fit_deviation_rate(dev.front(), lo, hi);
        summary["fit"] = {{"ratio", f.ratio}, {"r2", f.r2}, {"exact_zero", f.exact_zero}, {"window", {lo, hi}}};
        std::cout << "fitted ratio " << fmt(f.ratio) << (f.exact_zero ? " (exact zero)" : "") << "\n";
    }
    if (!a.csv.empty()) emit(a.csv, io::deviation_csv(dev), mf);
    if (!a.out.empty()) emit(a.out, summary.dump(2) + "\n", mf);
    return 0;
}

// ---- driver

int dispatch(const std::vector<std::string>& args, std::string manifest_path_override = {});

int run_replay(const std::string& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed manifest: ") + e.what());
    }
    if (!j.contains("argv") || !j["argv"].is_array()) throw UsageError("manifest has no argv");
    auto args = j["argv"].get<std::vector<std::string>>();
    if (!args.empty() && args.front() == "replay") throw UsageError("refusing to replay a replay");
    return dispatch(args, "-");
}

int dispatch(const std::vector<std::string>& args, std::string manifest_path_override) {
    CLI::App app{"mixflow: exact volume-preserving flow constructions"};
    app.require_subcommand(1);
    std::string manifest_path;
    app.add_option("--manifest", manifest_path, "write a JSON manifest of this run");

    ConstructArgs ca;
    auto* construct = app.add_subcommand("construct", "build a schedule");
    construct->add_option("--pipeline", ca.pipeline)->check(CLI::IsMember({"cyclic", "ergodic", "mixing", "strong_mixing"}));
    construct->add_option("--D", ca.D)->required();
    construct->add_option("--M", ca.M)->required();
    construct->add_option("--delta", ca.delta, "rational, 0 < delta < 1/3");
    construct->add_option("--perm", ca.perm, "identity | shift | comma separated images");
    construct->add_option("--epsilon", ca.epsilon);
    construct->add_option("--out", ca.out);
    construct->add_option("--report", ca.report);
    construct->add_option("--map", ca.map_out, "also write the time-1 map");
    construct->add_flag("--skip-distances", ca.skip_distances);

    MixArgs ma;
    auto* mix = app.add_subcommand("mix", "correlations, Cesaro means, masses, Birkhoff and flow averages");
    mix->add_option("--schedule", ma.schedule);
    mix->add_option("--map", ma.map);
    mix->add_option("--mode", ma.mode)->check(CLI::IsMember({"correlation", "cesaro", "masses", "birkhoff", "flow"}));
    mix->add_option("--A", ma.A, "rect x0,x1,y0,y1; repeat for unions");
    mix->add_option("--B", ma.B);
    mix->add_option("--n-max", ma.n_max);
    mix->add_option("--grid", ma.grid);
    mix->add_option("--point", ma.point);
    mix->add_option("--iterates", ma.iterates);
    mix->add_option("--fit", ma.fit, "window a:b");
    mix->add_option("--out", ma.out);
    mix->add_option("--summary", ma.summary);
    mix->add_option("--guard", ma.guard, "rect guard, overrides MIXFLOW_RECT_GUARD");
    mix->add_flag("--predict", ma.predict, "spectral rate of the grid transition matrix");
    mix->add_option("--samples", ma.samples);
    mix->add_option("--spatial", ma.spatial);

    MarkovArgs ka;
    auto* markov = app.add_subcommand("markov", "aperiodicity, spectrum and power convergence");
    markov->add_option("--n", ka.n);
    markov->add_option("--shift", ka.shift)->check(CLI::IsMember({"snake", "construction"}));
    markov->add_flag("--periodic", ka.periodic, "drop the averaging factors");
    markov->add_option("--schedule", ka.schedule, "derive the chain from a schedule on --grid");
    markov->add_option("--grid", ka.grid);
    markov->add_option("--q-max", ka.q_max);
    markov->add_option("--state", ka.state, "single start state (default all)");
    markov->add_option("--fit", ka.fit, "window a:b, fitted on the first series");
    markov->add_option("--csv", ka.csv);
    markov->add_option("--out", ka.out);

    std::string replay_path;
    auto* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
    replay->add_option("manifest", replay_path)->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (replay->parsed()) return run_replay(replay_path);
    if (manifest_path_override == "-") manifest_path.clear();

    Manifest mf;
    mf.argv = args;
    auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    if (construct->parsed()) {
        mf.command = "construct";
        code = run_construct(ca, mf);
    } else if (mix->parsed()) {
        mf.command = "mix";
        code = run_mix(ma, mf);
    } else {
        mf.command = "markov";
        code = run_markov(ka, mf);
    }
    if (!manifest_path.empty()) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json j = {{"command", mf.command},
                  {"argv", mf.argv},
                  {"parameters", mf.parameters},
                  {"input_hashes", mf.inputs},
                  {"outputs", mf.outputs},
                  {"library_version", io::library_version},
                  {"wall_clock_seconds", secs},
                  {"exit_code", code}};
        if (!mf.warning.empty()) j["warning"] = mf.warning;
        io::write_file_atomic(manifest_path, j.dump(2) + "\n");
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return dispatch(args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const GuardExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
