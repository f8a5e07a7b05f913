#pragma once

// Scenario files, report files and oracle verification for the batch front-end.
//
// Scenario file (JSON); every key is optional except where noted:
//
//   {
//     "name": "dengue",
//     "workflow": "builtin:dengue" | "<path relative to the scenario file>",
//     "iterations": 5,
//     "mode": "greedy" | "iterative" | "both",
//     "max_machines": 64,
//     "catalog": [{"name": "...", "venue": "private"|"public", "cores": 2,
//                  "speed_factor": 1.0, "price_per_quantum": 0, "capacity_limit": 24}],
//     "pricing": {"quantum_seconds": 3600, "min_quanta": 1},
//     "noise": {"kind": "none"|"uniform_factor", "low": 0.8, "high": 1.2,
//               "mean_scale": 1.0, "seed": 42},       // seed required unless kind is none
//     "thresholds": {"min_relative_gain": 0.05, "w_time": 1, "w_cost": 1},
//     "energy": {"busy_power": 1.0, "idle_power": 0.0}
//   }

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloud.hpp"
#include "optimizer.hpp"
#include "oracle.hpp"
#include "random_dag.hpp"
#include "scheduler.hpp"
#include "sim.hpp"
#include "workflow.hpp"

namespace hybridflow {

namespace detail {

using json = nlohmann::json;

inline void only_keys(json const & obj, std::set<std::string> const & allowed, std::string const & where) {
    if (!obj.is_object()) throw Error(ErrorKind::config, "expected an object", where);
    for (auto const & [key, value] : obj.items()) {
        if (!allowed.count(key)) throw Error(ErrorKind::config, "unknown key", where + "." + key);
    }
}

template <typename T>
T get(json const & obj, std::string const & key, T fallback, std::string const & where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (json::exception const &) {
        throw Error(ErrorKind::config, "wrong value type", where + "." + key);
    }
}

inline std::string read_file(std::filesystem::path const & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::config, "cannot read file", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

inline WorkflowGraph with_iterations(WorkflowGraph const & g, int iterations) {
    return WorkflowGraph::create(g.tasks(), g.edges(), g.loop_edge(), iterations);
}

// `seed_override` replaces (or supplies) the noise seed.
inline ScenarioConfig parse_scenario(std::string const & text, std::filesystem::path const & base_dir = ".",
                                     std::optional<std::uint64_t> seed_override = std::nullopt) {
    using detail::get;
    detail::json doc;
    try {
        doc = detail::json::parse(text);
    } catch (detail::json::exception const & e) {
        throw Error(ErrorKind::config, std::string("scenario is not valid JSON: ") + e.what());
    }
    detail::only_keys(doc, {"name", "workflow", "iterations", "mode", "max_machines", "catalog", "pricing", "noise",
                            "thresholds", "energy"},
                      "scenario");
    ScenarioConfig c;
    c.name = get<std::string>(doc, "name", "scenario", "scenario");

    auto source = get<std::string>(doc, "workflow", "builtin:dengue", "scenario");
    if (source == "builtin:dengue") {
        c.workflow = builtin_dengue_workflow();
    } else if (source.rfind("builtin:", 0) == 0) {
        throw Error(ErrorKind::config, "unknown builtin workflow", source);
    } else {
        auto path = std::filesystem::path(source);
        if (path.is_relative()) path = base_dir / path;
        c.workflow = parse_workflow(detail::read_file(path));
    }
    if (doc.contains("iterations")) {
        auto n = get<int>(doc, "iterations", 1, "scenario");
        if (n < 1) throw Error(ErrorKind::config, "iterations must be positive");
        c.workflow = with_iterations(c.workflow, n);
    }
    c.mode = parse_mode(get<std::string>(doc, "mode", "both", "scenario"));
    if (doc.contains("max_machines")) {
        if (doc["max_machines"].is_null()) {
            c.max_machines.reset();
        } else {
            c.max_machines = get<int>(doc, "max_machines", 64, "scenario");
        }
    }

    if (doc.contains("catalog")) {
        if (!doc["catalog"].is_array()) throw Error(ErrorKind::config, "catalog must be a list");
        c.catalog.clear();
        for (auto const & entry : doc["catalog"]) {
            detail::only_keys(entry, {"name", "venue", "cores", "speed_factor", "price_per_quantum", "capacity_limit"},
                              "catalog");
            InstanceType t;
            t.name = get<std::string>(entry, "name", "", "catalog");
            t.venue = parse_venue(get<std::string>(entry, "venue", "private", "catalog"));
            t.cores = get<int>(entry, "cores", 1, "catalog");
            t.speed_factor = get<double>(entry, "speed_factor", 1.0, "catalog");
            t.price_per_quantum = get<double>(entry, "price_per_quantum", 0.0, "catalog");
            if (entry.contains("capacity_limit") && !entry["capacity_limit"].is_null()) {
                t.capacity_limit = get<int>(entry, "capacity_limit", 1, "catalog");
            }
            c.catalog.push_back(std::move(t));
        }
    }
    if (doc.contains("pricing")) {
        auto const & p = doc["pricing"];
        detail::only_keys(p, {"quantum_seconds", "min_quanta"}, "pricing");
        c.pricing.quantum_seconds = get<std::int64_t>(p, "quantum_seconds", 3600, "pricing");
        c.pricing.min_quanta = get<std::int64_t>(p, "min_quanta", 1, "pricing");
    }
    bool seeded = false;
    if (doc.contains("noise")) {
        auto const & n = doc["noise"];
        detail::only_keys(n, {"kind", "low", "high", "mean_scale", "seed"}, "noise");
        auto kind = get<std::string>(n, "kind", "none", "noise");
        if (kind == "none") {
            c.noise.kind = NoiseKind::none;
        } else if (kind == "uniform_factor") {
            c.noise.kind = NoiseKind::uniform_factor;
        } else {
            throw Error(ErrorKind::config, "noise kind must be none or uniform_factor", kind);
        }
        c.noise.low = get<double>(n, "low", 0.8, "noise");
        c.noise.high = get<double>(n, "high", 1.2, "noise");
        c.noise.mean_scale = get<double>(n, "mean_scale", 1.0, "noise");
        if (n.contains("seed")) {
            c.noise.seed = get<std::uint64_t>(n, "seed", 0, "noise");
            seeded = true;
        }
    }
    if (seed_override) {
        c.noise.seed = *seed_override;
        seeded = true;
    }
    if (c.noise.kind != NoiseKind::none && !seeded) {
        throw Error(ErrorKind::config, "a seed is required when noise is enabled");
    }
    if (doc.contains("thresholds")) {
        auto const & t = doc["thresholds"];
        detail::only_keys(t, {"min_relative_gain", "w_time", "w_cost"}, "thresholds");
        c.thresholds.min_relative_gain = get<double>(t, "min_relative_gain", 0.05, "thresholds");
        c.thresholds.w_time = get<double>(t, "w_time", 1.0, "thresholds");
        c.thresholds.w_cost = get<double>(t, "w_cost", 1.0, "thresholds");
    }
    if (doc.contains("energy")) {
        auto const & e = doc["energy"];
        detail::only_keys(e, {"busy_power", "idle_power"}, "energy");
        c.energy.busy_power = get<double>(e, "busy_power", 1.0, "energy");
        c.energy.idle_power = get<double>(e, "idle_power", 0.0, "energy");
    }
    validate_scenario(c);
    return c;
}

inline ScenarioConfig load_scenario(std::filesystem::path const & path,
                                    std::optional<std::uint64_t> seed_override = std::nullopt) {
    return parse_scenario(detail::read_file(path), path.parent_path().empty() ? "." : path.parent_path(),
                          seed_override);
}

inline std::string render_machines(std::map<std::string, int> const & by_type) {
    if (by_type.empty()) return "-";
    std::string out;
    for (auto const & [type, count] : by_type) {
        if (!out.empty()) out += ',';
        out += type + ':' + std::to_string(count);
    }
    return out;
}

inline std::string iteration_header() {
    return "iteration\tmachines_total\tmachines_by_type\tmakespan_est\tmakespan_actual\tcost_to_date\t"
           "energy_to_date\treplanned\tgain\n";
}

inline std::string render_report(IterationReport const & r) {
    std::ostringstream os;
    os << r.iteration << '\t' << r.machines_total() << '\t' << render_machines(r.machines_active) << '\t'
       << format_number(r.makespan_est) << '\t' << format_number(r.makespan_actual) << '\t'
       << format_number(r.cost_to_date) << '\t' << format_number(r.energy_to_date) << '\t'
       << (r.replanned ? "true" : "false") << '\t' << format_number(r.gain) << '\n';
    return os.str();
}

inline std::string render_reports(std::vector<IterationReport> const & reports) {
    std::string out = iteration_header();
    for (auto const & r : reports) out += render_report(r);
    return out;
}

struct ModeTotals {
    double makespan = 0.0;   // sum of per-iteration actual makespans
    double cost = 0.0;
    double energy = 0.0;
};

inline ModeTotals totals(std::vector<IterationReport> const & reports) {
    ModeTotals t;
    for (auto const & r : reports) t.makespan += r.makespan_actual;
    if (!reports.empty()) {
        t.cost = reports.back().cost_to_date;
        t.energy = reports.back().energy_to_date;
    }
    return t;
}

// Signed percentage change from `baseline` to `value`.
inline double percent_delta(double baseline, double value) {
    if (baseline == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (value - baseline) / baseline * 100.0;
}

struct ComparisonSummary {
    ModeTotals greedy;
    ModeTotals iterative;
    double makespan_delta_pct = 0.0;
    double cost_delta_pct = 0.0;
    double energy_delta_pct = 0.0;
};

inline ComparisonSummary compare(std::vector<IterationReport> const & greedy,
                                 std::vector<IterationReport> const & iterative) {
    ComparisonSummary s;
    s.greedy = totals(greedy);
    s.iterative = totals(iterative);
    s.makespan_delta_pct = percent_delta(s.greedy.makespan, s.iterative.makespan);
    s.cost_delta_pct = percent_delta(s.greedy.cost, s.iterative.cost);
    s.energy_delta_pct = percent_delta(s.greedy.energy, s.iterative.energy);
    return s;
}

inline std::string render_summary(ComparisonSummary const & s) {
    std::ostringstream os;
    os << "metric\tgreedy\titerative\tdelta_pct\n";
    os << "total_makespan\t" << format_number(s.greedy.makespan) << '\t' << format_number(s.iterative.makespan)
       << '\t' << format_number(s.makespan_delta_pct) << '\n';
    os << "total_cost\t" << format_number(s.greedy.cost) << '\t' << format_number(s.iterative.cost) << '\t'
       << format_number(s.cost_delta_pct) << '\n';
    os << "total_energy\t" << format_number(s.greedy.energy) << '\t' << format_number(s.iterative.energy) << '\t'
       << format_number(s.energy_delta_pct) << '\n';
    return os.str();
}

inline std::string render_run_schedules(RunResult const & run) {
    std::string out = "iteration\ttask\tmachine\ttype\tstart\tend\n";
    for (std::size_t k = 0; k < run.schedules.size(); ++k) out += render_schedule(run.schedules[k], run.offsets[k]);
    return out;
}

inline std::string render_run_traces(RunResult const & run) {
    std::string out = "iteration\ttask\tmachine\tactual_start\tactual_end\n";
    for (std::size_t k = 0; k < run.traces.size(); ++k) out += render_trace(run.traces[k], run.offsets[k]);
    return out;
}

// All report files of a scenario run, keyed by file name.
struct ScenarioOutput {
    std::map<std::string, std::string> files;
    std::optional<ComparisonSummary> summary;
    std::vector<RunResult> runs;
};

inline ScenarioOutput run_scenario(ScenarioConfig const & config) {
    ScenarioOutput out;
    std::vector<Mode> modes;
    if (config.mode == Mode::greedy || config.mode == Mode::both) modes.push_back(Mode::greedy);
    if (config.mode == Mode::iterative || config.mode == Mode::both) modes.push_back(Mode::iterative);
    for (auto mode : modes) {
        auto run = run_iterations(config, mode);
        auto prefix = std::string(to_string(mode));
        out.files[prefix + "_iterations.tsv"] = render_reports(run.reports);
        out.files[prefix + "_schedule.tsv"] = render_run_schedules(run);
        out.files[prefix + "_trace.tsv"] = render_run_traces(run);
        out.runs.push_back(std::move(run));
    }
    if (config.mode == Mode::both) {
        out.summary = compare(out.runs[0].reports, out.runs[1].reports);
        out.files["summary.tsv"] = render_summary(*out.summary);
    }
    return out;
}

inline void write_files(std::filesystem::path const & dir, std::map<std::string, std::string> const & files) {
    std::filesystem::create_directories(dir);
    for (auto const & [name, content] : files) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::runtime, "cannot write report", (dir / name).string());
        f << content;
    }
}

// Heuristic (greedy -> consolidate -> downgrade, capped at the oracle's machine
// limit) against the exhaustive frontier.
struct OracleCheck {
    std::size_t tasks = 0;
    double greedy_makespan = 0.0;
    Objectives heuristic;
    ParetoFrontier frontier;
    bool on_frontier = false;
    bool dominated = false;
};

inline OracleCheck check_against_oracle(IterationDag const & dag, Catalog const & catalog,
                                        PricingPolicy const & policy, OracleLimits const & limits,
                                        RuntimeProfile const & profile = {}) {
    OracleCheck c;
    c.tasks = dag.size();
    c.frontier = brute_force_optimum(dag, catalog, profile, policy, limits);
    auto greedy = greedy_min_makespan(dag, catalog, profile, GreedyOptions::capped(limits.max_machines));
    c.greedy_makespan = makespan(greedy);
    c.heuristic = objectives(downgrade_instances(consolidate(greedy), catalog, policy), policy);
    c.dominated = c.frontier.dominated(c.heuristic);
    for (auto const & p : c.frontier.points()) {
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); };
        if (close(p.objectives.makespan, c.heuristic.makespan) && close(p.objectives.cost, c.heuristic.cost)) {
            c.on_frontier = true;
        }
    }
    return c;
}

inline std::string oracle_header() {
    return "instance\ttasks\tgreedy_makespan\theuristic_makespan\theuristic_cost\tt_min\tm_min\tfrontier_size\tstatus\n";
}

inline std::string render_oracle_check(std::string const & label, OracleCheck const & c) {
    std::ostringstream os;
    os << label << '\t' << c.tasks << '\t' << format_number(c.greedy_makespan) << '\t'
       << format_number(c.heuristic.makespan) << '\t' << format_number(c.heuristic.cost) << '\t'
       << format_number(c.frontier.t_min()) << '\t' << format_number(c.frontier.m_min()) << '\t'
       << c.frontier.points().size() << '\t'
       << (c.on_frontier ? "on_frontier" : c.dominated ? "dominated" : "non_dominated") << '\n';
    return os.str();
}

struct OracleTally {
    int instances = 0;
    int on_frontier = 0;
    int dominated = 0;
    int greedy_below_tmin = 0;   // must stay zero
    int greedy_at_tmin = 0;
    std::string rows;            // one render_oracle_check line per instance
};

inline std::string render_tally(OracleTally const & t) {
    std::ostringstream os;
    os << "instances=" << t.instances << " on_frontier=" << t.on_frontier << " dominated=" << t.dominated
       << " greedy_at_tmin=" << t.greedy_at_tmin << " greedy_below_tmin=" << t.greedy_below_tmin << '\n';
    return os.str();
}

inline void tally(OracleTally & t, std::string const & label, OracleCheck const & c) {
    ++t.instances;
    t.on_frontier += c.on_frontier;
    t.dominated += c.dominated;
    double tmin = c.frontier.t_min();
    if (c.greedy_makespan < tmin * (1.0 - 1e-9)) ++t.greedy_below_tmin;
    if (std::abs(c.greedy_makespan - tmin) <= 1e-9 * tmin) ++t.greedy_at_tmin;
    t.rows += render_oracle_check(label, c);
}

// Seeded random instances of exactly `tasks` tasks.
inline OracleTally verify_random_batch(int count, std::uint64_t seed, int tasks, Catalog const & catalog,
                                       PricingPolicy const & policy, OracleLimits const & limits) {
    OracleTally t;
    RandomDagOptions opts;
    opts.min_tasks = opts.max_tasks = tasks;
    for (int i = 0; i < count; ++i) {
        auto dag = random_dag(seed + static_cast<std::uint64_t>(i), opts);
        tally(t, "random-" + std::to_string(seed + static_cast<std::uint64_t>(i)),
              check_against_oracle(dag, catalog, policy, limits));
    }
    return t;
}

// The scenario's first iteration under nominal estimates.
inline OracleTally verify_oracle(ScenarioConfig const & config, OracleLimits const & limits) {
    OracleTally t;
    auto dag = iteration_instance(config.workflow, 0);
    tally(t, config.name, check_against_oracle(dag, config.catalog, config.pricing, limits));
    return t;
}

} // namespace hybridflow
