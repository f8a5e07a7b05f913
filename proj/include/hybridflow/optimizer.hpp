#pragma once

// The autonomic loop: run an iteration, fold observed runtimes into the
// profile, then decide whether a different number (or mix) of machines would
// pay off for the next pass.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cloud.hpp"
#include "profile.hpp"
#include "schedule.hpp"
#include "scheduler.hpp"
#include "sim.hpp"
#include "workflow.hpp"

namespace hybridflow {

struct ReplanThresholds {
    double min_relative_gain = 0.05;
    double w_time = 1.0;
    double w_cost = 1.0;
};

inline void validate_thresholds(ReplanThresholds const & t) {
    if (!(t.min_relative_gain > 0.0 && t.min_relative_gain < 1.0)) {
        throw Error(ErrorKind::config, "min_relative_gain must lie in (0, 1)");
    }
    if (!(t.w_time >= 0.0) || !(t.w_cost >= 0.0) || !(t.w_time + t.w_cost > 0.0)) {
        throw Error(ErrorKind::config, "objective weights must be non-negative with a positive sum");
    }
}

// Each normalized against the larger of the two values, so terms lie in [-1, 1].
inline double relative_improvement(double incumbent, double candidate) {
    double scale = std::max(incumbent, candidate);
    return scale > 0.0 ? (incumbent - candidate) / scale : 0.0;
}

inline double weighted_gain(Objectives const & incumbent, Objectives const & candidate, ReplanThresholds const & t) {
    return (t.w_time * relative_improvement(incumbent.makespan, candidate.makespan) +
            t.w_cost * relative_improvement(incumbent.cost, candidate.cost)) /
           (t.w_time + t.w_cost);
}

inline RuntimeProfile update_profile(RuntimeProfile profile, ExecutionTrace const & trace) {
    for (auto const & r : trace.records) profile.add(r.category, r.runtime() * r.speed_factor);
    return profile;
}

// Pool changes that turn the active machines into a schedule's machine set.
struct PoolMorph {
    std::map<int, int> relabel;            // schedule slot id -> pool machine id
    std::vector<int> release;              // active machines no longer needed
    std::vector<std::string> provision;    // new machines, in id order

    bool empty() const noexcept { return release.empty() && provision.empty(); }
};

// Slots reuse active machines of the same type (lowest id first); the rest are
// provisioned with ids the pool will hand out next.
inline PoolMorph plan_morph(ResourcePool const & pool, Schedule const & s) {
    PoolMorph morph;
    std::vector<bool> taken(pool.active().size(), false);
    int next = pool.next_id();
    for (auto const & slot : s.machines) {
        bool matched = false;
        for (std::size_t i = 0; i < pool.active().size(); ++i) {
            if (!taken[i] && pool.active()[i].type.name == slot.type.name) {
                taken[i] = true;
                morph.relabel[slot.id] = pool.active()[i].id;
                matched = true;
                break;
            }
        }
        if (!matched) {
            morph.relabel[slot.id] = next++;
            morph.provision.push_back(slot.type.name);
        }
    }
    for (std::size_t i = 0; i < pool.active().size(); ++i) {
        if (!taken[i]) morph.release.push_back(pool.active()[i].id);
    }
    return morph;
}

inline void apply_morph(ResourcePool & pool, PoolMorph const & morph, double now) {
    for (int id : morph.release) pool.release(id, now);
    for (auto const & type : morph.provision) pool.provision(type, now);
}

// Move the pool onto the schedule's machines and rename the schedule to match.
inline Schedule adopt(ResourcePool & pool, Schedule const & s, double now) {
    auto morph = plan_morph(pool, s);
    apply_morph(pool, morph, now);
    return relabel(s, morph.relabel);
}

struct ScaleDecision {
    bool adopted = false;
    double gain = 0.0;
    int budget = 0;                 // machine cap of the chosen candidate
    Objectives incumbent;
    Objectives candidate;
    PoolMorph morph;
};

struct ReplanResult {
    Schedule schedule;              // machine ids refer to the pool after applying decision.morph
    ScaleDecision decision;
};

// Candidates are full plans under machine caps 1..B, where B is what the
// uncapped greedy pass provisions. The best weighted gain over re-running the
// current pool is adopted when it reaches min_relative_gain.
inline ReplanResult replan(WorkflowGraph const & graph, int next_iteration, RuntimeProfile const & profile,
                           ResourcePool const & pool, Catalog const & catalog, PricingPolicy const & policy,
                           ReplanThresholds const & thresholds, std::optional<int> max_machines = std::nullopt) {
    auto dag = iteration_instance(graph, next_iteration);
    ReplanResult out;

    std::optional<Schedule> incumbent;
    if (!pool.active().empty()) {
        GreedyOptions fixed;
        for (auto const & m : pool.active()) fixed.existing.push_back({m.id, m.type});
        fixed.allow_provision = false;
        incumbent = greedy_min_makespan(dag, catalog, profile, fixed);
        out.decision.incumbent = objectives(*incumbent, policy);
        // Keeping the pool also keeps paying for machines the pass leaves idle.
        auto used = incumbent->used_machines();
        for (auto const & m : pool.active()) {
            if (std::find(used.begin(), used.end(), m.id) == used.end()) {
                out.decision.incumbent.cost += span_cost(m.type, out.decision.incumbent.makespan, policy);
            }
        }
    }

    GreedyOptions open;
    open.max_machines = max_machines;
    auto uncapped = greedy_min_makespan(dag, catalog, profile, open);
    int widest = static_cast<int>(uncapped.machines.size());

    std::optional<Schedule> best;
    for (int budget = 1; budget <= widest; ++budget) {
        Schedule plan = budget == widest ? downgrade_instances(consolidate(uncapped), catalog, policy)
                                         : plan_iteration(dag, catalog, profile, policy, GreedyOptions::capped(budget));
        auto obj = objectives(plan, policy);
        double gain = incumbent ? weighted_gain(out.decision.incumbent, obj, thresholds) : 0.0;
        if (!best || gain > out.decision.gain) {
            best = std::move(plan);
            out.decision.gain = gain;
            out.decision.budget = budget;
            out.decision.candidate = obj;
        }
    }

    if (!incumbent || out.decision.gain >= thresholds.min_relative_gain) {
        out.decision.adopted = true;
        out.decision.morph = plan_morph(pool, *best);
        out.schedule = relabel(std::move(*best), out.decision.morph.relabel);
    } else {
        out.schedule = std::move(*incumbent);
    }
    return out;
}

enum class Mode { greedy, iterative, both };

inline std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::greedy: return "greedy";
    case Mode::iterative: return "iterative";
    case Mode::both: return "both";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "greedy") return Mode::greedy;
    if (s == "iterative") return Mode::iterative;
    if (s == "both") return Mode::both;
    throw Error(ErrorKind::config, "mode must be greedy, iterative or both", std::string(s));
}

struct ScenarioConfig {
    std::string name = "scenario";
    WorkflowGraph workflow = builtin_dengue_workflow();
    Catalog catalog = default_catalog();
    PricingPolicy pricing;
    NoiseModel noise;
    ReplanThresholds thresholds;
    EnergyModel energy;
    Mode mode = Mode::both;
    std::optional<int> max_machines = 64;
};

inline void validate_scenario(ScenarioConfig const & c) {
    validate_catalog(c.catalog);
    validate_policy(c.pricing);
    validate_noise(c.noise);
    validate_thresholds(c.thresholds);
    if (c.max_machines && *c.max_machines < 1) throw Error(ErrorKind::config, "max_machines must be positive");
    if (!(c.energy.busy_power >= 0.0) || !(c.energy.idle_power >= 0.0)) {
        throw Error(ErrorKind::config, "power constants must be non-negative");
    }
}

struct IterationReport {
    int iteration = 0;
    std::map<std::string, int> machines_active;
    double makespan_est = 0.0;
    double makespan_actual = 0.0;
    double cost_to_date = 0.0;
    double energy_to_date = 0.0;
    bool replanned = false;
    double gain = 0.0;               // projected gain of the replan that set up this iteration

    int machines_total() const {
        int n = 0;
        for (auto const & [type, count] : machines_active) n += count;
        return n;
    }

    bool operator==(IterationReport const &) const = default;
};

struct RunResult {
    Mode mode = Mode::iterative;
    std::vector<IterationReport> reports;
    std::vector<Schedule> schedules;
    std::vector<ExecutionTrace> traces;
    std::vector<double> offsets;     // wall-clock start of each iteration
    std::vector<ScaleDecision> decisions;
    RuntimeProfile profile;
    ResourcePool pool{default_catalog()};
    double total_cost = 0.0;
};

// mode greedy: every pass is planned by the greedy step alone from nominal
// estimates. mode iterative: iteration 0 gets a full planning round from
// nominal estimates, later passes come from replan() under the learned
// profile. Machines persist across iterations and only change at iteration
// boundaries.
inline RunResult run_iterations(ScenarioConfig const & config, Mode mode) {
    validate_scenario(config);
    if (mode == Mode::both) throw Error(ErrorKind::config, "run_iterations takes a single mode");

    RunResult run;
    run.mode = mode;
    run.pool = ResourcePool(config.catalog);
    auto const & graph = config.workflow;
    int const passes = graph.max_iterations();
    RuntimeProfile const nominal;
    auto const open = GreedyOptions::capped(config.max_machines);

    auto dag0 = iteration_instance(graph, 0);
    Schedule current = mode == Mode::greedy ? greedy_min_makespan(dag0, config.catalog, nominal, open)
                                            : plan_iteration(dag0, config.catalog, nominal, config.pricing, open);
    current = adopt(run.pool, current, 0.0);
    ScaleDecision decision;

    double now = 0.0;
    double energy = 0.0;
    for (int k = 0; k < passes; ++k) {
        auto trace = execute(current, config.noise);
        double end = now + trace.end_time();

        double busy = 0.0;
        for (auto const & [id, seconds] : trace.busy_core_seconds) busy += seconds;
        double leased_core_seconds = 0.0;
        for (auto const & m : run.pool.active()) leased_core_seconds += m.type.cores * (end - now);
        energy += busy * config.energy.busy_power +
                  std::max(0.0, leased_core_seconds - busy) * config.energy.idle_power;

        IterationReport report;
        report.iteration = k;
        report.machines_active = run.pool.active_by_type();
        report.makespan_est = makespan(current);
        report.makespan_actual = trace.makespan();
        report.cost_to_date = run.pool.cost_as_of(end, config.pricing);
        report.energy_to_date = energy;
        report.replanned = decision.adopted;
        report.gain = decision.gain;
        run.reports.push_back(report);
        run.schedules.push_back(current);
        run.traces.push_back(trace);
        run.offsets.push_back(now);
        run.decisions.push_back(decision);

        if (mode == Mode::iterative) run.profile = update_profile(std::move(run.profile), trace);
        now = end;
        if (k + 1 == passes) break;

        if (mode == Mode::greedy) {
            auto plan = greedy_min_makespan(iteration_instance(graph, k + 1), config.catalog, nominal, open);
            current = adopt(run.pool, plan, now);
            decision = {};
        } else {
            auto r = replan(graph, k + 1, run.profile, run.pool, config.catalog, config.pricing, config.thresholds,
                            config.max_machines);
            apply_morph(run.pool, r.decision.morph, now);
            current = std::move(r.schedule);
            decision = std::move(r.decision);
        }
    }
    while (!run.pool.active().empty()) run.pool.release(run.pool.active().front().id, now);
    run.total_cost = run.pool.total_cost(config.pricing);
    return run;
}

} // namespace hybridflow
