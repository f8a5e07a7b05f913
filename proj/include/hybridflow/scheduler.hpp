#pragma once

// Planning phases: greedy makespan list scheduling, consolidation onto fewer
// machines, and downgrading public machines to cheaper types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "cloud.hpp"
#include "profile.hpp"
#include "schedule.hpp"
#include "workflow.hpp"

namespace hybridflow {

inline double estimate_runtime(TaskSpec const & task, InstanceType const & type, RuntimeProfile const & profile) {
    return runtime_on(reference_runtime(task, profile), type);
}

// Highest speed wins; ties prefer more cores, then private, then name.
inline InstanceType const & fastest_type(Catalog const & catalog) {
    if (catalog.empty()) throw Error(ErrorKind::config, "catalog is empty");
    auto key = [](InstanceType const & t) {
        return std::make_tuple(-t.speed_factor, -t.cores, t.is_public(), t.name);
    };
    return *std::min_element(catalog.begin(), catalog.end(),
                             [&](auto const & a, auto const & b) { return key(a) < key(b); });
}

// Longest estimated path to an exit task, on the fastest type.
inline std::vector<double> upward_ranks(IterationDag const & dag, InstanceType const & type,
                                        RuntimeProfile const & profile) {
    std::vector<double> rank(dag.size(), 0.0);
    for (std::size_t k = dag.size(); k-- > 0;) {
        double tail = 0.0;
        for (auto s : dag.succs[k]) tail = std::max(tail, rank[s]);
        rank[k] = estimate_runtime(dag.tasks[k], type, profile) + tail;
    }
    return rank;
}

struct GreedyOptions {
    std::optional<int> max_machines;       // cap on machines in the schedule
    std::vector<MachineSlot> existing;     // machines usable before any provisioning
    bool allow_provision = true;
    std::optional<int> first_new_id;       // default: one past the largest existing id

    static GreedyOptions capped(std::optional<int> machines) {
        GreedyOptions o;
        o.max_machines = machines;
        return o;
    }
};

inline Schedule greedy_min_makespan(IterationDag const & dag, Catalog const & catalog,
                                    RuntimeProfile const & profile, GreedyOptions const & options = {}) {
    if (dag.empty()) throw Error(ErrorKind::runtime, "cannot schedule an empty dag");
    auto const & fastest = fastest_type(catalog);

    Schedule s;
    s.dag = std::make_shared<IterationDag const>(dag);
    s.machines = options.existing;
    std::sort(s.machines.begin(), s.machines.end(), [](auto const & a, auto const & b) { return a.id < b.id; });
    s.assignments.resize(dag.size());

    int next_id = options.first_new_id.value_or(s.machines.empty() ? 0 : s.machines.back().id + 1);
    auto can_provision = [&] {
        if (!options.allow_provision) return false;
        if (options.max_machines && static_cast<int>(s.machines.size()) >= *options.max_machines) return false;
        if (fastest.capacity_limit) {
            auto same = std::count_if(s.machines.begin(), s.machines.end(),
                                      [&](MachineSlot const & m) { return m.type.name == fastest.name; });
            if (same >= *fastest.capacity_limit) return false;
        }
        return true;
    };

    auto rank = upward_ranks(dag, fastest, profile);
    std::vector<std::size_t> order(dag.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] > rank[b]; });

    std::vector<bool> placed(dag.size(), false);
    for (auto i : order) {
        auto const & task = dag.tasks[i];
        double ref = reference_runtime(task, profile);
        double ready = 0.0;
        for (auto p : dag.preds[i]) ready = std::max(ready, s.assignments[p].end);

        std::optional<Assignment> best;
        for (auto const & m : s.machines) {
            double rt = runtime_on(ref, m.type);
            std::vector<Interval> busy;
            for (std::size_t j = 0; j < dag.size(); ++j) {
                if (placed[j] && s.assignments[j].machine_id == m.id) {
                    busy.push_back({s.assignments[j].start, s.assignments[j].end});
                }
            }
            double start = *earliest_slot(busy, m.type.cores, ready, rt);
            double end = start + rt;
            if (!best || end < best->end) best = Assignment{dag.instance(i), m.id, start, end, rt, ref};
        }
        double fresh_rt = runtime_on(ref, fastest);
        double fresh_end = ready + fresh_rt;
        if ((!best || fresh_end < best->end) && can_provision()) {
            s.machines.push_back({next_id, fastest});
            best = Assignment{dag.instance(i), next_id, ready, fresh_end, fresh_rt, ref};
            ++next_id;
        }
        if (!best) throw Error(ErrorKind::capacity, "no machine available", task.id);
        s.assignments[i] = *best;
        placed[i] = true;
    }
    return s;
}

namespace detail {

inline double max_end(Schedule const & s) {
    double hi = -std::numeric_limits<double>::infinity();
    for (auto const & a : s.assignments) hi = std::max(hi, a.end);
    return hi;
}

inline double min_start(Schedule const & s) {
    double lo = std::numeric_limits<double>::infinity();
    for (auto const & a : s.assignments) lo = std::min(lo, a.start);
    return lo;
}

// Move every task off `victim` into idle capacity elsewhere without touching
// the timing of anything else. Empty on failure.
inline std::optional<Schedule> evacuate(Schedule s, int victim, std::vector<int> const & targets, double horizon) {
    auto tasks = s.tasks_on(victim);
    std::sort(tasks.begin(), tasks.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(s.assignments[a].start, a) < std::tie(s.assignments[b].start, b);
    });
    for (auto t : tasks) {
        auto & a = s.assignments[t];
        double ready = s.ready_time(t);
        double deadline = horizon;
        for (auto succ : s.dag->succs[t]) deadline = std::min(deadline, s.assignments[succ].start);

        std::optional<std::pair<double, int>> best;  // (start, machine)
        double best_end = 0.0;
        for (int id : targets) {
            auto const & m = s.machine(id);
            double rt = runtime_on(a.reference_runtime, m.type);
            auto start = earliest_slot(s.busy(id), m.type.cores, ready, rt, deadline);
            if (!start) continue;
            double end = *start + rt;
            if (!best || end < best_end) {
                best = std::make_pair(*start, id);
                best_end = end;
            }
        }
        if (!best) return std::nullopt;
        a.machine_id = best->second;
        a.start = best->first;
        a.runtime = runtime_on(a.reference_runtime, s.machine(best->second).type);
        a.end = a.start + a.runtime;
    }
    return s;
}

} // namespace detail

// Repeatedly empties the least-loaded machine into idle slots on the others,
// keeping every other assignment and the makespan fixed.
inline Schedule consolidate(Schedule s) {
    if (s.empty()) return s;
    double const horizon = detail::max_end(s);
    double const origin = detail::min_start(s);

    for (bool progress = true; progress;) {
        progress = false;
        auto used = s.used_machines();
        if (used.size() < 2) break;
        std::vector<std::pair<double, int>> load;
        for (int id : used) {
            double busy = 0.0;
            for (auto const & a : s.assignments) if (a.machine_id == id) busy += a.runtime;
            load.emplace_back(busy, id);
        }
        std::sort(load.begin(), load.end());
        for (auto const & [busy, victim] : load) {
            std::vector<int> targets;
            for (int id : used) if (id != victim) targets.push_back(id);
            auto trial = detail::evacuate(s, victim, targets, horizon);
            if (!trial) continue;
            if (detail::max_end(*trial) != horizon || detail::min_start(*trial) != origin) continue;
            trial->machines.erase(std::remove_if(trial->machines.begin(), trial->machines.end(),
                                                 [&](MachineSlot const & m) { return m.id == victim; }),
                                  trial->machines.end());
            s = std::move(*trial);
            progress = true;
            break;
        }
    }
    return s;
}

// Recompute runtimes from machine types and push tasks later where needed,
// keeping each machine's start order.
inline Schedule retime(Schedule s) {
    std::vector<std::size_t> order(s.assignments.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(s.assignments[a].start, a) < std::tie(s.assignments[b].start, b);
    });
    std::map<int, std::vector<double>> core_free;
    for (auto const & m : s.machines) core_free[m.id].assign(m.type.cores, -std::numeric_limits<double>::infinity());
    for (auto i : order) {
        auto & a = s.assignments[i];
        auto & cores = core_free.at(a.machine_id);
        auto core = std::min_element(cores.begin(), cores.end());
        a.runtime = runtime_on(a.reference_runtime, s.machine(a.machine_id).type);
        a.start = std::max({a.start, s.ready_time(i), *core});
        a.end = a.start + a.runtime;
        *core = a.end;
    }
    return s;
}

namespace detail {

inline std::optional<std::pair<double, double>> machine_span(Schedule const & s, int id) {
    std::optional<std::pair<double, double>> span;
    for (auto const & a : s.assignments) {
        if (a.machine_id != id) continue;
        if (!span) span = std::make_pair(a.start, a.end);
        span->first = std::min(span->first, a.start);
        span->second = std::max(span->second, a.end);
    }
    return span;
}

// Most expensive public type strictly cheaper than `current`.
inline InstanceType const * next_cheaper(Catalog const & catalog, InstanceType const & current) {
    InstanceType const * best = nullptr;
    for (auto const & t : catalog) {
        if (!t.is_public() || !(t.price_per_quantum < current.price_per_quantum)) continue;
        auto key = [](InstanceType const & x) { return std::make_tuple(x.price_per_quantum, x.speed_factor, x.name); };
        if (!best || key(*best) < key(t)) best = &t;
    }
    return best;
}

} // namespace detail

// A public machine moves to the next cheaper public type while its billed
// quanta do not grow, the whole schedule still ends inside the original
// makespan's billing quantum, and total cost strictly drops.
inline Schedule downgrade_instances(Schedule s, Catalog const & catalog, PricingPolicy const & policy) {
    if (s.empty()) return s;
    double const q = static_cast<double>(policy.quantum_seconds);
    double const slot = std::ceil(makespan(s) / q) * q;

    std::vector<MachineSlot> order;
    for (int id : s.used_machines()) {
        if (s.machine(id).type.is_public()) order.push_back(s.machine(id));
    }
    std::stable_sort(order.begin(), order.end(), [](MachineSlot const & a, MachineSlot const & b) {
        return a.type.price_per_quantum > b.type.price_per_quantum;
    });

    for (auto const & victim : order) {
        for (;;) {
            auto const & current = s.machine(victim.id).type;
            auto const * cheaper = detail::next_cheaper(catalog, current);
            if (!cheaper) break;
            if (cheaper->capacity_limit) {
                auto same = std::count_if(s.machines.begin(), s.machines.end(),
                                          [&](MachineSlot const & m) { return m.type.name == cheaper->name; });
                if (same >= *cheaper->capacity_limit) break;
            }
            Schedule trial = s;
            for (auto & m : trial.machines) if (m.id == victim.id) m.type = *cheaper;
            trial = retime(std::move(trial));

            auto before = detail::machine_span(s, victim.id);
            auto after = detail::machine_span(trial, victim.id);
            bool keeps_quanta = billed_quanta(after->second - after->first, policy) <=
                                billed_quanta(before->second - before->first, policy);
            bool in_slot = makespan(trial) <= slot;
            bool cheaper_total = schedule_cost(trial, policy) < schedule_cost(s, policy);
            if (!(keeps_quanta && in_slot && cheaper_total)) break;
            s = std::move(trial);
        }
    }
    return s;
}

// One full planning round: greedy, then consolidate, then downgrade.
inline Schedule plan_iteration(IterationDag const & dag, Catalog const & catalog, RuntimeProfile const & profile,
                               PricingPolicy const & policy, GreedyOptions const & options = {}) {
    return downgrade_instances(consolidate(greedy_min_makespan(dag, catalog, profile, options)), catalog, policy);
}

} // namespace hybridflow
