#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cloud.hpp"
#include "workflow.hpp"

namespace hybridflow {

struct MachineSlot {
    int id = 0;
    InstanceType type;

    bool operator==(MachineSlot const &) const = default;
};

// end == start + runtime holds exactly; runtime == reference_runtime / speed.
struct Assignment {
    TaskInstance instance;
    int machine_id = 0;
    double start = 0.0;
    double end = 0.0;
    double runtime = 0.0;
    double reference_runtime = 0.0;

    bool operator==(Assignment const &) const = default;
};

struct Interval {
    double start = 0.0;
    double end = 0.0;
};

struct Schedule {
    std::shared_ptr<IterationDag const> dag;
    std::vector<MachineSlot> machines;    // ascending id
    std::vector<Assignment> assignments;  // index-aligned with dag->tasks

    bool empty() const noexcept { return assignments.empty(); }

    MachineSlot const & machine(int id) const {
        for (auto const & m : machines) if (m.id == id) return m;
        throw Error(ErrorKind::not_found, "machine not in schedule", std::to_string(id));
    }

    std::vector<std::size_t> tasks_on(int machine_id) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i].machine_id == machine_id) out.push_back(i);
        }
        return out;
    }

    std::vector<Interval> busy(int machine_id, std::optional<std::size_t> except = std::nullopt) const {
        std::vector<Interval> out;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i].machine_id == machine_id && i != except) {
                out.push_back({assignments[i].start, assignments[i].end});
            }
        }
        return out;
    }

    // Machines that carry at least one assignment.
    std::vector<int> used_machines() const {
        std::vector<int> ids;
        for (auto const & m : machines) {
            if (std::any_of(assignments.begin(), assignments.end(),
                            [&](Assignment const & a) { return a.machine_id == m.id; })) {
                ids.push_back(m.id);
            }
        }
        return ids;
    }

    double ready_time(std::size_t task) const {
        double ready = 0.0;
        for (auto p : dag->preds[task]) ready = std::max(ready, assignments[p].end);
        return ready;
    }

    bool operator==(Schedule const & o) const {
        return machines == o.machines && assignments == o.assignments;
    }
};

inline double runtime_on(double reference_runtime, InstanceType const & type) {
    return reference_runtime / type.speed_factor;
}

inline int max_overlap(std::span<Interval const> busy, double from, double to) {
    int worst = 0;
    auto count_at = [&](double p) {
        int n = 0;
        for (auto const & b : busy) if (b.start <= p && p < b.end) ++n;
        return n;
    };
    worst = count_at(from);
    for (auto const & b : busy) {
        if (b.start > from && b.start < to) worst = std::max(worst, count_at(b.start));
    }
    return worst;
}

// Earliest t >= ready where [t, t + duration) fits next to `busy` on a machine
// with `cores` cores and t + duration <= latest_end.
inline std::optional<double> earliest_slot(std::span<Interval const> busy, int cores, double ready,
                                           double duration,
                                           double latest_end = std::numeric_limits<double>::infinity()) {
    std::vector<double> candidates{ready};
    for (auto const & b : busy) if (b.end > ready) candidates.push_back(b.end);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (double t : candidates) {
        double end = t + duration;
        if (end > latest_end) return std::nullopt;
        if (max_overlap(busy, t, end) < cores) return t;
    }
    return std::nullopt;
}

struct Objectives {
    double makespan = 0.0;
    double cost = 0.0;

    bool operator==(Objectives const &) const = default;
};

inline double makespan(Schedule const & s) {
    if (s.assignments.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (auto const & a : s.assignments) {
        lo = std::min(lo, a.start);
        hi = std::max(hi, a.end);
    }
    return hi - lo;
}

// Lease of each used machine spans its first start to its last end.
inline double schedule_cost(Schedule const & s, PricingPolicy const & policy) {
    double cost = 0.0;
    for (auto const & m : s.machines) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (auto const & a : s.assignments) {
            if (a.machine_id != m.id) continue;
            lo = std::min(lo, a.start);
            hi = std::max(hi, a.end);
        }
        if (hi >= lo) cost += span_cost(m.type, hi - lo, policy);
    }
    return cost;
}

inline Objectives objectives(Schedule const & s, PricingPolicy const & policy) {
    return {makespan(s), schedule_cost(s, policy)};
}

// Empty result means the schedule satisfies precedence, capacity, coverage
// and runtime consistency.
inline std::vector<std::string> schedule_violations(Schedule const & s) {
    std::vector<std::string> out;
    if (!s.dag) {
        if (!s.assignments.empty()) out.push_back("assignments without a dag");
        return out;
    }
    auto const & dag = *s.dag;
    if (s.assignments.size() != dag.size()) {
        out.push_back("assignment count differs from task count");
        return out;
    }
    for (std::size_t i = 0; i < dag.size(); ++i) {
        auto const & a = s.assignments[i];
        auto const id = dag.tasks[i].id;
        if (a.instance != dag.instance(i)) out.push_back("assignment/task mismatch at " + id);
        if (!(a.end > a.start)) out.push_back("non-positive duration for " + id);
        if (a.end != a.start + a.runtime) out.push_back("end != start + runtime for " + id);
        auto slot = std::find_if(s.machines.begin(), s.machines.end(),
                                 [&](MachineSlot const & m) { return m.id == a.machine_id; });
        if (slot == s.machines.end()) {
            out.push_back("unknown machine for " + id);
        } else if (a.runtime != runtime_on(a.reference_runtime, slot->type)) {
            out.push_back("runtime inconsistent with machine speed for " + id);
        }
        for (auto p : dag.preds[i]) {
            if (s.assignments[p].end > a.start) out.push_back("precedence " + dag.tasks[p].id + "->" + id);
        }
    }
    for (auto const & m : s.machines) {
        std::vector<std::pair<double, int>> events;
        for (auto const & a : s.assignments) {
            if (a.machine_id != m.id) continue;
            events.emplace_back(a.start, +1);
            events.emplace_back(a.end, -1);
        }
        std::sort(events.begin(), events.end());  // -1 sorts before +1 at equal times
        int load = 0;
        for (auto const & [t, d] : events) {
            load += d;
            if (load > m.type.cores) {
                out.push_back("capacity exceeded on machine " + std::to_string(m.id));
                break;
            }
        }
    }
    return out;
}

inline bool is_valid(Schedule const & s) { return schedule_violations(s).empty(); }

// Rename machine ids; ids absent from the map stay unchanged.
inline Schedule relabel(Schedule s, std::map<int, int> const & mapping) {
    auto map_id = [&](int id) {
        auto it = mapping.find(id);
        return it == mapping.end() ? id : it->second;
    };
    for (auto & m : s.machines) m.id = map_id(m.id);
    for (auto & a : s.assignments) a.machine_id = map_id(a.machine_id);
    std::sort(s.machines.begin(), s.machines.end(),
              [](MachineSlot const & a, MachineSlot const & b) { return a.id < b.id; });
    return s;
}

// One line per assignment: iteration, task, machine, type, start, end.
inline std::string render_schedule(Schedule const & s, double offset = 0.0) {
    std::vector<std::size_t> order(s.assignments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        auto const & a = s.assignments[x];
        auto const & b = s.assignments[y];
        return std::tie(a.start, a.machine_id, a.instance.task_id) <
               std::tie(b.start, b.machine_id, b.instance.task_id);
    });
    std::ostringstream os;
    for (auto i : order) {
        auto const & a = s.assignments[i];
        os << a.instance.iteration << '\t' << a.instance.task_id << '\t' << a.machine_id << '\t'
           << s.machine(a.machine_id).type.name << '\t' << format_number(offset + a.start) << '\t'
           << format_number(offset + a.end) << '\n';
    }
    return os.str();
}

} // namespace hybridflow
