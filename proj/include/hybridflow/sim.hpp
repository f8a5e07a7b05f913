#pragma once

// Discrete-event replay of a schedule against drawn runtimes.
//
// Each task becomes eligible at the later of its planned start and its
// predecessors' actual finishes, then waits in its machine's queue (ordered
// by planned start) for a free core. Overruns push successors back; early
// finishes never pull work ahead of the plan.

#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cloud.hpp"
#include "schedule.hpp"

namespace hybridflow {

enum class NoiseKind { none, uniform_factor };

inline std::string_view to_string(NoiseKind k) { return k == NoiseKind::none ? "none" : "uniform_factor"; }

// kind none: the plan executes exactly as estimated.
// kind uniform_factor: actual = nominal_work * mean_scale / speed * U[low, high],
// drawn from a stream keyed by (seed, task id, iteration).
struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double low = 0.8;
    double high = 1.2;
    double mean_scale = 1.0;
    std::uint64_t seed = 0;

    double factor(std::string_view task_id, int iteration) const {
        if (kind == NoiseKind::none) return 1.0;
        // FNV-1a over the id, then splitmix64 finalization per component.
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : task_id) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        auto mix = [](std::uint64_t z) {
            z += 0x9e3779b97f4a7c15ULL;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        };
        std::uint64_t z = mix(mix(seed) ^ h);
        z = mix(z ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(iteration)));
        double u = static_cast<double>(z >> 11) * 0x1.0p-53;
        return low + (high - low) * u;
    }
};

inline void validate_noise(NoiseModel const & n) {
    if (n.kind == NoiseKind::uniform_factor) {
        if (!(n.low > 0.0) || !(n.high >= n.low)) {
            throw Error(ErrorKind::config, "noise bounds must satisfy 0 < low <= high");
        }
        if (!(n.mean_scale > 0.0)) throw Error(ErrorKind::config, "noise mean_scale must be positive");
    } else if (n.mean_scale != 1.0) {
        throw Error(ErrorKind::config, "mean_scale requires noise kind uniform_factor");
    }
}

struct TraceRecord {
    TaskInstance instance;
    std::string category;
    int machine_id = 0;
    std::string machine_type;
    double speed_factor = 1.0;
    double planned_start = 0.0;
    double planned_end = 0.0;
    double actual_start = 0.0;
    double actual_end = 0.0;

    double runtime() const { return actual_end - actual_start; }
    bool operator==(TraceRecord const &) const = default;
};

struct ExecutionTrace {
    std::vector<TraceRecord> records;           // index-aligned with the schedule's dag
    std::map<int, double> busy_core_seconds;    // per machine

    double makespan() const {
        if (records.empty()) return 0.0;
        double lo = records.front().actual_start;
        double hi = records.front().actual_end;
        for (auto const & r : records) {
            lo = std::min(lo, r.actual_start);
            hi = std::max(hi, r.actual_end);
        }
        return hi - lo;
    }

    double end_time() const {
        double hi = 0.0;
        for (auto const & r : records) hi = std::max(hi, r.actual_end);
        return hi;
    }

    bool operator==(ExecutionTrace const &) const = default;
};

inline double actual_runtime(Assignment const & a, TaskSpec const & task, InstanceType const & type,
                             NoiseModel const & noise) {
    if (noise.kind == NoiseKind::none) return a.runtime;
    return task.nominal_work * noise.mean_scale / type.speed_factor * noise.factor(task.id, a.instance.iteration);
}

inline ExecutionTrace execute(Schedule const & schedule, NoiseModel const & noise) {
    ExecutionTrace trace;
    if (schedule.empty()) return trace;
    auto const & dag = *schedule.dag;
    auto const n = dag.size();

    std::vector<double> runtime(n);
    trace.records.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto const & a = schedule.assignments[i];
        auto const & type = schedule.machine(a.machine_id).type;
        runtime[i] = actual_runtime(a, dag.tasks[i], type, noise);
        trace.records[i] = {a.instance, dag.tasks[i].category, a.machine_id, type.name, type.speed_factor,
                            a.start, a.end, 0.0, 0.0};
    }
    for (auto const & m : schedule.machines) trace.busy_core_seconds[m.id] = 0.0;

    enum Kind { finish = 0, release = 1 };  // finishes first at equal times
    using Event = std::tuple<double, int, std::size_t>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

    std::map<int, int> free_cores;
    for (auto const & m : schedule.machines) free_cores[m.id] = m.type.cores;
    auto queue_order = [&](std::size_t a, std::size_t b) {
        return std::tie(schedule.assignments[a].start, a) < std::tie(schedule.assignments[b].start, b);
    };
    std::map<int, std::set<std::size_t, decltype(queue_order)>> waiting;
    for (auto const & m : schedule.machines) waiting.emplace(m.id, queue_order);

    std::vector<std::size_t> missing(n);
    for (std::size_t i = 0; i < n; ++i) {
        missing[i] = dag.preds[i].size();
        if (missing[i] == 0) events.emplace(schedule.assignments[i].start, release, i);
    }

    auto dispatch = [&](int machine, double now) {
        auto & q = waiting.at(machine);
        while (free_cores[machine] > 0 && !q.empty()) {
            auto i = *q.begin();
            q.erase(q.begin());
            --free_cores[machine];
            trace.records[i].actual_start = now;
            trace.records[i].actual_end = now + runtime[i];
            events.emplace(trace.records[i].actual_end, finish, i);
        }
    };

    while (!events.empty()) {
        auto [now, kind, i] = events.top();
        events.pop();
        int machine = schedule.assignments[i].machine_id;
        if (kind == release) {
            waiting.at(machine).insert(i);
        } else {
            ++free_cores[machine];
            trace.busy_core_seconds[machine] += runtime[i];
            for (auto s : dag.succs[i]) {
                if (--missing[s] == 0) events.emplace(std::max(now, schedule.assignments[s].start), release, s);
            }
        }
        // Drain every event at this instant before starting work.
        if (!events.empty() && std::get<0>(events.top()) == now) continue;
        for (auto & [id, q] : waiting) if (!q.empty()) dispatch(id, now);
    }
    return trace;
}

struct EnergyModel {
    double busy_power = 1.0;   // per busy core-second
    double idle_power = 0.0;   // per idle leased core-second
};

struct Metrics {
    double makespan_actual = 0.0;
    double cost = 0.0;
    double energy_proxy = 0.0;
    std::map<std::string, double> machine_hours;   // lease hours by type

    bool operator==(Metrics const &) const = default;
};

inline Metrics account(ExecutionTrace const & trace, ResourcePool const & pool, PricingPolicy const & policy,
                       EnergyModel const & energy = {}) {
    Metrics m;
    if (trace.records.empty()) return m;
    m.makespan_actual = trace.makespan();
    std::set<int> machines;
    for (auto const & r : trace.records) machines.insert(r.machine_id);
    double busy = 0.0;
    double leased_core_seconds = 0.0;
    for (int id : machines) {
        auto const & machine = pool.find(id);
        m.cost += lease_cost(machine, policy);
        double duration = *machine.lease_end - machine.lease_start;
        m.machine_hours[machine.type.name] += duration / 3600.0;
        leased_core_seconds += duration * machine.type.cores;
        if (auto it = trace.busy_core_seconds.find(id); it != trace.busy_core_seconds.end()) busy += it->second;
    }
    m.energy_proxy = busy * energy.busy_power + std::max(0.0, leased_core_seconds - busy) * energy.idle_power;
    return m;
}

// One line per task instance: iteration, task, machine, actual_start, actual_end.
inline std::string render_trace(ExecutionTrace const & trace, double offset = 0.0) {
    std::vector<std::size_t> order(trace.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        auto const & a = trace.records[x];
        auto const & b = trace.records[y];
        return std::tie(a.actual_start, a.machine_id, a.instance.task_id) <
               std::tie(b.actual_start, b.machine_id, b.instance.task_id);
    });
    std::ostringstream os;
    for (auto i : order) {
        auto const & r = trace.records[i];
        os << r.instance.iteration << '\t' << r.instance.task_id << '\t' << r.machine_id << '\t'
           << format_number(offset + r.actual_start) << '\t' << format_number(offset + r.actual_end) << '\n';
    }
    return os.str();
}

} // namespace hybridflow
