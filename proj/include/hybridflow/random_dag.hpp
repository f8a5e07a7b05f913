#pragma once

// Seeded random instances for property checks and oracle batches. Uses only
// the raw mt19937_64 stream so instances are identical across standard
// library implementations.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "workflow.hpp"

namespace hybridflow {

class PortableRandom {
public:
    explicit PortableRandom(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    // Inclusive range.
    int integer(int lo, int hi) {
        auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>(engine_() % span);
    }

    bool chance(double p) { return uniform(0.0, 1.0) < p; }

private:
    std::mt19937_64 engine_;
};

struct RandomDagOptions {
    int min_tasks = 3;
    int max_tasks = 12;
    double edge_probability = 0.3;
    double min_work = 100.0;
    double max_work = 3000.0;
    int categories = 3;          // tasks share categories round-robin
};

// Edges only run from lower to higher index, so the result is acyclic.
inline IterationDag random_dag(std::uint64_t seed, RandomDagOptions const & o = {}) {
    PortableRandom rng(seed);
    int n = rng.integer(o.min_tasks, o.max_tasks);
    std::vector<TaskSpec> tasks;
    for (int i = 0; i < n; ++i) {
        auto id = "t" + std::to_string(i < 10 ? 0 : i / 10) + std::to_string(i % 10);
        double work = std::round(rng.uniform(o.min_work, o.max_work));
        tasks.push_back({id, "c" + std::to_string(i % o.categories), work, 0.0});
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (rng.chance(o.edge_probability)) edges.emplace_back(u, v);
        }
    }
    return make_dag(std::move(tasks), edges);
}

} // namespace hybridflow
