#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <hybridflow/scenario.hpp>

namespace hf = hybridflow;

inline std::filesystem::path source_path(std::string const & rel) { return std::filesystem::path(HF_SOURCE_DIR) / rel; }

inline hf::TaskSpec task(std::string id, double work, std::string category = "") {
    if (category.empty()) category = id;
    return {std::move(id), std::move(category), work, 0.0};
}

inline hf::InstanceType public_type(std::string name, int cores, double speed, double price) {
    return {std::move(name), hf::Venue::public_cloud, cores, speed, price, std::nullopt};
}

inline hf::InstanceType private_type(std::string name, int cores, double speed) {
    return {std::move(name), hf::Venue::private_cloud, cores, speed, 0.0, std::nullopt};
}

struct Placement {
    std::string task;
    int machine;
    double start;
};

// Hand-built schedule; runtimes follow from nominal work and machine speed.
inline hf::Schedule build_schedule(hf::IterationDag dag, std::vector<hf::MachineSlot> machines,
                                   std::vector<Placement> const & placements) {
    hf::Schedule s;
    s.dag = std::make_shared<hf::IterationDag const>(std::move(dag));
    s.machines = std::move(machines);
    s.assignments.resize(s.dag->size());
    for (auto const & p : placements) {
        auto i = *s.dag->index_of(p.task);
        double ref = s.dag->tasks[i].nominal_work;
        double rt = hf::runtime_on(ref, s.machine(p.machine).type);
        s.assignments[i] = {s.dag->instance(i), p.machine, p.start, p.start + rt, rt, ref};
    }
    return s;
}

inline hf::ScenarioConfig dengue_config(std::uint64_t seed = 42) {
    return hf::load_scenario(source_path("scenarios/dengue.json"), seed);
}

// Longest path of nominal runtimes at the given speed.
inline double critical_path(hf::IterationDag const & dag, double speed) {
    std::vector<double> finish(dag.size(), 0.0);
    double best = 0.0;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        double start = 0.0;
        for (auto p : dag.preds[i]) start = std::max(start, finish[p]);
        finish[i] = start + dag.tasks[i].nominal_work / speed;
        best = std::max(best, finish[i]);
    }
    return best;
}
