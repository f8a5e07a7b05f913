#pragma once

#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "workflow.hpp"

namespace hybridflow {

// Observed runtimes per task category, normalized to speed factor 1.
class RuntimeProfile {
public:
    void add(std::string const & category, double normalized_runtime) {
        if (!(normalized_runtime > 0.0)) {
            throw Error(ErrorKind::runtime, "observed runtime must be positive", category);
        }
        samples_[category].push_back(normalized_runtime);
    }

    // Sample mean; empty when the category was never observed.
    std::optional<double> estimate(std::string const & category) const {
        auto it = samples_.find(category);
        if (it == samples_.end() || it->second.empty()) return std::nullopt;
        double sum = std::accumulate(it->second.begin(), it->second.end(), 0.0);
        return sum / static_cast<double>(it->second.size());
    }

    std::size_t sample_count(std::string const & category) const {
        auto it = samples_.find(category);
        return it == samples_.end() ? 0 : it->second.size();
    }

    std::map<std::string, std::vector<double>> const & samples() const noexcept { return samples_; }

    bool empty() const noexcept { return samples_.empty(); }

private:
    std::map<std::string, std::vector<double>> samples_;
};

// Seconds the task needs at speed factor 1.
inline double reference_runtime(TaskSpec const & task, RuntimeProfile const & profile) {
    if (auto e = profile.estimate(task.category)) return *e;
    return task.nominal_work;
}

} // namespace hybridflow
