#pragma once

// Exhaustive (makespan, cost) frontier for small instances.
//
// The search covers every choice of up to `max_machines` machines from the
// catalog, every assignment of tasks to them and every per-machine start
// order. Each candidate is timed left-justified: a task starts at the latest
// of its predecessors' ends, the start of the task before it on the machine,
// and the earliest free core. Every feasible schedule can be left-shifted into
// one of these without increasing its makespan, so t_min is exact. A second,
// right-justified timing of the same orders catches cheaper billing spans.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include "cloud.hpp"
#include "profile.hpp"
#include "schedule.hpp"
#include "scheduler.hpp"

namespace hybridflow {

struct OracleLimits {
    std::size_t max_tasks = 8;
    int max_machines = 4;
};

struct ParetoPoint {
    Objectives objectives;
    Schedule witness;
};

inline bool dominates(Objectives const & a, Objectives const & b, double rel_tol = 0.0) {
    auto le = [&](double x, double y) { return x <= y + rel_tol * std::max(std::abs(x), std::abs(y)); };
    auto lt = [&](double x, double y) { return x < y - rel_tol * std::max(std::abs(x), std::abs(y)); };
    return le(a.makespan, b.makespan) && le(a.cost, b.cost) && (lt(a.makespan, b.makespan) || lt(a.cost, b.cost));
}

class ParetoFrontier {
public:
    // Keeps the first witness found for each distinct non-dominated point.
    bool offer(Objectives const & o, auto && make_witness) {
        for (auto const & p : points_) {
            if (p.objectives == o || dominates(p.objectives, o)) return false;
        }
        std::erase_if(points_, [&](ParetoPoint const & p) { return dominates(o, p.objectives); });
        points_.push_back({o, make_witness()});
        std::sort(points_.begin(), points_.end(), [](ParetoPoint const & a, ParetoPoint const & b) {
            return a.objectives.makespan < b.objectives.makespan;
        });
        return true;
    }

    std::vector<ParetoPoint> const & points() const noexcept { return points_; }

    double t_min() const {
        double t = std::numeric_limits<double>::infinity();
        for (auto const & p : points_) t = std::min(t, p.objectives.makespan);
        return t;
    }

    double m_min() const {
        double m = std::numeric_limits<double>::infinity();
        for (auto const & p : points_) m = std::min(m, p.objectives.cost);
        return m;
    }

    // True when some frontier point is at least as good on both objectives and
    // better on one (with a relative tolerance for rounding differences).
    bool dominated(Objectives const & o, double rel_tol = 1e-9) const {
        return std::any_of(points_.begin(), points_.end(),
                           [&](ParetoPoint const & p) { return dominates(p.objectives, o, rel_tol); });
    }

private:
    std::vector<ParetoPoint> points_;
};

namespace detail {

class OracleSearch {
public:
    OracleSearch(IterationDag const & dag, Catalog const & catalog, RuntimeProfile const & profile,
                 PricingPolicy const & policy, int max_machines)
        : dag_(std::make_shared<IterationDag const>(dag)), catalog_(catalog), policy_(policy),
          max_machines_(max_machines), n_(dag.size()) {
        for (auto const & t : dag.tasks) reference_.push_back(reference_runtime(t, profile));
        descendant_.assign(n_, std::vector<bool>(n_, false));
        for (std::size_t k = n_; k-- > 0;) {
            for (auto s : dag.succs[k]) {
                descendant_[k][s] = true;
                for (std::size_t j = 0; j < n_; ++j) if (descendant_[s][j]) descendant_[k][j] = true;
            }
        }
    }

    ParetoFrontier run() {
        for (int k = 1; k <= max_machines_; ++k) {
            types_.clear();
            choose_types(k, 0);
        }
        return std::move(frontier_);
    }

private:
    void choose_types(int remaining, std::size_t from) {
        if (remaining == 0) {
            assignment_.assign(n_, -1);
            assign(0);
            return;
        }
        for (std::size_t t = from; t < catalog_.size(); ++t) {
            auto used = std::count(types_.begin(), types_.end(), t);
            if (catalog_[t].capacity_limit && used >= *catalog_[t].capacity_limit) continue;
            types_.push_back(t);
            choose_types(remaining - 1, t);
            types_.pop_back();
        }
    }

    // Machines of the same type are interchangeable: a machine may receive its
    // first task only after its same-type predecessor has one.
    void assign(std::size_t task) {
        auto const k = types_.size();
        if (task == n_) {
            sequences_.assign(k, {});
            for (std::size_t j = 0; j < n_; ++j) sequences_[assignment_[j]].push_back(j);
            if (std::any_of(sequences_.begin(), sequences_.end(), [](auto const & q) { return q.empty(); })) return;
            order_machine(0);
            return;
        }
        for (std::size_t m = 0; m < k; ++m) {
            if (m > 0 && types_[m] == types_[m - 1]) {
                bool previous_used = false;
                for (std::size_t j = 0; j < task; ++j) previous_used |= assignment_[j] == static_cast<int>(m - 1);
                if (!previous_used) continue;
            }
            assignment_[task] = static_cast<int>(m);
            assign(task + 1);
        }
        assignment_[task] = -1;
    }

    void order_machine(std::size_t m) {
        if (m == sequences_.size()) {
            evaluate();
            return;
        }
        auto & seq = sequences_[m];
        std::sort(seq.begin(), seq.end());
        do {
            bool consistent = true;
            for (std::size_t a = 0; a < seq.size() && consistent; ++a) {
                for (std::size_t b = a + 1; b < seq.size(); ++b) {
                    if (descendant_[seq[b]][seq[a]]) { consistent = false; break; }
                }
            }
            if (consistent) order_machine(m + 1);
        } while (std::next_permutation(seq.begin(), seq.end()));
    }

    // Lays tasks out as early as possible (or, reversed, as late as possible
    // measured from the end) in the current per-machine orders, never before
    // `lower`. Fills start_/end_; false when the orders contradict precedence.
    bool lay_out(bool reversed, std::vector<double> const & lower) {
        auto const k = sequences_.size();
        auto const & preds = reversed ? dag_->succs : dag_->preds;
        auto const & succs = reversed ? dag_->preds : dag_->succs;
        auto const & before = reversed ? machine_next_ : machine_pred_;
        auto const & after = reversed ? machine_pred_ : machine_next_;

        std::vector<int> indegree(n_, 0);
        for (std::size_t j = 0; j < n_; ++j) indegree[j] = static_cast<int>(preds[j].size()) + (before[j] >= 0 ? 1 : 0);
        std::vector<std::size_t> ready;
        for (std::size_t j = 0; j < n_; ++j) if (indegree[j] == 0) ready.push_back(j);

        core_free_.assign(k, {});
        for (std::size_t m = 0; m < k; ++m) {
            core_free_[m].assign(catalog_[types_[m]].cores, -std::numeric_limits<double>::infinity());
        }
        std::size_t done = 0;
        while (!ready.empty()) {
            auto j = ready.back();
            ready.pop_back();
            ++done;
            auto m = static_cast<std::size_t>(assignment_[j]);
            double t = lower[j];
            for (auto p : preds[j]) t = std::max(t, end_[p]);
            if (before[j] >= 0) t = std::max(t, start_[before[j]]);
            auto core = std::min_element(core_free_[m].begin(), core_free_[m].end());
            t = std::max(t, *core);
            start_[j] = t;
            end_[j] = t + runtime_[j];
            *core = end_[j];
            for (auto s : succs[j]) if (--indegree[s] == 0) ready.push_back(s);
            if (after[j] >= 0 && --indegree[after[j]] == 0) ready.push_back(after[j]);
        }
        return done == n_;
    }

    void offer_current() {
        auto const k = sequences_.size();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        double cost = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            double mlo = std::numeric_limits<double>::infinity();
            double mhi = -std::numeric_limits<double>::infinity();
            for (auto j : sequences_[m]) {
                mlo = std::min(mlo, start_[j]);
                mhi = std::max(mhi, end_[j]);
            }
            cost += span_cost(catalog_[types_[m]], mhi - mlo, policy_);
            lo = std::min(lo, mlo);
            hi = std::max(hi, mhi);
        }
        frontier_.offer(Objectives{hi - lo, cost}, [&] { return witness(); });
    }

    // Left-justified timing is makespan-optimal for the given orders; the
    // mirrored (as-late-as-possible) timing can shorten machine spans and so
    // reach cheaper points.
    void evaluate() {
        machine_pred_.assign(n_, -1);
        machine_next_.assign(n_, -1);
        for (auto const & seq : sequences_) {
            for (std::size_t i = 1; i < seq.size(); ++i) {
                machine_pred_[seq[i]] = static_cast<int>(seq[i - 1]);
                machine_next_[seq[i - 1]] = static_cast<int>(seq[i]);
            }
        }
        runtime_.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            runtime_[j] = runtime_on(reference_[j], catalog_[types_[assignment_[j]]]);
        }
        start_.assign(n_, 0.0);
        end_.assign(n_, 0.0);
        std::vector<double> lower(n_, 0.0);
        if (!lay_out(false, lower)) return;
        offer_current();

        lay_out(true, lower);
        double horizon = *std::max_element(end_.begin(), end_.end());
        for (std::size_t j = 0; j < n_; ++j) lower[j] = horizon - end_[j];
        lay_out(false, lower);
        offer_current();
    }

    Schedule witness() const {
        Schedule s;
        s.dag = dag_;
        for (std::size_t m = 0; m < types_.size(); ++m) s.machines.push_back({static_cast<int>(m), catalog_[types_[m]]});
        for (std::size_t j = 0; j < n_; ++j) {
            s.assignments.push_back({dag_->instance(j), assignment_[j], start_[j], end_[j], runtime_[j], reference_[j]});
        }
        return s;
    }

    std::shared_ptr<IterationDag const> dag_;
    Catalog const & catalog_;
    PricingPolicy policy_;
    int max_machines_;
    std::size_t n_;
    std::vector<double> reference_;
    std::vector<std::vector<bool>> descendant_;

    std::vector<std::size_t> types_;
    std::vector<int> assignment_;
    std::vector<std::vector<std::size_t>> sequences_;
    std::vector<int> machine_pred_, machine_next_;
    std::vector<double> start_, end_, runtime_;
    std::vector<std::vector<double>> core_free_;
    ParetoFrontier frontier_;
};

} // namespace detail

inline ParetoFrontier brute_force_optimum(IterationDag const & dag, Catalog const & catalog,
                                          RuntimeProfile const & profile, PricingPolicy const & policy,
                                          OracleLimits const & limits = {}) {
    if (dag.empty()) throw Error(ErrorKind::runtime, "cannot search an empty dag");
    if (dag.size() > limits.max_tasks) {
        throw Error(ErrorKind::limits, "instance exceeds oracle task limit",
                    std::to_string(dag.size()) + " > " + std::to_string(limits.max_tasks));
    }
    if (limits.max_machines < 1) throw Error(ErrorKind::limits, "oracle needs at least one machine");
    validate_catalog(catalog);
    return detail::OracleSearch(dag, catalog, profile, policy, limits.max_machines).run();
}

} // namespace hybridflow
