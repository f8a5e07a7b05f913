#pragma once

// Iterative workflows: a DAG of tasks plus at most one declared back-edge
// (the loop) that re-runs part of the graph for a bounded number of passes.

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common.hpp"

namespace hybridflow {

struct TaskSpec {
    std::string id;
    std::string category;   // runtime-profile key
    double nominal_work = 1.0;   // seconds at speed factor 1
    double output_data = 0.0;

    bool operator==(TaskSpec const &) const = default;
};

struct TaskInstance {
    std::string task_id;
    int iteration = 0;

    auto operator<=>(TaskInstance const &) const = default;
};

using Edge = std::pair<std::string, std::string>;

inline bool valid_task_id(std::string_view id) {
    if (id.empty()) return false;
    return std::none_of(id.begin(), id.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    });
}

class WorkflowGraph {
public:
    // Validates every invariant; throws Error(semantic) naming the offending element.
    static WorkflowGraph create(std::vector<TaskSpec> tasks,
                                std::vector<Edge> edges,
                                std::optional<Edge> loop_edge = std::nullopt,
                                int max_iterations = 1) {
        WorkflowGraph g;
        g.tasks_ = std::move(tasks);
        g.edges_ = std::move(edges);
        g.loop_edge_ = std::move(loop_edge);
        g.max_iterations_ = max_iterations;
        g.validate();
        return g;
    }

    std::vector<TaskSpec> const & tasks() const noexcept { return tasks_; }
    std::vector<Edge> const & edges() const noexcept { return edges_; }
    std::optional<Edge> const & loop_edge() const noexcept { return loop_edge_; }
    int max_iterations() const noexcept { return max_iterations_; }

    TaskSpec const & task(std::string_view id) const {
        auto it = index_.find(std::string(id));
        if (it == index_.end()) throw Error(ErrorKind::not_found, "unknown task", std::string(id));
        return tasks_[it->second];
    }

    bool has_task(std::string_view id) const { return index_.count(std::string(id)) != 0; }

    std::vector<std::string> successors(std::string_view id) const {
        std::vector<std::string> out;
        for (auto const & [u, v] : edges_) if (u == id) out.push_back(v);
        return out;
    }

    // True when `ancestor` reaches `node` through one or more DAG edges.
    bool is_ancestor(std::string const & ancestor, std::string const & node) const {
        std::set<std::string> seen;
        std::vector<std::string> stack = successors(ancestor);
        while (!stack.empty()) {
            auto cur = std::move(stack.back());
            stack.pop_back();
            if (cur == node) return true;
            if (!seen.insert(cur).second) continue;
            for (auto & s : successors(cur)) stack.push_back(std::move(s));
        }
        return false;
    }

    bool operator==(WorkflowGraph const & o) const {
        return tasks_ == o.tasks_ && edges_ == o.edges_ && loop_edge_ == o.loop_edge_ &&
               max_iterations_ == o.max_iterations_;
    }

private:
    void validate() {
        if (tasks_.empty()) throw Error(ErrorKind::semantic, "workflow has no tasks");
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            auto const & t = tasks_[i];
            if (!valid_task_id(t.id)) throw Error(ErrorKind::semantic, "invalid task id", t.id);
            if (!(t.nominal_work > 0.0)) throw Error(ErrorKind::semantic, "nominal_work must be positive", t.id);
            if (!(t.output_data >= 0.0)) throw Error(ErrorKind::semantic, "output_data must be non-negative", t.id);
            if (!valid_task_id(t.category)) throw Error(ErrorKind::semantic, "invalid category", t.id);
            if (!index_.emplace(t.id, i).second) throw Error(ErrorKind::semantic, "duplicate task id", t.id);
        }
        std::set<Edge> seen;
        for (auto const & e : edges_) {
            for (auto const & end : {e.first, e.second}) {
                if (!index_.count(end)) throw Error(ErrorKind::semantic, "dangling edge", end);
            }
            if (!seen.insert(e).second) throw Error(ErrorKind::semantic, "duplicate edge", e.first + "->" + e.second);
        }
        // Kahn's algorithm; leftovers sit on a cycle.
        std::map<std::string, int> indegree;
        for (auto const & t : tasks_) indegree[t.id] = 0;
        for (auto const & e : edges_) ++indegree[e.second];
        std::vector<std::string> ready;
        for (auto const & [id, d] : indegree) if (d == 0) ready.push_back(id);
        std::size_t visited = 0;
        while (!ready.empty()) {
            auto cur = ready.back();
            ready.pop_back();
            ++visited;
            for (auto const & s : successors(cur)) if (--indegree[s] == 0) ready.push_back(s);
        }
        if (visited != tasks_.size()) {
            for (auto const & [id, d] : indegree) {
                if (d > 0) throw Error(ErrorKind::semantic, "cycle", id);
            }
        }
        if (max_iterations_ < 1) throw Error(ErrorKind::semantic, "max_iterations must be positive");
        if (loop_edge_) {
            auto const & [src, dst] = *loop_edge_;
            for (auto const & end : {src, dst}) {
                if (!index_.count(end)) throw Error(ErrorKind::semantic, "dangling loop edge", end);
            }
            if (!is_ancestor(dst, src)) {
                throw Error(ErrorKind::semantic, "loop edge target is not an ancestor of its source", src + "->" + dst);
            }
        } else if (max_iterations_ != 1) {
            throw Error(ErrorKind::semantic, "workflow without a loop edge has exactly one iteration");
        }
    }

    std::vector<TaskSpec> tasks_;
    std::vector<Edge> edges_;
    std::optional<Edge> loop_edge_;
    int max_iterations_ = 1;
    std::map<std::string, std::size_t> index_;
};

// Kahn's algorithm with the smallest ready id always taken first.
inline std::vector<std::string> topological_order(WorkflowGraph const & g) {
    std::map<std::string, int> indegree;
    for (auto const & t : g.tasks()) indegree[t.id] = 0;
    for (auto const & e : g.edges()) ++indegree[e.second];
    std::set<std::string> ready;
    for (auto const & [id, d] : indegree) if (d == 0) ready.insert(id);
    std::vector<std::string> order;
    order.reserve(g.tasks().size());
    while (!ready.empty()) {
        auto cur = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(cur);
        for (auto const & s : g.successors(cur)) if (--indegree[s] == 0) ready.insert(s);
    }
    return order;
}

// One iteration's worth of task instances. Nodes are stored in topological order.
struct IterationDag {
    int iteration = 0;
    std::vector<TaskSpec> tasks;
    std::vector<std::vector<std::size_t>> preds;
    std::vector<std::vector<std::size_t>> succs;

    std::size_t size() const noexcept { return tasks.size(); }
    bool empty() const noexcept { return tasks.empty(); }

    TaskInstance instance(std::size_t i) const { return {tasks[i].id, iteration}; }

    std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < tasks.size(); ++i) if (tasks[i].id == id) return i;
        return std::nullopt;
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t u = 0; u < succs.size(); ++u) for (auto v : succs[u]) out.emplace_back(u, v);
        return out;
    }
};

// Build a standalone DAG from tasks and index edges (tests, random instances).
inline IterationDag make_dag(std::vector<TaskSpec> tasks,
                             std::vector<std::pair<std::size_t, std::size_t>> const & edges,
                             int iteration = 0) {
    std::vector<Edge> named;
    for (auto [u, v] : edges) named.emplace_back(tasks.at(u).id, tasks.at(v).id);
    auto g = WorkflowGraph::create(tasks, named);
    auto order = topological_order(g);
    IterationDag dag;
    dag.iteration = iteration;
    std::map<std::string, std::size_t> pos;
    for (auto const & id : order) {
        pos[id] = dag.tasks.size();
        dag.tasks.push_back(g.task(id));
    }
    dag.preds.resize(order.size());
    dag.succs.resize(order.size());
    for (auto const & [u, v] : named) {
        dag.succs[pos[u]].push_back(pos[v]);
        dag.preds[pos[v]].push_back(pos[u]);
    }
    for (auto & p : dag.preds) std::sort(p.begin(), p.end());
    for (auto & s : dag.succs) std::sort(s.begin(), s.end());
    return dag;
}

// Iteration 0 runs every task; later passes re-run what the loop target reaches.
inline IterationDag iteration_instance(WorkflowGraph const & g, int k) {
    if (k < 0 || k >= g.max_iterations()) {
        throw Error(ErrorKind::semantic, "iteration out of range", std::to_string(k));
    }
    std::set<std::string> members;
    if (k == 0 || !g.loop_edge()) {
        for (auto const & t : g.tasks()) members.insert(t.id);
    } else {
        std::vector<std::string> stack{g.loop_edge()->second};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            if (!members.insert(cur).second) continue;
            for (auto & s : g.successors(cur)) stack.push_back(std::move(s));
        }
    }
    IterationDag dag;
    dag.iteration = k;
    std::map<std::string, std::size_t> pos;
    for (auto const & id : topological_order(g)) {
        if (!members.count(id)) continue;
        pos[id] = dag.tasks.size();
        dag.tasks.push_back(g.task(id));
    }
    dag.preds.resize(dag.tasks.size());
    dag.succs.resize(dag.tasks.size());
    for (auto const & [u, v] : g.edges()) {
        if (!pos.count(u) || !pos.count(v)) continue;
        dag.succs[pos[u]].push_back(pos[v]);
        dag.preds[pos[v]].push_back(pos[u]);
    }
    for (auto & p : dag.preds) std::sort(p.begin(), p.end());
    for (auto & s : dag.succs) std::sort(s.begin(), s.end());
    return dag;
}

// Workflow document grammar, one directive per line, '#' starts a comment:
//
//   task <id> <category> <nominal_work> <output_data>
//   edge <from> <to>
//   loop <from> <to> <max_iterations>
//
// At most one loop line. A document without one describes a single-pass workflow.
inline WorkflowGraph parse_workflow(std::string_view text) {
    std::vector<TaskSpec> tasks;
    std::vector<Edge> edges;
    std::optional<Edge> loop;
    int max_iterations = 1;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto tok = split_whitespace(line);
        if (tok.empty()) continue;
        auto where = "line " + std::to_string(line_no);
        auto bad = [&](std::string const & what) { return Error(ErrorKind::syntax, what, where); };

        if (tok[0] == "task") {
            if (tok.size() != 5) throw bad("task expects: task <id> <category> <nominal_work> <output_data>");
            auto work = parse_double(tok[3]);
            auto out = parse_double(tok[4]);
            if (!work || !out) throw bad("task numbers are malformed");
            tasks.push_back({std::string(tok[1]), std::string(tok[2]), *work, *out});
        } else if (tok[0] == "edge") {
            if (tok.size() != 3) throw bad("edge expects: edge <from> <to>");
            edges.emplace_back(std::string(tok[1]), std::string(tok[2]));
        } else if (tok[0] == "loop") {
            if (tok.size() != 4) throw bad("loop expects: loop <from> <to> <max_iterations>");
            if (loop) throw bad("duplicate loop declaration");
            auto n = parse_int(tok[3]);
            if (!n || *n < 1 || *n > 1'000'000) throw bad("max_iterations must be a positive integer");
            loop = Edge{std::string(tok[1]), std::string(tok[2])};
            max_iterations = static_cast<int>(*n);
        } else {
            throw bad("unknown directive '" + std::string(tok[0]) + "'");
        }
    }
    return WorkflowGraph::create(std::move(tasks), std::move(edges), std::move(loop), max_iterations);
}

inline std::string render_workflow(WorkflowGraph const & g) {
    std::ostringstream os;
    for (auto const & t : g.tasks()) {
        os << "task " << t.id << ' ' << t.category << ' ' << format_number(t.nominal_work) << ' '
           << format_number(t.output_data) << '\n';
    }
    for (auto const & [u, v] : g.edges()) os << "edge " << u << ' ' << v << '\n';
    if (auto const & l = g.loop_edge()) {
        os << "loop " << l->first << ' ' << l->second << ' ' << g.max_iterations() << '\n';
    }
    return os.str();
}

// Dengue prediction pipeline: A prepares the time window, B..G are independent
// analysis tracks over partitions of the data, H joins them and loops back to A.
// Nominal work values are modeling defaults, not measured numbers.
inline WorkflowGraph builtin_dengue_workflow(int max_iterations = 5) {
    std::vector<TaskSpec> tasks{
        {"A", "window_prepare", 300, 40},
        {"B", "case_extract", 2400, 10},
        {"C", "climate_extract", 2100, 10},
        {"D", "case_model", 1800, 10},
        {"E", "climate_model", 1500, 10},
        {"F", "interpolate", 1200, 10},
        {"G", "risk_map", 900, 10},
        {"H", "aggregate", 600, 5},
    };
    std::vector<Edge> edges;
    for (char c = 'B'; c <= 'G'; ++c) edges.emplace_back("A", std::string(1, c));
    for (char c = 'B'; c <= 'G'; ++c) edges.emplace_back(std::string(1, c), "H");
    return WorkflowGraph::create(std::move(tasks), std::move(edges), Edge{"H", "A"}, max_iterations);
}

} // namespace hybridflow
