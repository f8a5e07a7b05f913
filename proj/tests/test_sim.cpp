#include <gtest/gtest.h>

#include "util.hpp"

namespace {

hf::NoiseModel uniform(double low, double high, std::uint64_t seed, double mean_scale = 1.0) {
    hf::NoiseModel n;
    n.kind = hf::NoiseKind::uniform_factor;
    n.low = low;
    n.high = high;
    n.mean_scale = mean_scale;
    n.seed = seed;
    return n;
}

hf::Catalog narrow_catalog() {
    return {private_type("priv", 2, 1.0), public_type("p-fast", 1, 2.0, 30.0), public_type("p-slow", 2, 0.8, 6.0)};
}

double busy_total(hf::ExecutionTrace const & t) {
    double sum = 0.0;
    for (auto const & [id, s] : t.busy_core_seconds) sum += s;
    return sum;
}

} // namespace

TEST(Sim, ZeroNoiseReplaysThePlan) {
    auto dag = hf::iteration_instance(hf::builtin_dengue_workflow(), 0);
    auto s = hf::plan_iteration(dag, hf::default_catalog(), {}, {});
    auto trace = hf::execute(s, {});
    for (std::size_t i = 0; i < s.assignments.size(); ++i) {
        EXPECT_EQ(trace.records[i].actual_start, s.assignments[i].start);
        EXPECT_EQ(trace.records[i].actual_end, s.assignments[i].end);
    }
    EXPECT_EQ(trace.makespan(), hf::makespan(s));
}

TEST(Sim, OverrunDelaysSuccessor) {
    auto fast = public_type("p", 1, 1.0, 1.0);
    auto dag = hf::make_dag({task("A", 100.0), task("B", 100.0)}, {{0, 1}});
    auto s = build_schedule(dag, {{0, fast}, {1, fast}}, {{"A", 0, 0.0}, {"B", 1, 100.0}});
    auto trace = hf::execute(s, uniform(2.0, 2.0, 1));
    EXPECT_EQ(trace.records[0].actual_end, 200.0);
    EXPECT_EQ(trace.records[1].actual_start, trace.records[0].actual_end);
    EXPECT_EQ(trace.records[1].actual_end, 400.0);
}

TEST(Sim, EarlyFinishDoesNotPullWorkAhead) {
    auto fast = public_type("p", 1, 1.0, 1.0);
    auto dag = hf::make_dag({task("A", 100.0), task("B", 100.0)}, {{0, 1}});
    auto s = build_schedule(dag, {{0, fast}}, {{"A", 0, 0.0}, {"B", 0, 100.0}});
    auto trace = hf::execute(s, uniform(0.5, 0.5, 1));
    EXPECT_EQ(trace.records[0].actual_end, 50.0);
    EXPECT_EQ(trace.records[1].actual_start, 100.0);
}

TEST(Sim, SharedCoreQueuesInPlannedOrder) {
    auto one = public_type("p", 1, 1.0, 1.0);
    auto dag = hf::make_dag({task("A", 100.0), task("B", 50.0)}, {});
    auto s = build_schedule(dag, {{0, one}}, {{"A", 0, 0.0}, {"B", 0, 100.0}});
    auto trace = hf::execute(s, uniform(1.5, 1.5, 1));
    EXPECT_EQ(trace.records[0].actual_end, 150.0);
    EXPECT_EQ(trace.records[1].actual_start, 150.0);  // waited for the core
}

TEST(Sim, SameSeedSameTrace) {
    auto cfg = dengue_config(42);
    auto dag = hf::iteration_instance(cfg.workflow, 0);
    auto s = hf::plan_iteration(dag, cfg.catalog, {}, cfg.pricing);
    auto a = hf::render_trace(hf::execute(s, cfg.noise));
    auto b = hf::render_trace(hf::execute(s, cfg.noise));
    EXPECT_EQ(a, b);
    auto other = cfg.noise;
    other.seed = 43;
    EXPECT_NE(a, hf::render_trace(hf::execute(s, other)));
}

TEST(Sim, NoiseFactorIsKeyedByTaskAndIteration) {
    auto n = uniform(0.8, 1.2, 5);
    EXPECT_EQ(n.factor("A", 0), n.factor("A", 0));
    EXPECT_NE(n.factor("A", 0), n.factor("A", 1));
    EXPECT_NE(n.factor("A", 0), n.factor("B", 0));
    for (int k = 0; k < 1000; ++k) {
        double f = n.factor("T" + std::to_string(k), k);
        ASSERT_GE(f, 0.8);
        ASSERT_LT(f, 1.2);
    }
}

TEST(Sim, NoiseValidation) {
    EXPECT_THROW(hf::validate_noise(uniform(0.0, 1.0, 1)), hf::Error);
    EXPECT_THROW(hf::validate_noise(uniform(1.2, 1.0, 1)), hf::Error);
    EXPECT_THROW(hf::validate_noise(uniform(0.8, 1.2, 1, 0.0)), hf::Error);
    hf::NoiseModel none;
    none.mean_scale = 0.5;
    EXPECT_THROW(hf::validate_noise(none), hf::Error);
}

TEST(Metrics, EmptyTrace) {
    hf::ResourcePool pool(hf::default_catalog());
    auto m = hf::account({}, pool, {});
    EXPECT_EQ(m.makespan_actual, 0.0);
    EXPECT_EQ(m.cost, 0.0);
    EXPECT_EQ(m.energy_proxy, 0.0);
}

TEST(Metrics, SingleTaskArithmetic) {
    auto pub = public_type("p", 1, 1.0, 10.0);
    hf::ResourcePool pool({pub});
    auto dag = hf::make_dag({task("A", 50.0)}, {});
    auto s = hf::adopt(pool, build_schedule(dag, {{0, pub}}, {{"A", 0, 0.0}}), 0.0);
    auto trace = hf::execute(s, {});
    pool.release(0, trace.end_time());
    auto m = hf::account(trace, pool, {}, {2.0, 0.0});
    EXPECT_EQ(m.makespan_actual, 50.0);
    EXPECT_EQ(m.cost, 10.0);
    EXPECT_EQ(m.energy_proxy, 100.0);
}

TEST(Metrics, OverlappingTasksOnTwoCores) {
    auto pub = public_type("p", 2, 1.0, 10.0);
    hf::ResourcePool pool({pub, public_type("unused", 1, 1.0, 1.0)});
    auto dag = hf::make_dag({task("A", 50.0), task("B", 50.0)}, {});
    auto s = hf::adopt(pool, build_schedule(dag, {{0, pub}}, {{"A", 0, 0.0}, {"B", 0, 0.0}}), 0.0);
    auto trace = hf::execute(s, {});
    pool.release(0, trace.end_time());
    auto m = hf::account(trace, pool, {});
    EXPECT_EQ(m.energy_proxy, 100.0);
    ASSERT_EQ(m.machine_hours.size(), 1u);
    EXPECT_DOUBLE_EQ(m.machine_hours.at("p"), 50.0 / 3600.0);
}

TEST(Metrics, OpenLeaseIsAnError) {
    auto pub = public_type("p", 1, 1.0, 10.0);
    hf::ResourcePool pool({pub});
    auto dag = hf::make_dag({task("A", 50.0)}, {});
    auto s = hf::adopt(pool, build_schedule(dag, {{0, pub}}, {{"A", 0, 0.0}}), 0.0);
    EXPECT_THROW(hf::account(hf::execute(s, {}), pool, {}), hf::Error);
}

TEST(SimProperty, ZeroNoiseIdentityOnRandomPlans) {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        auto dag = hf::random_dag(seed);
        auto s = hf::plan_iteration(dag, narrow_catalog(), {}, {}, hf::GreedyOptions::capped(3));
        auto trace = hf::execute(s, {});
        ASSERT_EQ(trace.makespan(), hf::makespan(s)) << seed;
        for (std::size_t i = 0; i < s.assignments.size(); ++i) {
            ASSERT_EQ(trace.records[i].actual_start, s.assignments[i].start);
            ASSERT_EQ(trace.records[i].actual_end, s.assignments[i].end);
        }
    }
}

TEST(SimProperty, NoisyMakespanStaysWithinBounds) {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        auto dag = hf::random_dag(seed);
        auto s = hf::plan_iteration(dag, narrow_catalog(), {}, {}, hf::GreedyOptions::capped(3));
        for (auto [low, high] : {std::pair{0.8, 1.2}, std::pair{0.5, 2.0}, std::pair{1.0, 3.0}}) {
            auto trace = hf::execute(s, uniform(low, high, seed));
            // Critical path of the planned runtimes on the chosen machines.
            std::vector<double> finish(dag.size(), 0.0);
            double cp = 0.0;
            for (std::size_t i = 0; i < dag.size(); ++i) {
                double st = 0.0;
                for (auto p : dag.preds[i]) st = std::max(st, finish[p]);
                finish[i] = st + s.assignments[i].runtime;
                cp = std::max(cp, finish[i]);
            }
            // The last task ends a back-to-back chain that began at some planned start.
            double latest_start = 0.0;
            double total = 0.0;
            for (auto const & a : s.assignments) {
                latest_start = std::max(latest_start, a.start);
                total += a.runtime;
            }
            double eps = 1e-9 * hf::makespan(s);
            ASSERT_GE(trace.makespan(), low * cp - eps) << seed;
            ASSERT_LE(trace.end_time(), latest_start + high * total + eps) << seed;
            ASSERT_GE(trace.end_time(), std::min(1.0, low) * hf::makespan(s) - eps) << seed;
        }
    }
}

TEST(SimProperty, EnergyInvariantUnderConsolidation) {
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        auto dag = hf::random_dag(seed);
        auto s = hf::greedy_min_makespan(dag, narrow_catalog(), {});
        auto c = hf::consolidate(s);
        double before = busy_total(hf::execute(s, {}));
        double after = busy_total(hf::execute(c, {}));
        ASSERT_NEAR(after, before, 1e-12 * before) << seed;
        ASSERT_LE(hf::schedule_cost(c, {}), hf::schedule_cost(s, {})) << seed;
    }
}
