#include <gtest/gtest.h>

#include <cmath>

#include "util.hpp"

namespace {

hf::RuntimeProfile scaled_profile(hf::IterationDag const & dag, double factor) {
    hf::RuntimeProfile p;
    for (auto const & t : dag.tasks) p.add(t.category, t.nominal_work * factor);
    return p;
}

// Pool holding the nominal iteration-0 plan of the dengue workflow.
std::pair<hf::ResourcePool, hf::Schedule> nominal_dengue_pool() {
    auto dag = hf::iteration_instance(hf::builtin_dengue_workflow(), 0);
    hf::ResourcePool pool(hf::default_catalog());
    auto s = hf::adopt(pool, hf::plan_iteration(dag, hf::default_catalog(), {}, {}), 0.0);
    return {std::move(pool), std::move(s)};
}

} // namespace

TEST(Profile, Examples) {
    hf::RuntimeProfile p;
    EXPECT_FALSE(p.estimate("x"));
    p.add("x", 60.0);
    EXPECT_EQ(*p.estimate("x"), 60.0);

    hf::RuntimeProfile q;
    q.add("x", 40.0);
    q.add("x", 80.0);
    EXPECT_EQ(*q.estimate("x"), 60.0);
    EXPECT_EQ(q.sample_count("x"), 2u);
    EXPECT_THROW(q.add("x", 0.0), hf::Error);
}

TEST(Profile, SamplesAreNormalizedBySpeed) {
    auto fast = public_type("p", 1, 2.0, 1.0);
    auto dag = hf::make_dag({task("A", 60.0, "cat")}, {});
    auto s = build_schedule(dag, {{0, fast}}, {{"A", 0, 0.0}});
    auto trace = hf::execute(s, {});
    ASSERT_EQ(trace.records[0].runtime(), 30.0);
    auto p = hf::update_profile({}, trace);
    EXPECT_EQ(*p.estimate("cat"), 60.0);
}

TEST(Gain, RelativeImprovement) {
    EXPECT_EQ(hf::relative_improvement(100.0, 50.0), 0.5);
    EXPECT_EQ(hf::relative_improvement(50.0, 100.0), -0.5);
    EXPECT_EQ(hf::relative_improvement(0.0, 0.0), 0.0);
    EXPECT_EQ(hf::weighted_gain({100.0, 10.0}, {100.0, 5.0}, {}), 0.25);
    EXPECT_THROW(hf::validate_thresholds({0.0, 1.0, 1.0}), hf::Error);
    EXPECT_THROW(hf::validate_thresholds({0.1, 0.0, 0.0}), hf::Error);
}

TEST(Replan, AccurateProfileKeepsTheScale) {
    auto [pool, current] = nominal_dengue_pool();
    auto g = hf::builtin_dengue_workflow();
    auto profile = scaled_profile(hf::iteration_instance(g, 1), 1.0);
    auto r = hf::replan(g, 1, profile, pool, hf::default_catalog(), {}, {});
    EXPECT_FALSE(r.decision.adopted);
    EXPECT_LT(r.decision.gain, 0.05);
    EXPECT_TRUE(r.decision.morph.empty());
    EXPECT_EQ(r.schedule.used_machines().size(), current.used_machines().size());
}

TEST(Replan, HalvedRuntimesScaleDown) {
    auto [pool, current] = nominal_dengue_pool();
    auto g = hf::builtin_dengue_workflow();
    auto profile = scaled_profile(hf::iteration_instance(g, 1), 0.5);
    auto r = hf::replan(g, 1, profile, pool, hf::default_catalog(), {}, {});
    ASSERT_TRUE(r.decision.adopted);
    EXPECT_GE(r.decision.gain, 0.05);
    EXPECT_LT(r.schedule.machines.size(), current.machines.size());
    EXPECT_LT(r.decision.candidate.cost, r.decision.incumbent.cost);
    hf::apply_morph(pool, r.decision.morph, 3000.0);
    EXPECT_EQ(pool.active().size(), r.schedule.machines.size());
    for (auto const & m : r.schedule.machines) EXPECT_EQ(pool.find(m.id).type, m.type);
    EXPECT_TRUE(hf::is_valid(r.schedule));
}

TEST(Replan, TripledRuntimesScaleUpWhenTimeDominates) {
    auto wf = hf::parse_workflow(hf::detail::read_file(source_path("workflows/diamond.wf")));
    auto dag1 = hf::iteration_instance(wf, 1);
    auto catalog = hf::default_catalog();
    hf::ResourcePool pool(catalog);
    pool.provision("public-small", 0.0);
    auto profile = scaled_profile(dag1, 3.0);
    hf::ReplanThresholds deadline{0.05, 10.0, 1.0};
    auto r = hf::replan(wf, 1, profile, pool, catalog, {}, deadline);
    ASSERT_TRUE(r.decision.adopted);
    EXPECT_LT(r.decision.candidate.makespan, r.decision.incumbent.makespan);
    EXPECT_GT(r.decision.candidate.cost, r.decision.incumbent.cost);

    // The reduced instance is small enough for the oracle: the adopted plan
    // reaches its fastest point.
    auto f = hf::brute_force_optimum(dag1, catalog, profile, {}, {4, 3});
    EXPECT_EQ(r.decision.candidate.makespan, f.t_min());
    EXPECT_FALSE(f.dominated(r.decision.candidate));
}

TEST(Replan, EmptyPoolAdoptsCandidate) {
    auto g = hf::builtin_dengue_workflow();
    hf::ResourcePool pool(hf::default_catalog());
    auto r = hf::replan(g, 1, {}, pool, hf::default_catalog(), {}, {});
    EXPECT_TRUE(r.decision.adopted);
    EXPECT_EQ(r.decision.morph.provision.size(), r.schedule.machines.size());
}

TEST(Morph, ReusesMachinesByTypeAndNumbersNewOnes) {
    hf::Catalog cat{public_type("a", 1, 1.0, 1.0), public_type("b", 1, 1.0, 2.0)};
    hf::ResourcePool pool(cat);
    pool.provision("a", 0.0);  // 0
    pool.provision("b", 0.0);  // 1
    pool.provision("a", 0.0);  // 2
    auto dag = hf::make_dag({task("X", 10.0), task("Y", 10.0), task("Z", 10.0)}, {});
    auto s = build_schedule(dag, {{0, cat[1]}, {1, cat[1]}, {2, cat[0]}},
                            {{"X", 0, 0.0}, {"Y", 1, 0.0}, {"Z", 2, 0.0}});
    auto morph = hf::plan_morph(pool, s);
    EXPECT_EQ(morph.relabel.at(0), 1);
    EXPECT_EQ(morph.relabel.at(1), 3);
    EXPECT_EQ(morph.relabel.at(2), 0);
    EXPECT_EQ(morph.release, std::vector<int>{2});
    EXPECT_EQ(morph.provision, std::vector<std::string>{"b"});
    auto adopted = hf::adopt(pool, s, 10.0);
    EXPECT_EQ(pool.active().size(), 3u);
    for (auto const & m : adopted.machines) EXPECT_EQ(pool.find(m.id).type, m.type);
}

TEST(Run, LooplessWorkflowHasOneReport) {
    hf::ScenarioConfig c;
    c.workflow = hf::parse_workflow("task solo x 1000 0\n");
    for (auto mode : {hf::Mode::greedy, hf::Mode::iterative}) {
        auto run = hf::run_iterations(c, mode);
        ASSERT_EQ(run.reports.size(), 1u);
        EXPECT_FALSE(run.reports[0].replanned);
        EXPECT_TRUE(run.pool.active().empty());
    }
    EXPECT_THROW(hf::run_iterations(c, hf::Mode::both), hf::Error);
}

TEST(Run, DengueShapeAndDeterminism) {
    auto c = dengue_config(42);
    auto a = hf::run_iterations(c, hf::Mode::iterative);
    auto b = hf::run_iterations(c, hf::Mode::iterative);
    ASSERT_EQ(a.reports, b.reports);
    ASSERT_EQ(a.reports.size(), 5u);
    EXPECT_FALSE(a.reports[0].replanned);
    EXPECT_LT(a.reports[1].machines_total(), a.reports[0].machines_total());
    EXPECT_TRUE(a.reports[1].replanned);
    EXPECT_EQ(a.reports[2].machines_total(), a.reports[3].machines_total());
    EXPECT_EQ(a.reports[3].machines_total(), a.reports[4].machines_total());
}

TEST(Run, ReportsAreConsistentWithTraces) {
    auto c = dengue_config(42);
    auto run = hf::run_iterations(c, hf::Mode::iterative);
    double now = 0.0;
    for (std::size_t k = 0; k < run.reports.size(); ++k) {
        EXPECT_EQ(run.offsets[k], now);
        EXPECT_EQ(run.reports[k].makespan_actual, run.traces[k].makespan());
        EXPECT_EQ(run.reports[k].makespan_est, hf::makespan(run.schedules[k]));
        EXPECT_TRUE(hf::is_valid(run.schedules[k]));
        now += run.traces[k].end_time();
        if (k > 0) { EXPECT_GE(run.reports[k].cost_to_date, run.reports[k - 1].cost_to_date); }
    }
    EXPECT_EQ(run.total_cost, run.reports.back().cost_to_date);
}

TEST(RunProperty, AdoptionFollowsTheThreshold) {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        for (auto const * file : {"scenarios/dengue.json", "scenarios/diamond.json", "scenarios/chain_fan.json"}) {
            auto c = hf::load_scenario(source_path(file), seed);
            auto run = hf::run_iterations(c, hf::Mode::iterative);
            for (std::size_t k = 1; k < run.decisions.size(); ++k) {
                auto const & d = run.decisions[k];
                ASSERT_EQ(d.gain, hf::weighted_gain(d.incumbent, d.candidate, c.thresholds));
                ASSERT_EQ(d.adopted, d.gain >= c.thresholds.min_relative_gain) << file << " " << seed;
                ASSERT_EQ(run.reports[k].replanned, d.adopted);
            }
        }
    }
}

TEST(RunProperty, IterativeIsNoDearerOnDengue) {
    // Holds on the bundled scenario across noise seeds and mean scales up to
    // 1.3x the nominal estimates. Not a general theorem: quantum-boundary
    // effects and deliberate scale-ups break it elsewhere.
    for (double scale : {0.3, 0.5, 0.8, 1.0, 1.3}) {
        for (std::uint64_t seed = 1; seed <= 60; ++seed) {
            auto c = dengue_config(seed);
            c.noise.mean_scale = scale;
            auto g = hf::run_iterations(c, hf::Mode::greedy);
            auto it = hf::run_iterations(c, hf::Mode::iterative);
            ASSERT_LE(it.total_cost, g.total_cost) << "scale " << scale << " seed " << seed;
        }
    }
}

TEST(RunProperty, ProfileConvergesToTrueMean) {
    // Each dengue category is observed once per iteration.
    double err_first = 0.0;
    double err_last = 0.0;
    double rel_last_max = 0.0;
    int const seeds = 200;
    for (int seed = 1; seed <= seeds; ++seed) {
        auto c = dengue_config(static_cast<std::uint64_t>(seed));
        auto run = hf::run_iterations(c, hf::Mode::iterative);
        for (auto const & t : c.workflow.tasks()) {
            double truth = t.nominal_work * c.noise.mean_scale * (c.noise.low + c.noise.high) / 2.0;
            auto const & samples = run.profile.samples().at(t.category);
            ASSERT_EQ(samples.size(), 5u);
            double first = std::abs(samples.front() - truth) / truth;
            double last = std::abs(*run.profile.estimate(t.category) - truth) / truth;
            err_first += first;
            err_last += last;
            rel_last_max = std::max(rel_last_max, last);
        }
    }
    EXPECT_LT(err_last, err_first);
    EXPECT_LT(err_last / (seeds * 8), 0.06);
    EXPECT_LT(rel_last_max, 0.2);
}
