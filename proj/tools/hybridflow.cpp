// hybridflow: run a scenario in greedy-only and/or iterative mode and write
// per-iteration reports, or check the heuristic against the exhaustive oracle.
//
// Exit codes: 0 ok, 2 config error, 3 validation error, 4 runtime error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <hybridflow/scenario.hpp>

namespace hf = hybridflow;

namespace {

int exit_code(hf::ErrorKind kind) {
    switch (kind) {
    case hf::ErrorKind::config:
    case hf::ErrorKind::not_found:
        return 2;
    case hf::ErrorKind::syntax:
    case hf::ErrorKind::semantic:
    case hf::ErrorKind::limits:
        return 3;
    default:
        return 4;
    }
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"Iterative workflow scheduling on a simulated hybrid cloud"};
    std::string scenario_path;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool verify = false;
    std::size_t max_tasks = 8;
    int max_machines = 4;
    int batch = 0;
    int batch_tasks = 5;
    std::uint64_t batch_seed = 1;

    app.add_option("scenario", scenario_path, "scenario file (JSON)");
    app.add_option("--mode", mode, "greedy, iterative or both (overrides the scenario)")
        ->check(CLI::IsMember({"greedy", "iterative", "both"}));
    app.add_option("--seed", seed, "noise seed (overrides the scenario)");
    app.add_option("--out", out_dir, "report directory");
    app.add_flag("--verify-oracle", verify, "compare the heuristic with the exhaustive frontier");
    app.add_option("--max-tasks", max_tasks, "oracle task limit");
    app.add_option("--max-machines", max_machines, "oracle machine limit");
    app.add_option("--batch", batch, "with --verify-oracle: number of random instances instead of the scenario");
    app.add_option("--batch-tasks", batch_tasks, "tasks per random instance");
    app.add_option("--batch-seed", batch_seed, "first random instance seed");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const & e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        hf::OracleLimits limits{max_tasks, max_machines};
        if (verify && batch > 0) {
            auto tally = hf::verify_random_batch(batch, batch_seed, batch_tasks, hf::default_catalog(), {}, limits);
            std::cout << hf::oracle_header() << tally.rows << hf::render_tally(tally);
            return 0;
        }
        if (scenario_path.empty()) {
            std::cerr << "error: a scenario file is required\n";
            return 2;
        }
        auto config = hf::load_scenario(scenario_path, seed);
        if (!mode.empty()) config.mode = hf::parse_mode(mode);

        if (verify) {
            auto tally = hf::verify_oracle(config, limits);
            std::cout << hf::oracle_header() << tally.rows << hf::render_tally(tally);
            return 0;
        }

        auto result = hf::run_scenario(config);
        hf::write_files(out_dir, result.files);
        if (result.summary) std::cout << hf::render_summary(*result.summary);
        for (auto const & run : result.runs) {
            std::cout << hf::to_string(run.mode) << ": " << run.reports.size() << " iterations, total cost "
                      << hf::format_number(run.total_cost) << '\n';
        }
        return 0;
    } catch (hf::Error const & e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (std::exception const & e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
