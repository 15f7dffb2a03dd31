// Experiment runner for the renaming protocol library: executes one
// configured run, a batch sweep over a parameter grid, or re-checks a saved
// trace. Exit status: 0 = all checks pass, 1 = some check failed,
// 2 = configuration or I/O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "renaming/report.hpp"
#include "renaming/runner.hpp"

namespace {

int parallelism_from_env() {
    const char* env = std::getenv("RENAMESIM_JOBS");
    if (env == nullptr) return 1;
    int jobs = std::atoi(env);
    return jobs >= 1 ? jobs : 1;
}

renaming::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw renaming::ConfigError("cannot open " + path);
    try {
        return renaming::json::parse(in);
    } catch (const std::exception& e) {
        throw renaming::ConfigError(path + ": " + e.what());
    }
}

int cmd_run(const std::string& config_path, const std::string& trace_path,
            const std::string& out_path) {
    renaming::RunConfig config = renaming::config_from_json(load_json_file(config_path));
    if (!trace_path.empty()) config.emit_trace = true;
    renaming::RunReport report = renaming::run(config);

    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) throw renaming::ConfigError("cannot write " + trace_path);
        renaming::write_trace_jsonl(out, report.config, *report.trace, report.metrics,
                                    report.names);
    }
    std::string dump = renaming::to_json(report).dump(2);
    if (out_path.empty()) {
        std::cout << dump << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw renaming::ConfigError("cannot write " + out_path);
        out << dump << "\n";
    }
    return report.all_checks_pass() ? 0 : 1;
}

int cmd_sweep(const std::string& grid_path, const std::string& out_path) {
    renaming::json grid = load_json_file(grid_path);
    std::vector<std::string> notices;
    std::vector<renaming::SweepPoint> points = renaming::expand_grid(grid, notices);
    for (const std::string& notice : notices) std::cerr << notice << "\n";

    std::vector<renaming::SweepRow> rows = renaming::sweep(points, parallelism_from_env());
    std::ofstream out(out_path);
    if (!out) throw renaming::ConfigError("cannot write " + out_path);
    renaming::write_sweep_csv(out, rows);

    std::size_t failed = 0;
    for (const renaming::SweepRow& r : rows)
        if (!r.all_checks_pass) ++failed;
    std::cout << rows.size() << " runs, " << failed << " with failing checks\n";
    return failed == 0 ? 0 : 1;
}

int cmd_check(const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) throw renaming::ConfigError("cannot open " + trace_path);
    renaming::TraceFile file = renaming::read_trace_jsonl(in);

    renaming::validate_config(file.config);
    renaming::SystemParams params = renaming::params_from(file.config);
    renaming::RunContext ctx;
    ctx.params = params;
    ctx.algorithm = file.config.algorithm;
    ctx.approx_steps = file.config.algorithm == renaming::Algorithm::TwoStep
                           ? 0
                           : renaming::approximation_steps(
                                 params, renaming::opbr_variant(file.config.algorithm));
    ctx.total_rounds = renaming::run_total_rounds(file.config);
    for (const renaming::SnapshotRecord& s : file.trace.snapshots)
        ctx.correct_ids.emplace(s.proc_index, s.proc_id);
    for (const renaming::FaultSpec& f : file.config.faulty) ctx.faulty_indices.push_back(f.index);

    std::vector<renaming::CheckResult> checks =
        renaming::check_all(ctx, file.trace, file.metrics, file.names);
    for (const renaming::CheckResult& c : checks) {
        std::cout << (c.pass ? "pass" : "fail") << "  " << c.name;
        if (!c.pass) std::cout << "  (" << c.witness << ")";
        std::cout << "\n";
    }
    return renaming::all_pass(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator for Byzantine order-preserving renaming protocols"};
    app.require_subcommand(1);

    std::string config_path, trace_path, out_path, grid_path, csv_path;

    CLI::App* run_cmd = app.add_subcommand("run", "execute one configured run");
    run_cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
    run_cmd->add_option("--trace", trace_path, "also dump the trace (JSON Lines)");
    run_cmd->add_option("--out", out_path, "write the report here instead of stdout");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid");
    sweep_cmd->add_option("--grid", grid_path, "sweep grid (JSON)")->required();
    sweep_cmd->add_option("--out", csv_path, "summary CSV output path")->required();

    CLI::App* check_cmd = app.add_subcommand("check", "re-run the checker on a saved trace");
    check_cmd->add_option("--trace", trace_path, "trace file (JSON Lines)")->required();

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) return cmd_run(config_path, trace_path, out_path);
        if (sweep_cmd->parsed()) return cmd_sweep(grid_path, csv_path);
        return cmd_check(trace_path);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const renaming::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const renaming::TraceError& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
