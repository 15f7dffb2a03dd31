#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "renaming/adversary.hpp"
#include "renaming/checker.hpp"
#include "renaming/netsim.hpp"
#include "renaming/opbr.hpp"
#include "renaming/report.hpp"
#include "renaming/rng.hpp"
#include "renaming/twostep.hpp"

namespace renaming {

inline SystemParams params_from(const RunConfig& c) {
    SystemParams p{c.n, c.t, c.n_max};
    p.validate(c.algorithm);
    return p;
}

inline void validate_config(const RunConfig& c) {
    SystemParams p = params_from(c);
    if (static_cast<int>(c.faulty.size()) > c.t)
        throw ConfigError("config lists " + std::to_string(c.faulty.size()) +
                          " faulty processes but t = " + std::to_string(c.t));
    std::set<int> indices;
    for (const FaultSpec& f : c.faulty) {
        if (f.index < 1 || f.index > c.n)
            throw ConfigError("faulty index " + std::to_string(f.index) + " outside [1, n]");
        if (!indices.insert(f.index).second)
            throw ConfigError("duplicate faulty index " + std::to_string(f.index));
        const auto& catalog = adversary_catalog();
        if (std::find(catalog.begin(), catalog.end(), f.strategy) == catalog.end())
            throw ConfigError("unknown adversary strategy: " + f.strategy);
    }
    std::size_t correct_count = static_cast<std::size_t>(c.n) - c.faulty.size();
    if (!c.correct_ids.empty()) {
        if (c.correct_ids.size() != correct_count)
            throw ConfigError("correct_ids must list exactly n - |faulty| = " +
                              std::to_string(correct_count) + " ids");
        std::set<std::int64_t> seen;
        for (std::int64_t id : c.correct_ids) {
            if (id < 1 || id > p.n_max)
                throw ConfigError("correct id " + std::to_string(id) + " outside [1, n_max]");
            if (!seen.insert(id).second)
                throw ConfigError("duplicate correct id " + std::to_string(id));
        }
    }
}

inline int run_total_rounds(const RunConfig& c) {
    if (c.algorithm == Algorithm::TwoStep) return twostep_total_rounds();
    SystemParams p{c.n, c.t, c.n_max};
    return opbr_total_rounds(p, opbr_variant(c.algorithm));
}

// Executes one configured run end to end: builds the process handles, drives
// the lockstep engine for the variant's exact round budget, evaluates every
// applicable check, and assembles the report.
inline RunReport run(const RunConfig& config) {
    validate_config(config);
    SystemParams params = params_from(config);
    const int approx =
        config.algorithm == Algorithm::TwoStep
            ? 0
            : approximation_steps(params, opbr_variant(config.algorithm));
    const int total_rounds = run_total_rounds(config);

    std::map<int, FaultSpec> faulty_by_index;
    for (const FaultSpec& f : config.faulty) faulty_by_index.emplace(f.index, f);

    std::vector<ProcessHandle> handles;
    RunContext ctx;
    ctx.params = params;
    ctx.algorithm = config.algorithm;
    ctx.approx_steps = approx;
    ctx.total_rounds = total_rounds;

    std::size_t next_correct = 0;
    for (int index = 1; index <= config.n; ++index) {
        ProcessHandle h;
        h.index = index;
        auto fit = faulty_by_index.find(index);
        if (fit != faulty_by_index.end()) {
            h.adversary = make_adversary(strategy_spec_from(fit->second), index, params,
                                         config.algorithm);
            ctx.faulty_indices.push_back(index);
        } else {
            ProcId id{config.correct_ids.empty()
                          ? 10 * static_cast<std::int64_t>(index)
                          : config.correct_ids.at(next_correct++)};
            if (config.algorithm == Algorithm::TwoStep)
                h.protocol = std::make_unique<TwoStepProcess>(id, params);
            else
                h.protocol = std::make_unique<OpbrProcess>(id, params,
                                                           opbr_variant(config.algorithm));
            ctx.correct_ids.emplace(index, id);
        }
        handles.push_back(std::move(h));
    }

    RunResult result = run_protocol(params, handles, total_rounds, config.seed, config.algorithm);

    RunReport report;
    report.config = config;
    report.names = result.names;
    report.metrics = result.metrics;
    report.checks = check_all(ctx, result.trace, result.metrics, result.names);
    report.total_rounds = total_rounds;
    report.max_final_spread_value = max_final_spread(ctx, result.trace);
    report.paper_constants.delta_value = delta(params);
    if (params.t >= 1)
        report.paper_constants.sigma_t_paper = (params.n - 2 * params.t) / params.t + 1;
    report.paper_constants.c_sel = select_count(params.n - 2 * params.t, params.t);
    report.paper_constants.round_budget = approx;
    if (config.emit_trace) report.trace = std::move(result.trace);
    return report;
}

// ---- sweeps --------------------------------------------------------------

struct SweepPoint {
    RunConfig config;
    std::string strategy;  // "none" for fault-free points
};

struct SweepRow {
    int n = 0;
    int t = 0;
    std::string algorithm;
    std::string strategy;
    std::uint64_t seed = 0;
    std::int64_t rounds = 0;
    bool all_checks_pass = false;
    Rational max_final_spread;
};

// Faulty indices for a grid point, drawn from the seed so that fault
// placement is not accidentally aligned with id order.
inline std::vector<int> derive_faulty_indices(int n, int count, std::uint64_t seed) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i + 1;
    SplitMix64 rng(mix_seed(seed, 0xFA117));
    rng.shuffle(all);
    std::vector<int> out(all.begin(), all.begin() + count);
    std::sort(out.begin(), out.end());
    return out;
}

inline RunConfig grid_point_config(int n, int t, Algorithm algorithm, const std::string& strategy,
                                   std::uint64_t seed) {
    RunConfig c;
    c.n = n;
    c.t = t;
    c.algorithm = algorithm;
    c.seed = seed;
    if (strategy != "none" && t > 0) {
        int total = c.algorithm == Algorithm::TwoStep
                        ? twostep_total_rounds()
                        : opbr_total_rounds(SystemParams{n, t, c.n_max}, opbr_variant(algorithm));
        for (int index : derive_faulty_indices(n, t, seed)) {
            FaultSpec f;
            f.index = index;
            f.strategy = strategy;
            if (strategy == "crash")
                f.params["from_round"] = 1 + static_cast<int>(seed % static_cast<std::uint64_t>(total));
            c.faulty.push_back(std::move(f));
        }
    }
    return c;
}

// Cross product of the grid axes; points whose parameters violate the
// selected algorithm's constraint are skipped with a notice.
inline std::vector<SweepPoint> expand_grid(const json& grid, std::vector<std::string>& notices) {
    auto int_list = [](const json& j) {
        std::vector<int> out;
        if (j.is_array()) {
            for (const json& v : j) out.push_back(v.get<int>());
        } else if (j.is_object()) {
            for (int v = j.at("from").get<int>(); v <= j.at("to").get<int>(); ++v) out.push_back(v);
        } else {
            out.push_back(j.get<int>());
        }
        return out;
    };

    std::vector<int> ns = int_list(grid.at("n"));
    std::vector<int> ts = int_list(grid.at("t"));
    std::vector<std::string> algorithms = grid.at("algorithms").get<std::vector<std::string>>();
    std::vector<std::string> strategies =
        grid.contains("strategies") ? grid.at("strategies").get<std::vector<std::string>>()
                                    : std::vector<std::string>{"none"};
    std::vector<std::uint64_t> seeds;
    if (grid.contains("seeds") && grid.at("seeds").is_array()) {
        seeds = grid.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
        std::uint64_t count = grid.contains("seeds") ? grid.at("seeds").get<std::uint64_t>() : 1;
        for (std::uint64_t s = 1; s <= count; ++s) seeds.push_back(s);
    }

    std::vector<SweepPoint> out;
    for (const std::string& alg_name : algorithms) {
        Algorithm alg = algorithm_from_name(alg_name);
        for (int n : ns)
            for (int t : ts)
                for (const std::string& strategy : strategies)
                    for (std::uint64_t seed : seeds) {
                        try {
                            RunConfig c = grid_point_config(n, t, alg, strategy, seed);
                            validate_config(c);
                            out.push_back({std::move(c), strategy});
                        } catch (const ConfigError& e) {
                            notices.push_back("skipping n=" + std::to_string(n) +
                                              " t=" + std::to_string(t) + " " + alg_name + ": " +
                                              e.what());
                        }
                    }
    }
    return out;
}

inline SweepRow sweep_row_from(const SweepPoint& point, const RunReport& report) {
    SweepRow row;
    row.n = point.config.n;
    row.t = point.config.t;
    row.algorithm = algorithm_name(point.config.algorithm);
    row.strategy = point.strategy;
    row.seed = point.config.seed;
    row.rounds = report.metrics.rounds_executed;
    row.all_checks_pass = report.all_checks_pass();
    row.max_final_spread = report.max_final_spread_value;
    return row;
}

// Runs every point; rows come back in grid order regardless of the number of
// worker threads.
inline std::vector<SweepRow> sweep(const std::vector<SweepPoint>& points, int jobs) {
    std::vector<SweepRow> rows(points.size());
    if (jobs < 1) jobs = 1;
    if (jobs == 1) {
        for (std::size_t i = 0; i < points.size(); ++i)
            rows[i] = sweep_row_from(points[i], run(points[i].config));
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1))
                    rows[i] = sweep_row_from(points[i], run(points[i].config));
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (std::thread& th : workers) th.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "n,t,algorithm,strategy,seed,rounds,all_checks_pass,max_final_spread_num,"
          "max_final_spread_den\n";
    for (const SweepRow& r : rows) {
        os << r.n << ',' << r.t << ',' << r.algorithm << ',' << r.strategy << ',' << r.seed << ','
           << r.rounds << ',' << (r.all_checks_pass ? "true" : "false") << ','
           << r.max_final_spread.num_str() << ',' << r.max_final_spread.den_str() << "\n";
    }
}

}  // namespace renaming
