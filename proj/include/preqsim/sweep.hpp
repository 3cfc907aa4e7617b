#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "preqsim/engine.hpp"
#include "preqsim/oracle.hpp"

namespace preqsim {

/// One fully resolved simulation point. Owns its scenario copy (with the
/// prediction vector already substituted) so concurrent runs share nothing.
struct RunConfig {
    Scenario scenario;
    Algorithm algo = Algorithm::PBP;
    bool twin_arrivals = false;
    Discipline discipline = Discipline::Fifo;
    double V = 1.0;
    std::uint64_t seed = 1;
    long long T = 1000;
    bool check_twin = true;
    bool packet_log = false;
    bool slot_trace = false;
    double burn_in = 0.1;

    EngineOptions options() const;
};

RunReport execute_run(const RunConfig& cfg);

/// Declarative sweep: the cross product of the lists below, enumerated in
/// the fixed order algorithm -> discipline -> V -> window variant -> seed.
struct ExperimentPlan {
    std::string scenario_ref = "paper_sec6";
    std::vector<std::string> algorithms = {"pbp"};
    std::vector<std::string> disciplines = {"fifo"};
    std::vector<double> V = {10.0};
    std::vector<double> rho;          // scales the scenario's prediction vector
    std::vector<std::vector<int>> D;  // explicit windows; overrides rho
    std::vector<std::uint64_t> seeds = {1};
    long long T = 500000;
    std::string out_dir;
    bool check_twin = false;  // sweeps skip the tracker for speed
    bool packet_log = false;
    bool slot_trace = false;
    double burn_in = 0.1;

    static ExperimentPlan from_json_text(const std::string& text);
    std::string to_json_text() const;
};

std::vector<RunConfig> expand_plan(const ExperimentPlan& plan, const Scenario& base);

/// Serial reference executor, kept alongside the OpenMP one for testing and
/// benchmarking. Both return reports in config order, so outputs are
/// identical regardless of the worker count.
std::vector<RunReport> run_plan_serial(std::span<const RunConfig> configs);
std::vector<RunReport> run_plan_parallel(std::span<const RunConfig> configs, int workers = 0);

/// Theorem-2 drift constant B = N/2 * (mu_max^2 + A_max^2).
double drift_penalty_bound(const Scenario& sc);

/// Writes sweep.csv, per-run pmf CSVs and report JSONs, and summary.json
/// (the only file carrying a timestamp) into out_dir. Returns the sweep CSV
/// text for convenience.
std::string write_artifacts(const std::string& out_dir, const ExperimentPlan& plan,
                            std::span<const RunConfig> configs,
                            std::span<const RunReport> reports, const Scenario& base);

}  // namespace preqsim
