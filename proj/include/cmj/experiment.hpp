#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cmj/interacting_sim.hpp"
#include "cmj/interaction.hpp"
#include "cmj/pde.hpp"
#include "cmj/point_process.hpp"

namespace cmj {

inline constexpr std::string_view kVersion = "cmjsim 0.1.0";

// τ families: constant{rate}, window{rate,from,to}, exp_decay{rate,decay},
// tabulated{ages,values | csv}, renewal{shape,scale,max_births},
// atoms{ages} (simulation only).
struct RateBlock {
    std::string family = "constant";
    double rate = 1.0;
    double from = 0.0, to = 1.0;
    double decay = 0.0;
    double shape = 1.0, scale = 1.0;
    std::uint64_t max_births = 1'000'000;
    std::vector<double> ages, values;
    bool operator==(const RateBlock&) const = default;
};

// g families: exponential{rate}, uniform{width}, tabulated{ages,values | csv}
struct InitialBlock {
    std::string family = "exponential";
    double rate = 1.0;
    double width = 1.0;
    std::vector<double> ages, values;
    bool operator==(const InitialBlock&) const = default;
};

// rules: constant{c}, immunity{K}, lockdown{K,kappa,theta}; optional declared
// lipschitz, which may not undercut the rule's own constant
struct RuleBlock {
    std::string rule = "constant";
    double c = 1.0;
    double K = 10.0;
    double kappa = 0.5, theta = 0.5;
    std::optional<double> lipschitz;
    bool operator==(const RuleBlock&) const = default;
};

struct NumericBlock {
    double T = 3.0;
    double dt = 1e-3;
    std::optional<double> A_max;
    double eps_grid = 1e-3;
    std::optional<double> h;
    double report_step = 0.1;
    bool operator==(const NumericBlock&) const = default;
};

struct RunBlock {
    std::vector<int> N{1000};
    std::uint64_t replicates = 1;
    std::uint64_t seed = 1;
    double eta = 0.2;
    std::uint64_t M = 1000;          // trees (nonlinear) or sampled chains (chains)
    std::vector<double> times;       // density times (nonlinear), window centres (chains)
    double window = 0.1;             // half-width of the chains birth window
    double eps = 0.5;                // tail level (immigration)
    std::optional<std::uint64_t> chain_steps;  // n for the dominating chain; default N
    bool export_forest = true;
    bool operator==(const RunBlock&) const = default;
};

struct ExperimentConfig {
    std::string kind = "solve";
    RateBlock tau;
    InitialBlock g;
    RuleBlock C;
    NumericBlock numeric;
    RunBlock run;
    bool operator==(const ExperimentConfig&) const = default;
};

inline constexpr std::string_view kKinds[] = {"solve",       "simulate", "nonlinear",  "couple",
                                              "immigration", "chains",   "convergence"};

// Relative csv paths resolve against base_dir. Throws ConfigError naming the
// offending field.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json dump_config(const ExperimentConfig& c);
void validate_config(const ExperimentConfig& c);

BirthProcessSpec make_birth_process(const RateBlock& b);
InitialAgeDensity make_initial_density(const InitialBlock& b);
InteractionRule make_rule(const RuleBlock& b);

std::string sha256_hex(std::string_view data);

// Writes every artifact of the experiment plus manifest.json into `out`.
// Work happens in `out`.partial, renamed on success and removed on failure.
void run_experiment(const ExperimentConfig& c, const std::filesystem::path& out, unsigned threads);

// sup over t ∈ {0, step, ..., T} of d̂(μ^N_t, u_t)
double sup_prohorov(const AgePath& path, const PdeSolution& sol, double step, double eps_grid);

struct ConvergenceSample {
    int N = 0;
    std::vector<double> sup_distances;
};

struct RateRow {
    int N = 0;
    double median = 0.0, q25 = 0.0, q75 = 0.0;
    std::size_t replicates = 0;
};

struct RateTable {
    std::vector<RateRow> rows;  // sorted by N
    double slope = 0.0;         // of log median on log N
};

// needs ≥ 3 distinct N and ≥ 30 replicates each
RateTable convergence_report(std::span<const ConvergenceSample> samples);

}  // namespace cmj
