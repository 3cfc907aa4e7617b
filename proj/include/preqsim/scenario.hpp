#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "preqsim/rng.hpp"

namespace preqsim {

/// Configuration error with the path of the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Finite distribution over non-negative integer values (packet counts).
struct DiscreteDist {
    std::vector<int> support;
    std::vector<double> probs;

    double mean() const;
    double variance() const;
    int sample(RngStream& rng) const;  // inverse-cdf scan, deterministic
};

using PowerVec = std::vector<double>;

enum class RateRule { FloorLog, Table };
enum class CostRule { TotalPower, Table };

/// Full system description: arrival and channel processes, per-state power
/// action sets, rate/cost rules and the prediction window vector. Immutable
/// after validate(); safe to share across concurrent runs.
struct Scenario {
    std::string name = "custom";
    int n_users = 0;
    std::vector<DiscreteDist> arrivals;               // one per user
    std::vector<std::vector<double>> channel_states;  // joint states s_1..s_K
    std::vector<double> channel_probs;
    std::vector<std::vector<PowerVec>> actions;       // per state
    RateRule rate_rule = RateRule::FloorLog;
    double log_base = 0.0;                            // 0 => natural log
    CostRule cost_rule = CostRule::TotalPower;
    std::vector<std::vector<std::vector<int>>> rate_table;  // [state][action][user]
    std::vector<std::vector<double>> cost_table;            // [state][action]
    std::vector<int> prediction;                      // D_n, slots

    // derived by validate()
    bool validated = false;
    std::vector<double> lambda;
    int a_max = 0;
    int mu_max = 0;
    double p_max = 0.0;
    double f_max = 0.0;
    std::vector<std::vector<std::vector<int>>> rate_cache;  // [state][action][user]
    std::vector<std::vector<double>> cost_cache;            // [state][action]

    int n_states() const { return static_cast<int>(channel_states.size()); }
    int n_actions(int state) const { return static_cast<int>(actions[state].size()); }
};

/// Checks every invariant, computes lambda and the A_max/mu_max/f_max bounds
/// by exhaustive evaluation, and fills the rate/cost caches.
/// Throws ConfigError naming the offending field.
Scenario validate(Scenario s);

std::vector<int> service_rate(const Scenario& sc, int state, int action);
double cost(const Scenario& sc, int state, int action);

/// RNG bundle: one independent stream per stochastic process so that
/// changing D or V never perturbs the sampled paths.
struct ScenarioRng {
    RngStream channel;
    std::vector<RngStream> arrival;

    ScenarioRng(const Scenario& sc, std::uint64_t seed);
};

std::vector<int> sample_arrivals(const Scenario& sc, ScenarioRng& rng);
int sample_channel(const Scenario& sc, ScenarioRng& rng);

/// The two-user downlink scenario used throughout the experiments:
/// bursty arrivals (3 w.p. 0.2 / 2 w.p. 0.5), two-level channels,
/// mu = floor(ln(1 + S*P)), exclusive power {0,5,10}, total-power cost,
/// D = (5,10). Channel states are i.i.d. uniform over the four joint
/// states (the preset default, flagged in reports).
Scenario paper_sec6_preset();

Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);
std::string scenario_to_json_text(const Scenario& sc);

/// Resolves "paper_sec6" or a file path.
Scenario resolve_scenario(const std::string& name_or_path);

struct RandomScenarioOptions {
    int max_users = 3;
    int max_states = 3;
    int max_actions = 4;
    int max_window = 10;
    int max_rate = 3;
    int max_arrival = 3;
};

/// Small random scenario with table rates: arbitrary finite action sets,
/// dyadic probabilities, random prediction windows. May be unstable, which
/// is fine for sample-path properties.
Scenario random_scenario(RngStream& rng, const RandomScenarioOptions& opts = {});

/// Two-user variant for offline-policy comparisons: guaranteed positive
/// slack, arrival rates snapped to the 1/80 lattice.
Scenario random_stable_scenario(RngStream& rng);

}  // namespace preqsim
