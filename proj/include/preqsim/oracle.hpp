#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "preqsim/scenario.hpp"

namespace preqsim {

/// Stationary randomized policy: one probability vector over the action list
/// of each channel state. Holds both the cost-optimal policy and the
/// stabilizability certificate (the best achievable slack).
struct PolicySolution {
    bool feasible = false;
    double f_star = 0.0;                       // minimum average cost
    std::vector<std::vector<double>> probs;    // per state, per action
    std::vector<double> rates;                 // r_n at the min-cost policy
    double eta = 0.0;                          // max-min slack over all policies
    std::vector<double> slack_rates;           // r_n at the max-slack policy
    int binding_user = -1;                     // argmin_n (r_n - lambda_n)
};

class InfeasibleScenario : public std::runtime_error {
public:
    InfeasibleScenario(int user, const std::string& what)
        : std::runtime_error(what), user_(user) {}
    int user() const { return user_; }

private:
    int user_;
};

/// Exact LP over {a_m^(s_i)}: minimize average cost subject to the per-user
/// rate constraints. Solved with an in-repo dense two-phase simplex
/// (Bland's rule); problem sizes are tens of variables. Also solves the
/// max-slack LP to produce eta. Never looks at the prediction vector:
/// the optimum is prediction-independent by construction.
PolicySolution solve_min_cost(const Scenario& sc);

struct DualPoint {
    std::vector<double> gamma;
    double g = 0.0;
    std::vector<int> argmin_action;  // per state, lowest index on ties
};

/// Evaluates the dual function at gamma: per state, minimize
/// V*f + sum_n gamma_n*(lambda_n - mu_n) over the finite action set,
/// then average over states.
DualPoint dual_value(const Scenario& sc, double V, std::span<const double> gamma);

struct GammaStar {
    std::vector<double> gamma;          // refined argmax, lex-smallest on ties
    double g = 0.0;
    double plateau_diameter = 0.0;      // exact-tie set on the full-box scan
    std::vector<double> plateau_centroid;
    double resolution = 0.0;            // final grid spacing
};

struct DualGridBox {
    std::vector<double> lo, hi;
    int points_per_dim = 33;
};

struct DualScanResult {
    std::vector<double> best_gamma;  // lexicographically smallest argmax
    double best_g = 0.0;
    std::vector<std::vector<double>> plateau;
};

/// Grid scans of the dual over a box. The parallel version evaluates grid
/// points with OpenMP and reduces deterministically, so both return
/// bit-identical results.
DualScanResult scan_dual_grid_serial(const Scenario& sc, double V, const DualGridBox& box);
DualScanResult scan_dual_grid_parallel(const Scenario& sc, double V, const DualGridBox& box);

/// Maximizes the concave piecewise-linear dual by coarse grid scans with
/// local refinement down to resolution 1e-3*V. Requires slack eta > 0
/// (otherwise the dual is unbounded); throws InfeasibleScenario referencing
/// the slack check.
GammaStar solve_gamma_star(const Scenario& sc, double V, bool parallel = true);

/// Left-shift of a delay pmf by D slots: mass at delays <= D collapses onto
/// zero, the tail moves left. Input must sum to 1 within 1e-9.
std::map<long long, double> shift_distribution(const std::map<long long, double>& pmf,
                                               int D);

/// Average delay reduction granted by prediction vector D over per-user
/// base delay pmfs, lambda-weighted. Throws std::invalid_argument when all
/// lambdas are zero or a pmf is malformed.
double delay_reduction(std::span<const std::map<long long, double>> pmfs,
                       std::span<const double> lambda, std::span<const int> D);

/// Mean of a finite pmf.
double pmf_mean(const std::map<long long, double>& pmf);

}  // namespace preqsim
