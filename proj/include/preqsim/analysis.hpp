#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "preqsim/records.hpp"
#include "preqsim/scheduler.hpp"

namespace preqsim {

/// Empirical delay distribution of one user's served packets.
struct DelayPmf {
    std::map<long long, double> p;  // delay (slots) -> probability
    std::uint64_t served = 0;
    std::uint64_t censored = 0;

    double mean() const;
    double at(long long k) const;  // 0 when absent
};

/// Everything a single run produces. Averages are over the post-burn-in
/// window; the *_total fields keep the raw integer packet-slot accumulators
/// so exact cross-run identities can be checked without float noise.
struct RunReport {
    std::string algo;  // "bp", "pbp", "bp_twin"
    Discipline discipline = Discipline::Fifo;
    double V = 1.0;
    std::vector<int> D;
    std::uint64_t seed = 0;
    long long T = 0;
    double burn_in = 0.1;
    std::string scenario_name;

    long long stats_slots = 0;
    double f_av = 0.0;
    double f_stderr = 0.0;
    double q_sum_av = 0.0;
    double q_actual_av = 0.0;
    std::uint64_t q_sum_total = 0;
    std::uint64_t q_actual_total = 0;

    std::vector<DelayPmf> delay;         // per user
    std::vector<double> zero_delay;      // per user
    double w_tot = 0.0;                  // lambda-weighted mean delay
    double n_tot = 0.0;                  // lambda-weighted mean backlog
    double censored_frac = 0.0;

    double little_lhs = 0.0;  // measured actual-queue time average
    double little_rhs = 0.0;  // served rate x mean delay, summed over users
    bool little_ok = true;

    bool twin_checked = false;
    std::uint64_t packets_entered = 0;
    std::uint64_t packets_served = 0;
};

/// Histogram of served packets' delays from a packet log, one pmf per user.
/// Censored rows (served_slot < 0) are counted, not binned.
/// Throws std::invalid_argument on an empty log.
std::vector<DelayPmf> empirical_delay_pmf(std::span<const PacketRow> log, int n_users);

/// Total-variation distance between two finite pmfs.
double tv_distance(const std::map<long long, double>& a, const std::map<long long, double>& b);

struct ShiftCheck {
    std::vector<double> per_user_tv;
    double max_tv = 0.0;
};

/// Compares the predictive run's delay pmfs against the base (D = 0) run's
/// pmfs shifted left by D_n. Requires matching algorithm family, V and
/// discipline; independent seeds are fine.
ShiftCheck verify_shift(const RunReport& base, const RunReport& pred,
                        std::span<const int> D);

struct BacklogGap {
    double observed = 0.0;   // Q_av(base) - Q_actual_av(predictive)
    double predicted = 0.0;  // sum_n D_n * lambda_n
    double ratio = 0.0;
};

/// Observed vs predicted linear backlog reduction. Both runs must use FIFO;
/// the prediction-window condition D_n * A_max < gamma*_n is the caller's
/// heuristic gate (checked when gamma_star is non-empty).
BacklogGap theorem9_gap(const RunReport& base_bp, const RunReport& pred_pbp,
                        std::span<const double> lambda, std::span<const int> D,
                        std::span<const double> gamma_star, int a_max);

/// Stable sweep CSV: one row per run, fixed column order
/// algo,discipline,V,D1..DN,seed,T,f_av,f_star,f_bound,q_sum_av,q_actual_av,
/// w_tot,zero_delay_1..N,censored
std::string summarize_sweep(std::span<const RunReport> reports, int n_users,
                            double f_star, double bound_B);

/// Per-run pmf CSV: user,delay,prob
std::string pmf_csv(const RunReport& report);

std::string report_to_json_text(const RunReport& r);
RunReport report_from_json_text(const std::string& text);

}  // namespace preqsim
