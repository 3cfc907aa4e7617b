#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "preqsim/analysis.hpp"
#include "preqsim/records.hpp"
#include "preqsim/scenario.hpp"
#include "preqsim/scheduler.hpp"

namespace preqsim {

enum class Algorithm { BP, PBP };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// Raised when the running twin-queue tracker diverges from the bank sum.
/// This is an implementation-bug detector: the equality is a theorem for
/// fully-efficient allocations, so any mismatch aborts the run loudly.
class TwinMismatch : public std::runtime_error {
public:
    TwinMismatch(int user, long long t, const std::string& what)
        : std::runtime_error(what), user_(user), t_(t) {}
    int user() const { return user_; }
    long long slot() const { return t_; }

private:
    int user_;
    long long t_;
};

struct EngineOptions {
    Discipline discipline = Discipline::Fifo;
    double V = 1.0;
    bool check_twin = true;
    bool validate_alloc = false;  // re-check full efficiency every slot
    bool packet_log = false;
    bool slot_trace = false;
    double burn_in = 0.1;
    /// Run the equivalent non-predictive system instead: arrivals delayed by
    /// D_n, initial backlog preloaded with the first D_n arrival draws.
    /// Only meaningful with Algorithm::BP.
    bool twin_arrivals = false;
};

/// Slot-by-slot simulator of the prediction-queue bank. One instance is a
/// single strictly sequential run; distinct instances share nothing mutable
/// and may execute concurrently.
class Engine {
public:
    Engine(const Scenario& sc, Algorithm algo, EngineOptions opt, long long horizon);

    /// Pre-samples the first D_n arrival slots per user and fills the bank
    /// (or the initial backlog in twin-arrivals mode).
    void init(ScenarioRng& rng);

    /// Test hook: fills the initial prediction windows from explicit values
    /// instead of sampling (first_window[n] must have D_n entries).
    void init_scripted(std::span<const std::vector<int>> first_window);

    /// One slot: observe state, pick the action, allocate and serve, then
    /// shift the bank and admit the newly visible arrival.
    void step(ScenarioRng& rng);

    /// Test hook: bypasses the power rule, forcing this slot's channel
    /// state, per-user total rates and newly drawn arrivals.
    void step_scripted(int state, std::span<const int> total_mu,
                       std::span<const int> next_arrivals);

    /// init + T steps + report.
    RunReport run(ScenarioRng& rng);

    RunReport report() const;

    // inspection
    long long now() const { return t_; }
    long long q_actual(int n) const { return users_[n].q_actual; }
    long long q_pred(int n) const { return users_[n].q_pred; }
    long long q_sum(int n) const { return users_[n].q_actual + users_[n].q_pred; }
    long long q_hat(int n) const { return users_[n].q_hat; }
    int effective_window(int n) const { return users_[n].window; }
    const std::vector<int>& pred_queues(int n) const { return users_[n].pred; }
    const std::vector<PacketRow>& packet_log() const { return packets_; }
    /// Served rows plus one censored row per packet still in the bank.
    std::vector<PacketRow> full_packet_log() const;
    const std::vector<SlotRow>& slot_trace() const { return slots_; }

private:
    struct Batch {
        long long arrival_slot;
        int count;
    };

    struct UserState {
        int window = 0;               // effective D_n (0 for plain BP)
        std::deque<Batch> actual;     // the one physical queue
        std::vector<int> pred;        // pred[d] = packets of future slot t+d
        long long q_actual = 0;
        long long q_pred = 0;
        long long q_hat = 0;

        std::map<long long, std::uint64_t> delay_hist;
        std::uint64_t served_counted = 0;
        std::uint64_t delay_sum_counted = 0;
        std::uint64_t censored = 0;
        std::uint64_t entered = 0;
        std::uint64_t served_all = 0;
    };

    void advance(int state, int action, const std::vector<int>& rates, double f,
                 const std::vector<int>& next_arr);
    void serve_actual(int n, int amount);
    void record_served(int n, long long arrival_slot, int count);
    void snapshot_stats();

    const Scenario& sc_;
    Algorithm algo_;
    EngineOptions opt_;
    long long horizon_;
    long long burn_start_;
    long long t_ = 0;
    bool initialized_ = false;

    std::vector<UserState> users_;

    // accumulators over [burn_start, horizon)
    double f_sum_ = 0.0;
    std::vector<double> f_batch_;
    std::uint64_t q_sum_total_ = 0;
    std::uint64_t q_actual_total_ = 0;

    std::vector<PacketRow> packets_;
    std::vector<SlotRow> slots_;
    std::deque<std::string> twin_tail_;  // recent (t, q_sum, q_hat) lines
};

/// Convenience wrapper: fresh RNG from seed, full run.
RunReport run_simulation(const Scenario& sc, Algorithm algo, const EngineOptions& opt,
                         long long horizon, std::uint64_t seed);

}  // namespace preqsim
