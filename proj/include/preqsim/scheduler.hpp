#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "preqsim/scenario.hpp"

namespace preqsim {

enum class Discipline { Fifo, Lifo };

std::string to_string(Discipline d);
Discipline discipline_from_string(const std::string& s);

/// Per-queue service rates for one user, index 0 = the actual queue (d = -1),
/// index 1+d = prediction queue d. Sum of entries equals total.
struct RateAllocation {
    std::vector<int> per_queue;
    int total = 0;
};

/// Max-weight power selection shared by both algorithms: returns the index of
/// the action minimizing V*f(S,P) - sum_n w_n * mu_n(S,P) over the state's
/// finite action set. Weights are Q(t) for the non-predictive rule and
/// Q_sum(t) for the predictive one. Ties break to the lowest action index.
int select_power(std::span<const long long> q_weights, int state, const Scenario& sc,
                 double V);

/// Greedy fully-efficient split of one user's total rate across the queue
/// bank in discipline order (Fifo: d = -1,0,...,D-1; Lifo: reversed), each
/// queue receiving min(remaining, Q^(d)). Leftover rate after every queue is
/// covered lands on the last queue visited, so the whole rate is always
/// assigned and no queue is starved while another is over-served.
RateAllocation distribute_rates(int total_mu, std::span<const long long> queue_sizes,
                                Discipline discipline);

/// Definition check used by property tests and the engine's debug mode:
/// (i) rates sum to total, (ii) a queue may be over-served only when every
/// other queue is fully covered.
bool fully_efficient(const RateAllocation& alloc, std::span<const long long> queue_sizes,
                     int total_mu);

}  // namespace preqsim
