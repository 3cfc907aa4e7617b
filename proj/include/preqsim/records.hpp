#pragma once

#include <cstdint>
#include <vector>

namespace preqsim {

/// One packet's lifetime. Delay counts slots spent in the actual queue:
/// zero when the packet was served out of a prediction queue, otherwise
/// served_slot - arrival_slot. served_slot = -1 marks a packet still queued
/// at the horizon (censored).
struct PacketRow {
    int user = 0;
    long long arrival_slot = 0;
    long long served_slot = -1;
    long long delay = -1;
};

/// Per-slot trace row (optional, large). Queue snapshots are taken at the
/// start of the slot, before the action.
struct SlotRow {
    long long t = 0;
    int state = 0;
    int action = -1;
    double cost = 0.0;
    std::vector<int> total_rate;            // mu_n(t)
    std::vector<std::vector<int>> alloc;    // per user, index 0 = actual queue
    std::vector<long long> q_sum;
    std::vector<long long> q_actual;
    std::vector<long long> q_hat;
    std::vector<int> arrivals_drawn;        // A_n(t + D_n)
};

}  // namespace preqsim
