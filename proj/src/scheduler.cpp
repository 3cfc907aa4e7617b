#include "preqsim/scheduler.hpp"

#include <algorithm>
#include <cassert>

namespace preqsim {

std::string to_string(Discipline d) { return d == Discipline::Fifo ? "fifo" : "lifo"; }

Discipline discipline_from_string(const std::string& s) {
    if (s == "fifo" || s == "FIFO") return Discipline::Fifo;
    if (s == "lifo" || s == "LIFO") return Discipline::Lifo;
    throw ConfigError("discipline", "expected fifo or lifo, got \"" + s + "\"");
}

int select_power(std::span<const long long> q_weights, int state, const Scenario& sc,
                 double V) {
    const auto& rates = sc.rate_cache[state];
    const auto& costs = sc.cost_cache[state];
    int best = 0;
    double best_obj = 0.0;
    for (int m = 0; m < static_cast<int>(rates.size()); ++m) {
        double obj = V * costs[m];
        for (int n = 0; n < sc.n_users; ++n)
            obj -= static_cast<double>(q_weights[n]) * rates[m][n];
        if (m == 0 || obj < best_obj) {
            best = m;
            best_obj = obj;
        }
    }
    return best;
}

RateAllocation distribute_rates(int total_mu, std::span<const long long> queue_sizes,
                                Discipline discipline) {
    RateAllocation alloc;
    alloc.total = total_mu;
    alloc.per_queue.assign(queue_sizes.size(), 0);
    const int k = static_cast<int>(queue_sizes.size());
    assert(k >= 1);

    long long remaining = total_mu;
    int last = 0;
    for (int i = 0; i < k; ++i) {
        int idx = discipline == Discipline::Fifo ? i : k - 1 - i;
        long long take = std::min<long long>(remaining, queue_sizes[idx]);
        alloc.per_queue[idx] = static_cast<int>(take);
        remaining -= take;
        last = idx;
    }
    if (remaining > 0) alloc.per_queue[last] += static_cast<int>(remaining);
    return alloc;
}

bool fully_efficient(const RateAllocation& alloc, std::span<const long long> queue_sizes,
                     int total_mu) {
    long long sum = 0;
    for (int r : alloc.per_queue) {
        if (r < 0) return false;
        sum += r;
    }
    if (sum != total_mu) return false;
    for (std::size_t d = 0; d < queue_sizes.size(); ++d) {
        if (alloc.per_queue[d] > queue_sizes[d]) {
            for (std::size_t e = 0; e < queue_sizes.size(); ++e)
                if (e != d && alloc.per_queue[e] < queue_sizes[e]) return false;
        }
    }
    return true;
}

}  // namespace preqsim
