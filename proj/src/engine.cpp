#include "preqsim/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace preqsim {

std::string to_string(Algorithm a) { return a == Algorithm::BP ? "bp" : "pbp"; }

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "bp" || s == "BP") return Algorithm::BP;
    if (s == "pbp" || s == "PBP") return Algorithm::PBP;
    throw ConfigError("algorithm", "expected bp or pbp, got \"" + s + "\"");
}

Engine::Engine(const Scenario& sc, Algorithm algo, EngineOptions opt, long long horizon)
    : sc_(sc), algo_(algo), opt_(opt), horizon_(horizon) {
    if (!sc.validated) throw ConfigError("scenario", "not validated");
    if (horizon < 1) throw ConfigError("horizon", "must be >= 1");
    if (opt_.twin_arrivals && algo_ != Algorithm::BP)
        throw ConfigError("twin_arrivals", "only valid with the bp algorithm");
    burn_start_ = static_cast<long long>(std::floor(opt_.burn_in * horizon));
    users_.resize(sc.n_users);
    for (int n = 0; n < sc.n_users; ++n) {
        // plain BP ignores the prediction window entirely
        users_[n].window =
            (algo_ == Algorithm::PBP && !opt_.twin_arrivals) ? sc.prediction[n] : 0;
        users_[n].pred.assign(users_[n].window, 0);
    }
    f_batch_.assign(static_cast<std::size_t>(std::min<long long>(100, horizon)), 0.0);
}

void Engine::init(ScenarioRng& rng) {
    assert(!initialized_);
    for (int n = 0; n < sc_.n_users; ++n) {
        auto& u = users_[n];
        if (opt_.twin_arrivals) {
            // preload Q(0) with the first D_n arrivals; their slots sit in
            // the delayed timeline so entry order is preserved
            int d_n = sc_.prediction[n];
            for (int k = 0; k < d_n; ++k) {
                int a = sc_.arrivals[n].sample(rng.arrival[n]);
                if (a > 0) {
                    u.actual.push_back({static_cast<long long>(k) - d_n, a});
                    u.q_actual += a;
                    u.entered += a;
                }
            }
            u.q_hat = u.q_actual;
        } else {
            for (int d = 0; d < u.window; ++d) {
                int a = sc_.arrivals[n].sample(rng.arrival[n]);
                u.pred[d] = a;
                u.q_pred += a;
                u.entered += a;
            }
            u.q_hat = u.q_pred;
        }
    }
    initialized_ = true;
}

void Engine::init_scripted(std::span<const std::vector<int>> first_window) {
    assert(!initialized_);
    assert(static_cast<int>(first_window.size()) == sc_.n_users);
    for (int n = 0; n < sc_.n_users; ++n) {
        auto& u = users_[n];
        assert(static_cast<int>(first_window[n].size()) == u.window);
        for (int d = 0; d < u.window; ++d) {
            u.pred[d] = first_window[n][d];
            u.q_pred += first_window[n][d];
            u.entered += first_window[n][d];
        }
        u.q_hat = u.q_pred;
    }
    initialized_ = true;
}

void Engine::record_served(int n, long long arrival_slot, int count) {
    auto& u = users_[n];
    u.served_all += count;
    long long delay = std::max<long long>(t_ - arrival_slot, 0);
    if (arrival_slot >= burn_start_) {
        u.delay_hist[delay] += count;
        u.served_counted += count;
        u.delay_sum_counted += static_cast<std::uint64_t>(delay) * count;
    }
    if (opt_.packet_log)
        for (int i = 0; i < count; ++i)
            packets_.push_back({n, arrival_slot, t_, delay});
}

void Engine::serve_actual(int n, int amount) {
    auto& u = users_[n];
    long long left = amount;
    while (left > 0) {
        assert(!u.actual.empty());
        Batch& b = opt_.discipline == Discipline::Fifo ? u.actual.front() : u.actual.back();
        int take = static_cast<int>(std::min<long long>(left, b.count));
        record_served(n, b.arrival_slot, take);
        b.count -= take;
        left -= take;
        u.q_actual -= take;
        if (b.count == 0) {
            if (opt_.discipline == Discipline::Fifo)
                u.actual.pop_front();
            else
                u.actual.pop_back();
        }
    }
}

void Engine::snapshot_stats() {
    if (t_ < burn_start_) return;
    for (const auto& u : users_) {
        q_sum_total_ += static_cast<std::uint64_t>(u.q_actual + u.q_pred);
        q_actual_total_ += static_cast<std::uint64_t>(u.q_actual);
    }
}

void Engine::advance(int state, int action, const std::vector<int>& rates, double f,
                     const std::vector<int>& next_arr) {
    snapshot_stats();
    if (t_ >= burn_start_) {
        f_sum_ += f;
        long long span = horizon_ - burn_start_;
        std::size_t b = static_cast<std::size_t>((t_ - burn_start_) *
                        static_cast<long long>(f_batch_.size()) / std::max<long long>(span, 1));
        f_batch_[std::min(b, f_batch_.size() - 1)] += f;
    }

    SlotRow row;
    if (opt_.slot_trace) {
        row.t = t_;
        row.state = state;
        row.action = action;
        row.cost = f;
        row.total_rate = rates;
        row.arrivals_drawn = next_arr;
        for (const auto& u : users_) {
            row.q_sum.push_back(u.q_actual + u.q_pred);
            row.q_actual.push_back(u.q_actual);
            row.q_hat.push_back(u.q_hat);
        }
    }

    for (int n = 0; n < sc_.n_users; ++n) {
        auto& u = users_[n];
        const int D = u.window;

        std::vector<long long> sizes(static_cast<std::size_t>(D) + 1);
        sizes[0] = u.q_actual;
        for (int d = 0; d < D; ++d) sizes[1 + d] = u.pred[d];
        RateAllocation alloc = distribute_rates(rates[n], sizes, opt_.discipline);
        if (opt_.validate_alloc) {
            if (!fully_efficient(alloc, sizes, rates[n]))
                throw std::logic_error("rate allocation lost full efficiency at slot " +
                                       std::to_string(t_));
            long long recount = 0;
            for (const auto& b : u.actual) recount += b.count;
            if (recount != u.q_actual)
                throw std::logic_error("packet-list length diverged from queue count");
        }
        if (opt_.slot_trace) row.alloc.push_back(alloc.per_queue);

        // serve: min(rate, backlog) from each queue, packets picked in
        // discipline order inside the actual queue
        serve_actual(n, static_cast<int>(std::min<long long>(alloc.per_queue[0], sizes[0])));
        for (int d = 0; d < D; ++d) {
            int s = static_cast<int>(std::min<long long>(alloc.per_queue[1 + d], u.pred[d]));
            if (s > 0) {
                u.pred[d] -= s;
                u.q_pred -= s;
                record_served(n, t_ + d, s);
            }
        }

        // shift the bank and admit the newly visible arrival A_n(t + D_n)
        if (D > 0) {
            int inflow = u.pred[0];
            if (inflow > 0) {
                u.actual.push_back({t_, inflow});
                u.q_actual += inflow;
                u.q_pred -= inflow;
            }
            for (int d = 0; d + 1 < D; ++d) u.pred[d] = u.pred[d + 1];
            u.pred[D - 1] = next_arr[n];
            u.q_pred += next_arr[n];
        } else if (next_arr[n] > 0) {
            u.actual.push_back({t_, next_arr[n]});
            u.q_actual += next_arr[n];
        }
        u.entered += next_arr[n];

        // twin queue, Algorithm-independent bookkeeping
        u.q_hat = std::max<long long>(u.q_hat - rates[n], 0) + next_arr[n];

        if (u.q_actual < 0 || u.q_pred < 0)
            throw std::logic_error("queue went negative at slot " + std::to_string(t_));
    }

    if (opt_.check_twin) {
        std::ostringstream tail;
        tail << "t=" << t_;
        for (int n = 0; n < sc_.n_users; ++n)
            tail << " u" << n << ":sum=" << q_sum(n) << ",hat=" << q_hat(n);
        twin_tail_.push_back(tail.str());
        if (twin_tail_.size() > 8) twin_tail_.pop_front();
        for (int n = 0; n < sc_.n_users; ++n) {
            if (q_sum(n) != users_[n].q_hat) {
                std::ostringstream os;
                os << "twin mismatch: user " << n << " slot " << t_ << ": Q_sum=" << q_sum(n)
                   << " Q_hat=" << users_[n].q_hat << "; tail:";
                for (const auto& line : twin_tail_) os << "\n  " << line;
                throw TwinMismatch(n, t_, os.str());
            }
        }
    }

    if (opt_.slot_trace) slots_.push_back(std::move(row));
    ++t_;
}

void Engine::step(ScenarioRng& rng) {
    assert(initialized_);
    int state = sample_channel(sc_, rng);

    std::vector<long long> weights(sc_.n_users);
    for (int n = 0; n < sc_.n_users; ++n)
        weights[n] = algo_ == Algorithm::PBP ? q_sum(n) : q_actual(n);

    int action = select_power(weights, state, sc_, opt_.V);
    const std::vector<int>& rates = sc_.rate_cache[state][action];
    double f = sc_.cost_cache[state][action];

    std::vector<int> next_arr(sc_.n_users);
    for (int n = 0; n < sc_.n_users; ++n) next_arr[n] = sc_.arrivals[n].sample(rng.arrival[n]);

    advance(state, action, rates, f, next_arr);
}

void Engine::step_scripted(int state, std::span<const int> total_mu,
                           std::span<const int> next_arrivals) {
    if (!initialized_) initialized_ = true;  // scripted runs may skip init
    std::vector<int> rates(total_mu.begin(), total_mu.end());
    std::vector<int> arr(next_arrivals.begin(), next_arrivals.end());
    advance(state, -1, rates, 0.0, arr);
}

RunReport Engine::run(ScenarioRng& rng) {
    init(rng);
    for (long long i = 0; i < horizon_; ++i) step(rng);
    return report();
}

RunReport Engine::report() const {
    RunReport r;
    r.algo = opt_.twin_arrivals ? "bp_twin" : to_string(algo_);
    r.discipline = opt_.discipline;
    r.V = opt_.V;
    r.D.resize(sc_.n_users);
    for (int n = 0; n < sc_.n_users; ++n)
        r.D[n] = opt_.twin_arrivals ? sc_.prediction[n] : users_[n].window;
    r.T = horizon_;
    r.burn_in = opt_.burn_in;
    r.scenario_name = sc_.name;
    r.twin_checked = opt_.check_twin;

    long long slots = std::max<long long>(horizon_ - burn_start_, 1);
    r.stats_slots = slots;
    r.f_av = f_sum_ / static_cast<double>(slots);
    if (f_batch_.size() >= 2) {
        double nb = static_cast<double>(f_batch_.size());
        double per = static_cast<double>(slots) / nb;
        double mean = f_sum_ / static_cast<double>(slots);
        double var = 0.0;
        for (double b : f_batch_) {
            double bm = b / per;
            var += (bm - mean) * (bm - mean);
        }
        var /= nb - 1.0;
        r.f_stderr = std::sqrt(var / nb);
    }
    r.q_sum_total = q_sum_total_;
    r.q_actual_total = q_actual_total_;
    r.q_sum_av = static_cast<double>(q_sum_total_) / static_cast<double>(slots);
    r.q_actual_av = static_cast<double>(q_actual_total_) / static_cast<double>(slots);

    std::uint64_t entered = 0, served_all = 0, censored_all = 0, counted_all = 0;
    double lam_sum = 0.0;
    r.delay.resize(sc_.n_users);
    r.zero_delay.resize(sc_.n_users);
    double w_num = 0.0, rhs = 0.0;
    for (int n = 0; n < sc_.n_users; ++n) {
        const auto& u = users_[n];
        DelayPmf pmf;
        pmf.served = u.served_counted;
        // packets still in the bank at the horizon
        std::uint64_t cens = 0;
        for (const auto& b : u.actual)
            if (b.arrival_slot >= burn_start_) cens += b.count;
        for (int d = 0; d < u.window; ++d) cens += u.pred[d];
        pmf.censored = cens;
        if (u.served_counted > 0)
            for (const auto& [k, c] : u.delay_hist)
                pmf.p[k] = static_cast<double>(c) / static_cast<double>(u.served_counted);
        r.zero_delay[n] = pmf.at(0);
        double lam = sc_.lambda[n];
        lam_sum += lam;
        w_num += lam * pmf.mean();
        rhs += static_cast<double>(u.delay_sum_counted) / static_cast<double>(slots);
        r.delay[n] = std::move(pmf);
        entered += u.entered;
        served_all += u.served_all;
        censored_all += cens;
        counted_all += u.served_counted + cens;
    }
    r.w_tot = lam_sum > 0.0 ? w_num / lam_sum : 0.0;
    r.n_tot = w_num;
    r.censored_frac = counted_all > 0
                          ? static_cast<double>(censored_all) / static_cast<double>(counted_all)
                          : 0.0;
    r.packets_entered = entered;
    r.packets_served = served_all;

    r.little_lhs = r.q_actual_av;
    r.little_rhs = rhs;
    double tol = std::max(0.05 * r.little_lhs, 0.05 + 2.0 / std::sqrt(static_cast<double>(slots)));
    r.little_ok = std::abs(r.little_lhs - r.little_rhs) <= tol;
    return r;
}

std::vector<PacketRow> Engine::full_packet_log() const {
    std::vector<PacketRow> out = packets_;
    for (int n = 0; n < sc_.n_users; ++n) {
        const auto& u = users_[n];
        for (const auto& b : u.actual)
            for (int i = 0; i < b.count; ++i) out.push_back({n, b.arrival_slot, -1, -1});
        for (int d = 0; d < u.window; ++d)
            for (int i = 0; i < u.pred[d]; ++i) out.push_back({n, t_ + d, -1, -1});
    }
    return out;
}

RunReport run_simulation(const Scenario& sc, Algorithm algo, const EngineOptions& opt,
                         long long horizon, std::uint64_t seed) {
    Engine eng(sc, algo, opt, horizon);
    ScenarioRng rng(sc, seed);
    RunReport r = eng.run(rng);
    r.seed = seed;
    return r;
}

}  // namespace preqsim
