#include "preqsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace preqsim {

using nlohmann::json;

double DiscreteDist::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * probs[i];
    return m;
}

double DiscreteDist::variance() const {
    double m = mean(), v = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
        v += (support[i] - m) * (support[i] - m) * probs[i];
    return v;
}

int DiscreteDist::sample(RngStream& rng) const {
    double u = rng.next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        acc += probs[i];
        if (u < acc) return support[i];
    }
    return support.back();
}

namespace {

void check_probs(const std::vector<double>& probs, const std::string& field) {
    if (probs.empty()) throw ConfigError(field, "empty probability list");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0)
            throw ConfigError(field + "[" + std::to_string(i) + "]",
                              "negative probability " + std::to_string(probs[i]));
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "probabilities sum to " << sum;
        throw ConfigError(field, os.str());
    }
}

int eval_rate(const Scenario& sc, int state, int action, int user) {
    if (sc.rate_rule == RateRule::Table) return sc.rate_table[state][action][user];
    double sp = sc.channel_states[state][user] * sc.actions[state][action][user];
    double l = std::log1p(sp);
    if (sc.log_base > 0.0) l /= std::log(sc.log_base);
    return static_cast<int>(std::floor(l));
}

double eval_cost(const Scenario& sc, int state, int action) {
    if (sc.cost_rule == CostRule::Table) return sc.cost_table[state][action];
    double total = 0.0;
    for (double p : sc.actions[state][action]) total += p;
    return total;
}

}  // namespace

Scenario validate(Scenario s) {
    if (s.n_users < 1) throw ConfigError("users", "must be >= 1");
    if (static_cast<int>(s.arrivals.size()) != s.n_users)
        throw ConfigError("arrivals", "expected one distribution per user");
    if (s.prediction.empty()) s.prediction.assign(s.n_users, 0);
    if (static_cast<int>(s.prediction.size()) != s.n_users)
        throw ConfigError("prediction", "expected one window per user");
    for (int n = 0; n < s.n_users; ++n)
        if (s.prediction[n] < 0)
            throw ConfigError("prediction[" + std::to_string(n) + "]", "negative window");

    s.a_max = 0;
    s.lambda.assign(s.n_users, 0.0);
    for (int n = 0; n < s.n_users; ++n) {
        const auto& d = s.arrivals[n];
        std::string field = "arrivals[" + std::to_string(n) + "]";
        if (d.support.size() != d.probs.size())
            throw ConfigError(field, "support/probs size mismatch");
        if (d.support.empty()) throw ConfigError(field, "empty support");
        check_probs(d.probs, field + ".probs");
        std::set<int> seen;
        for (int v : d.support) {
            if (v < 0) throw ConfigError(field + ".support", "negative packet count");
            if (!seen.insert(v).second)
                throw ConfigError(field + ".support", "duplicate value " + std::to_string(v));
            s.a_max = std::max(s.a_max, v);
        }
        s.lambda[n] = d.mean();
    }

    if (s.channel_states.empty()) throw ConfigError("channel.states", "empty");
    if (s.channel_states.size() != s.channel_probs.size())
        throw ConfigError("channel", "states/probs size mismatch");
    check_probs(s.channel_probs, "channel.probs");

    if (s.actions.size() != s.channel_states.size())
        throw ConfigError("actions", "expected one action set per channel state");
    s.p_max = 0.0;
    for (int si = 0; si < s.n_states(); ++si) {
        std::string field = "actions[" + std::to_string(si) + "]";
        if (s.actions[si].empty()) throw ConfigError(field, "empty action set");
        for (std::size_t m = 0; m < s.actions[si].size(); ++m) {
            const auto& pv = s.actions[si][m];
            if (static_cast<int>(pv.size()) != s.n_users)
                throw ConfigError(field + "[" + std::to_string(m) + "]",
                                  "power vector dimension != users");
            for (double p : pv) {
                if (p < 0.0)
                    throw ConfigError(field + "[" + std::to_string(m) + "]",
                                      "negative power");
                s.p_max = std::max(s.p_max, p);
            }
        }
    }

    if (s.rate_rule == RateRule::Table) {
        if (s.rate_table.size() != s.actions.size())
            throw ConfigError("rate_table", "expected one block per state");
        for (int si = 0; si < s.n_states(); ++si) {
            if (s.rate_table[si].size() != s.actions[si].size())
                throw ConfigError("rate_table[" + std::to_string(si) + "]",
                                  "expected one row per action");
            for (const auto& row : s.rate_table[si])
                if (static_cast<int>(row.size()) != s.n_users)
                    throw ConfigError("rate_table[" + std::to_string(si) + "]",
                                      "row dimension != users");
        }
    }
    if (s.cost_rule == CostRule::Table) {
        if (s.cost_table.size() != s.actions.size())
            throw ConfigError("cost_table", "expected one block per state");
        for (int si = 0; si < s.n_states(); ++si)
            if (s.cost_table[si].size() != s.actions[si].size())
                throw ConfigError("cost_table[" + std::to_string(si) + "]",
                                  "expected one entry per action");
    }

    // exhaustive evaluation over the finite sets
    s.mu_max = 0;
    s.f_max = 0.0;
    s.rate_cache.assign(s.n_states(), {});
    s.cost_cache.assign(s.n_states(), {});
    for (int si = 0; si < s.n_states(); ++si) {
        s.rate_cache[si].resize(s.actions[si].size());
        s.cost_cache[si].resize(s.actions[si].size());
        for (int m = 0; m < s.n_actions(si); ++m) {
            std::vector<int> mu(s.n_users);
            for (int n = 0; n < s.n_users; ++n) {
                int r = eval_rate(s, si, m, n);
                if (r < 0)
                    throw ConfigError("rate(" + std::to_string(si) + "," +
                                          std::to_string(m) + ")",
                                      "negative rate");
                mu[n] = r;
                s.mu_max = std::max(s.mu_max, r);
            }
            s.rate_cache[si][m] = std::move(mu);
            double f = eval_cost(s, si, m);
            if (f < 0.0)
                throw ConfigError("cost(" + std::to_string(si) + "," + std::to_string(m) + ")",
                                  "negative cost");
            s.cost_cache[si][m] = f;
            s.f_max = std::max(s.f_max, f);
        }
    }

    s.validated = true;
    return s;
}

std::vector<int> service_rate(const Scenario& sc, int state, int action) {
    if (state < 0 || state >= sc.n_states())
        throw ConfigError("state", "not in channel support");
    if (action < 0 || action >= sc.n_actions(state))
        throw ConfigError("action", "not in action set of state " + std::to_string(state));
    return sc.rate_cache[state][action];
}

double cost(const Scenario& sc, int state, int action) {
    if (state < 0 || state >= sc.n_states())
        throw ConfigError("state", "not in channel support");
    if (action < 0 || action >= sc.n_actions(state))
        throw ConfigError("action", "not in action set of state " + std::to_string(state));
    return sc.cost_cache[state][action];
}

ScenarioRng::ScenarioRng(const Scenario& sc, std::uint64_t seed) : channel(seed, 0) {
    arrival.reserve(sc.n_users);
    for (int n = 0; n < sc.n_users; ++n) arrival.emplace_back(seed, 1 + n);
}

std::vector<int> sample_arrivals(const Scenario& sc, ScenarioRng& rng) {
    std::vector<int> a(sc.n_users);
    for (int n = 0; n < sc.n_users; ++n) a[n] = sc.arrivals[n].sample(rng.arrival[n]);
    return a;
}

int sample_channel(const Scenario& sc, ScenarioRng& rng) {
    double u = rng.channel.next_unit();
    double acc = 0.0;
    for (int si = 0; si < sc.n_states(); ++si) {
        acc += sc.channel_probs[si];
        if (u < acc) return si;
    }
    return sc.n_states() - 1;
}

Scenario paper_sec6_preset() {
    Scenario s;
    s.name = "paper_sec6";
    s.n_users = 2;
    s.arrivals = {DiscreteDist{{3, 0}, {0.2, 0.8}}, DiscreteDist{{2, 0}, {0.5, 0.5}}};
    s.channel_states = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    s.channel_probs = {0.25, 0.25, 0.25, 0.25};
    std::vector<PowerVec> shared = {{0, 0}, {5, 0}, {10, 0}, {0, 5}, {0, 10}};
    s.actions.assign(4, shared);
    s.rate_rule = RateRule::FloorLog;
    s.log_base = 0.0;
    s.cost_rule = CostRule::TotalPower;
    s.prediction = {5, 10};
    return validate(std::move(s));
}

namespace {

Scenario scenario_from_json(const json& j) {
    Scenario s;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    s.n_users = j.at("users").get<int>();
    for (const auto& a : j.at("arrivals")) {
        DiscreteDist d;
        d.support = a.at("support").get<std::vector<int>>();
        d.probs = a.at("probs").get<std::vector<double>>();
        s.arrivals.push_back(std::move(d));
    }
    const auto& ch = j.at("channel");
    s.channel_states = ch.at("states").get<std::vector<std::vector<double>>>();
    s.channel_probs = ch.at("probs").get<std::vector<double>>();

    if (j.contains("shared_actions")) {
        auto shared = j.at("shared_actions").get<std::vector<PowerVec>>();
        s.actions.assign(s.channel_states.size(), shared);
    } else if (j.contains("actions")) {
        // object keyed by comma-joined state values, e.g. "1,2"
        const auto& act = j.at("actions");
        s.actions.resize(s.channel_states.size());
        for (std::size_t si = 0; si < s.channel_states.size(); ++si) {
            std::ostringstream key;
            for (std::size_t n = 0; n < s.channel_states[si].size(); ++n) {
                if (n) key << ",";
                double v = s.channel_states[si][n];
                if (v == std::floor(v))
                    key << static_cast<long long>(v);
                else
                    key << v;
            }
            if (!act.contains(key.str()))
                throw ConfigError("actions", "missing entry for state " + key.str());
            s.actions[si] = act.at(key.str()).get<std::vector<PowerVec>>();
        }
    } else {
        throw ConfigError("actions", "need \"actions\" or \"shared_actions\"");
    }

    std::string rate_fn = j.value("rate_fn", std::string("floor_log"));
    if (rate_fn == "floor_log") {
        s.rate_rule = RateRule::FloorLog;
        std::string base = j.value("log_base", std::string("e"));
        if (base == "e")
            s.log_base = 0.0;
        else if (base == "2")
            s.log_base = 2.0;
        else if (base == "10")
            s.log_base = 10.0;
        else
            throw ConfigError("log_base", "expected \"e\", \"2\" or \"10\"");
    } else if (rate_fn == "table") {
        s.rate_rule = RateRule::Table;
        auto raw = j.at("rate_table").get<std::vector<std::vector<std::vector<double>>>>();
        s.rate_table.resize(raw.size());
        for (std::size_t si = 0; si < raw.size(); ++si) {
            s.rate_table[si].resize(raw[si].size());
            for (std::size_t m = 0; m < raw[si].size(); ++m) {
                for (double v : raw[si][m]) {
                    if (v != std::floor(v))
                        throw ConfigError("rate_table", "non-integer rate output " +
                                                            std::to_string(v));
                    s.rate_table[si][m].push_back(static_cast<int>(v));
                }
            }
        }
    } else {
        throw ConfigError("rate_fn", "unknown rule \"" + rate_fn + "\"");
    }

    std::string cost_fn = j.value("cost_fn", std::string("total_power"));
    if (cost_fn == "total_power") {
        s.cost_rule = CostRule::TotalPower;
    } else if (cost_fn == "table") {
        s.cost_rule = CostRule::Table;
        s.cost_table = j.at("cost_table").get<std::vector<std::vector<double>>>();
    } else {
        throw ConfigError("cost_fn", "unknown rule \"" + cost_fn + "\"");
    }

    if (j.contains("prediction")) s.prediction = j.at("prediction").get<std::vector<int>>();
    return validate(std::move(s));
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("json", e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("json", e.what());
    }
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open scenario file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json_text(buf.str());
}

std::string scenario_to_json_text(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["users"] = sc.n_users;
    j["arrivals"] = json::array();
    for (const auto& d : sc.arrivals)
        j["arrivals"].push_back({{"support", d.support}, {"probs", d.probs}});
    j["channel"] = {{"states", sc.channel_states}, {"probs", sc.channel_probs}};
    bool shared = true;
    for (const auto& a : sc.actions)
        if (a != sc.actions.front()) shared = false;
    if (shared) {
        j["shared_actions"] = sc.actions.front();
    } else {
        json act = json::object();
        for (int si = 0; si < sc.n_states(); ++si) {
            std::ostringstream key;
            for (std::size_t n = 0; n < sc.channel_states[si].size(); ++n) {
                if (n) key << ",";
                double v = sc.channel_states[si][n];
                if (v == std::floor(v))
                    key << static_cast<long long>(v);
                else
                    key << v;
            }
            act[key.str()] = sc.actions[si];
        }
        j["actions"] = act;
    }
    if (sc.rate_rule == RateRule::FloorLog) {
        j["rate_fn"] = "floor_log";
        j["log_base"] = sc.log_base == 0.0 ? "e" : (sc.log_base == 2.0 ? "2" : "10");
    } else {
        j["rate_fn"] = "table";
        j["rate_table"] = sc.rate_table;
    }
    if (sc.cost_rule == CostRule::TotalPower) {
        j["cost_fn"] = "total_power";
    } else {
        j["cost_fn"] = "table";
        j["cost_table"] = sc.cost_table;
    }
    j["prediction"] = sc.prediction;
    return j.dump(2);
}

Scenario resolve_scenario(const std::string& name_or_path) {
    if (name_or_path == "paper_sec6") return paper_sec6_preset();
    return load_scenario_file(name_or_path);
}

Scenario random_scenario(RngStream& rng, const RandomScenarioOptions& o) {
    auto ri = [&](int lo, int hi) {
        return lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    };

    Scenario s;
    s.name = "random";
    s.n_users = ri(1, o.max_users);

    for (int n = 0; n < s.n_users; ++n) {
        int k = ri(1, std::min(3, o.max_arrival + 1));
        std::vector<int> vals(o.max_arrival + 1);
        for (int i = 0; i <= o.max_arrival; ++i) vals[i] = i;
        for (int i = o.max_arrival; i > 0; --i)
            std::swap(vals[i], vals[rng.next_below(i + 1)]);
        vals.resize(k);
        std::sort(vals.begin(), vals.end());
        // dyadic probabilities in eighths, exactly representable
        std::vector<int> cuts(k, 1);
        for (int rest = 8 - k; rest > 0; --rest) ++cuts[rng.next_below(k)];
        DiscreteDist d;
        d.support = vals;
        for (int c : cuts) d.probs.push_back(c / 8.0);
        s.arrivals.push_back(std::move(d));
    }

    int n_states = ri(1, o.max_states);
    std::vector<int> cuts(n_states, 1);
    for (int rest = 8 - n_states; rest > 0; --rest) ++cuts[rng.next_below(n_states)];
    for (int si = 0; si < n_states; ++si) {
        std::vector<double> state(s.n_users);
        for (int n = 0; n < s.n_users; ++n) state[n] = ri(1, 3);
        s.channel_states.push_back(std::move(state));
        s.channel_probs.push_back(cuts[si] / 8.0);
    }

    s.rate_rule = RateRule::Table;
    s.cost_rule = CostRule::Table;
    for (int si = 0; si < n_states; ++si) {
        int m = ri(1, o.max_actions);
        std::vector<PowerVec> acts;
        std::vector<std::vector<int>> rates;
        std::vector<double> costs;
        for (int a = 0; a < m; ++a) {
            PowerVec pv(s.n_users);
            std::vector<int> mu(s.n_users);
            for (int n = 0; n < s.n_users; ++n) {
                mu[n] = a == 0 ? 0 : ri(0, o.max_rate);
                pv[n] = mu[n];  // nominal power, costs come from the table
            }
            acts.push_back(pv);
            rates.push_back(mu);
            costs.push_back(a == 0 ? 0.0 : 0.25 * ri(0, 32));
        }
        s.actions.push_back(std::move(acts));
        s.rate_table.push_back(std::move(rates));
        s.cost_table.push_back(std::move(costs));
    }

    for (int n = 0; n < s.n_users; ++n) s.prediction.push_back(ri(0, o.max_window));
    return validate(std::move(s));
}

Scenario random_stable_scenario(RngStream& rng) {
    RandomScenarioOptions o;
    o.max_users = 2;
    Scenario s = random_scenario(rng, o);
    while (s.n_users != 2) s = random_scenario(rng, o);

    // a random stationary mixture is an achievable rate point; targeting 60%
    // of it guarantees slack
    std::vector<double> achievable(s.n_users, 0.0);
    for (int si = 0; si < s.n_states(); ++si) {
        std::vector<double> w(s.n_actions(si));
        double tot = 0.0;
        for (auto& v : w) {
            v = 1.0 + static_cast<double>(rng.next_below(8));
            tot += v;
        }
        for (int m = 0; m < s.n_actions(si); ++m)
            for (int n = 0; n < s.n_users; ++n)
                achievable[n] += s.channel_probs[si] * (w[m] / tot) * s.rate_table[si][m][n];
    }

    for (int n = 0; n < s.n_users; ++n) {
        long long units = static_cast<long long>(0.6 * achievable[n] * 80.0);
        double lam = static_cast<double>(units) / 80.0;
        DiscreteDist d;
        if (lam <= 0.0) {
            d.support = {0};
            d.probs = {1.0};
        } else {
            int v = lam <= 1.0 ? 1 : (lam <= 2.0 ? 2 : 3);
            d.support = {0, v};
            double p = lam / v;
            d.probs = {1.0 - p, p};
        }
        s.arrivals[n] = std::move(d);
    }
    s.validated = false;
    return validate(std::move(s));
}

}  // namespace preqsim
