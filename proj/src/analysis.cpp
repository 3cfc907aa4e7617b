#include "preqsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "preqsim/oracle.hpp"

namespace preqsim {

using nlohmann::json;

double DelayPmf::mean() const {
    double m = 0.0;
    for (const auto& [k, p] : this->p) m += static_cast<double>(k) * p;
    return m;
}

double DelayPmf::at(long long k) const {
    auto it = p.find(k);
    return it == p.end() ? 0.0 : it->second;
}

std::vector<DelayPmf> empirical_delay_pmf(std::span<const PacketRow> log, int n_users) {
    if (log.empty()) throw std::invalid_argument("empty packet log");
    std::vector<std::map<long long, std::uint64_t>> hist(n_users);
    std::vector<std::uint64_t> served(n_users, 0), censored(n_users, 0);
    for (const PacketRow& row : log) {
        if (row.served_slot < 0) {
            ++censored[row.user];
        } else {
            ++hist[row.user][row.delay];
            ++served[row.user];
        }
    }
    std::vector<DelayPmf> out(n_users);
    for (int n = 0; n < n_users; ++n) {
        out[n].served = served[n];
        out[n].censored = censored[n];
        if (served[n] > 0)
            for (const auto& [k, c] : hist[n])
                out[n].p[k] = static_cast<double>(c) / static_cast<double>(served[n]);
    }
    return out;
}

double tv_distance(const std::map<long long, double>& a, const std::map<long long, double>& b) {
    double total = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            total += std::abs(ia->second);
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            total += std::abs(ib->second);
            ++ib;
        } else {
            total += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * total;
}

ShiftCheck verify_shift(const RunReport& base, const RunReport& pred,
                        std::span<const int> D) {
    if (base.discipline != pred.discipline)
        throw std::invalid_argument("discipline mismatch between base and predictive runs");
    if (base.V != pred.V)
        throw std::invalid_argument("V mismatch between base and predictive runs");
    if (base.scenario_name != pred.scenario_name)
        throw std::invalid_argument("scenario mismatch between base and predictive runs");
    if (base.delay.size() != pred.delay.size() || base.delay.size() != D.size())
        throw std::invalid_argument("user-count mismatch");

    ShiftCheck check;
    for (std::size_t n = 0; n < D.size(); ++n) {
        auto shifted = shift_distribution(base.delay[n].p, D[n]);
        double tv = tv_distance(shifted, pred.delay[n].p);
        check.per_user_tv.push_back(tv);
        check.max_tv = std::max(check.max_tv, tv);
    }
    return check;
}

BacklogGap theorem9_gap(const RunReport& base_bp, const RunReport& pred_pbp,
                        std::span<const double> lambda, std::span<const int> D,
                        std::span<const double> gamma_star, int a_max) {
    if (base_bp.discipline != pred_pbp.discipline)
        throw std::invalid_argument("discipline mismatch");
    if (base_bp.discipline != Discipline::Fifo)
        throw std::invalid_argument("the linear-reduction window argument needs FIFO");
    if (!gamma_star.empty()) {
        for (std::size_t n = 0; n < D.size(); ++n)
            if (static_cast<double>(D[n]) * a_max >= gamma_star[n])
                throw std::invalid_argument(
                    "prediction window too large for user " + std::to_string(n) +
                    ": D*A_max = " + std::to_string(D[n] * a_max) +
                    " >= gamma* = " + std::to_string(gamma_star[n]));
    }
    BacklogGap gap;
    gap.observed = base_bp.q_actual_av - pred_pbp.q_actual_av;
    gap.predicted = 0.0;
    for (std::size_t n = 0; n < D.size(); ++n) gap.predicted += D[n] * lambda[n];
    if (gap.predicted != 0.0)
        gap.ratio = gap.observed / gap.predicted;
    else
        gap.ratio = gap.observed == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return gap;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string summarize_sweep(std::span<const RunReport> reports, int n_users,
                            double f_star, double bound_B) {
    std::ostringstream os;
    os << "algo,discipline,V";
    for (int n = 1; n <= n_users; ++n) os << ",D" << n;
    os << ",seed,T,f_av,f_star,f_bound,q_sum_av,q_actual_av,w_tot";
    for (int n = 1; n <= n_users; ++n) os << ",zero_delay_" << n;
    os << ",censored\n";
    for (const RunReport& r : reports) {
        os << r.algo << "," << to_string(r.discipline) << "," << fmt(r.V);
        for (int n = 0; n < n_users; ++n) os << "," << (n < (int)r.D.size() ? r.D[n] : 0);
        os << "," << r.seed << "," << r.T << "," << fmt(r.f_av) << "," << fmt(f_star) << ","
           << fmt(f_star + bound_B / r.V) << "," << fmt(r.q_sum_av) << ","
           << fmt(r.q_actual_av) << "," << fmt(r.w_tot);
        for (int n = 0; n < n_users; ++n)
            os << "," << fmt(n < (int)r.zero_delay.size() ? r.zero_delay[n] : 0.0);
        os << "," << fmt(r.censored_frac) << "\n";
    }
    return os.str();
}

std::string pmf_csv(const RunReport& report) {
    std::ostringstream os;
    os << "user,delay,prob\n";
    for (std::size_t n = 0; n < report.delay.size(); ++n)
        for (const auto& [k, p] : report.delay[n].p)
            os << n << "," << k << "," << fmt(p) << "\n";
    return os.str();
}

std::string report_to_json_text(const RunReport& r) {
    json j;
    j["algo"] = r.algo;
    j["discipline"] = to_string(r.discipline);
    j["V"] = r.V;
    j["D"] = r.D;
    j["seed"] = r.seed;
    j["T"] = r.T;
    j["burn_in"] = r.burn_in;
    j["scenario"] = r.scenario_name;
    j["stats_slots"] = r.stats_slots;
    j["f_av"] = r.f_av;
    j["f_stderr"] = r.f_stderr;
    j["q_sum_av"] = r.q_sum_av;
    j["q_actual_av"] = r.q_actual_av;
    j["q_sum_total"] = r.q_sum_total;
    j["q_actual_total"] = r.q_actual_total;
    j["w_tot"] = r.w_tot;
    j["n_tot"] = r.n_tot;
    j["censored_frac"] = r.censored_frac;
    j["zero_delay"] = r.zero_delay;
    j["little"] = {{"lhs", r.little_lhs}, {"rhs", r.little_rhs}, {"ok", r.little_ok}};
    j["twin_checked"] = r.twin_checked;
    j["packets_entered"] = r.packets_entered;
    j["packets_served"] = r.packets_served;
    json pmfs = json::array();
    for (const auto& pmf : r.delay) {
        json jp;
        jp["served"] = pmf.served;
        jp["censored"] = pmf.censored;
        json rows = json::array();
        for (const auto& [k, p] : pmf.p) rows.push_back({k, p});
        jp["p"] = rows;
        pmfs.push_back(jp);
    }
    j["delay_pmf"] = pmfs;
    return j.dump(2);
}

RunReport report_from_json_text(const std::string& text) {
    json j = json::parse(text);
    RunReport r;
    r.algo = j.at("algo").get<std::string>();
    r.discipline = discipline_from_string(j.at("discipline").get<std::string>());
    r.V = j.at("V").get<double>();
    r.D = j.at("D").get<std::vector<int>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.T = j.at("T").get<long long>();
    r.burn_in = j.at("burn_in").get<double>();
    r.scenario_name = j.at("scenario").get<std::string>();
    r.stats_slots = j.at("stats_slots").get<long long>();
    r.f_av = j.at("f_av").get<double>();
    r.f_stderr = j.at("f_stderr").get<double>();
    r.q_sum_av = j.at("q_sum_av").get<double>();
    r.q_actual_av = j.at("q_actual_av").get<double>();
    r.q_sum_total = j.at("q_sum_total").get<std::uint64_t>();
    r.q_actual_total = j.at("q_actual_total").get<std::uint64_t>();
    r.w_tot = j.at("w_tot").get<double>();
    r.n_tot = j.at("n_tot").get<double>();
    r.censored_frac = j.at("censored_frac").get<double>();
    r.zero_delay = j.at("zero_delay").get<std::vector<double>>();
    r.little_lhs = j.at("little").at("lhs").get<double>();
    r.little_rhs = j.at("little").at("rhs").get<double>();
    r.little_ok = j.at("little").at("ok").get<bool>();
    r.twin_checked = j.at("twin_checked").get<bool>();
    r.packets_entered = j.at("packets_entered").get<std::uint64_t>();
    r.packets_served = j.at("packets_served").get<std::uint64_t>();
    for (const auto& jp : j.at("delay_pmf")) {
        DelayPmf pmf;
        pmf.served = jp.at("served").get<std::uint64_t>();
        pmf.censored = jp.at("censored").get<std::uint64_t>();
        for (const auto& row : jp.at("p")) pmf.p[row[0].get<long long>()] = row[1].get<double>();
        r.delay.push_back(std::move(pmf));
    }
    return r;
}

}  // namespace preqsim
