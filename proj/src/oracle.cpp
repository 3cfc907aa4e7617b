#include "preqsim/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace preqsim {

namespace {

// ---------------------------------------------------------------------------
// Dense two-phase simplex with Bland's rule. Minimizes c.x subject to
// rows of the form a.x = b or a.x >= b, x >= 0. Sizes here are tiny
// (states x actions variables, states + users rows), so no factorization.
// ---------------------------------------------------------------------------

enum RowRel { Eq, Ge };

struct LpProblem {
    int nvars = 0;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<RowRel> rel;
    std::vector<double> c;
};

struct LpResult {
    bool feasible = false;
    bool bounded = true;
    double obj = 0.0;
    std::vector<double> x;
};

constexpr double kEps = 1e-9;

LpResult solve_lp(const LpProblem& p) {
    const int m = static_cast<int>(p.rows.size());
    int n_ge = 0;
    for (RowRel r : p.rel)
        if (r == Ge) ++n_ge;
    const int nv = p.nvars;
    const int total = nv + n_ge + m;  // structural + surplus + artificial

    // tableau rows: [coeffs | rhs], basis starts as the artificials
    std::vector<std::vector<double>> t(m, std::vector<double>(total + 1, 0.0));
    std::vector<int> basis(m);
    int ge_seen = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < nv; ++j) t[i][j] = p.rows[i][j];
        double b = p.rhs[i];
        if (p.rel[i] == Ge) {
            t[i][nv + ge_seen] = -1.0;
            ++ge_seen;
        }
        t[i][total] = b;
        if (b < 0.0)
            for (double& v : t[i]) v = -v;
        t[i][nv + n_ge + i] = 1.0;
        basis[i] = nv + n_ge + i;
    }

    // reduced-cost rows for phase 1 (artificial costs) and phase 2
    std::vector<double> r1(total + 1, 0.0), r2(total + 1, 0.0);
    for (int j = 0; j < m; ++j) r1[nv + n_ge + j] = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= total; ++j) r1[j] -= t[i][j];
    for (int j = 0; j < nv; ++j) r2[j] = p.c[j];

    auto pivot = [&](int row, int col) {
        double piv = t[row][col];
        for (double& v : t[row]) v /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == row || std::abs(t[i][col]) < 1e-14) continue;
            double f = t[i][col];
            for (int j = 0; j <= total; ++j) t[i][j] -= f * t[row][j];
        }
        for (auto* r : {&r1, &r2}) {
            double f = (*r)[col];
            if (std::abs(f) < 1e-14) continue;
            for (int j = 0; j <= total; ++j) (*r)[j] -= f * t[row][j];
        }
        basis[row] = col;
    };

    auto run_phase = [&](const std::vector<double>& red, int max_col) -> bool {
        // Bland: smallest-index entering column, smallest basis index on
        // ratio ties. Returns false on an unbounded direction.
        for (;;) {
            int enter = -1;
            for (int j = 0; j < max_col; ++j)
                if (red[j] < -kEps) {
                    enter = j;
                    break;
                }
            if (enter < 0) return true;
            int leave = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                if (t[i][enter] <= kEps) continue;
                double ratio = t[i][total] / t[i][enter];
                if (leave < 0 || ratio < best - kEps ||
                    (std::abs(ratio - best) <= kEps && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    };

    LpResult res;
    run_phase(r1, total);  // phase 1 objective is bounded below by zero
    double art_sum = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= nv + n_ge) art_sum += t[i][total];
    if (art_sum > 1e-7) return res;  // infeasible

    // drive lingering zero-value artificials out of the basis when possible
    for (int i = 0; i < m; ++i) {
        if (basis[i] < nv + n_ge) continue;
        for (int j = 0; j < nv + n_ge; ++j)
            if (std::abs(t[i][j]) > kEps) {
                pivot(i, j);
                break;
            }
    }

    if (!run_phase(r2, nv + n_ge)) {
        res.feasible = true;
        res.bounded = false;
        return res;
    }

    res.feasible = true;
    res.x.assign(nv, 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < nv) res.x[basis[i]] = t[i][total];
    res.obj = 0.0;
    for (int j = 0; j < nv; ++j) res.obj += p.c[j] * res.x[j];
    return res;
}

}  // namespace

PolicySolution solve_min_cost(const Scenario& sc) {
    if (!sc.validated) throw ConfigError("scenario", "not validated");
    const int K = sc.n_states();
    const int N = sc.n_users;

    std::vector<int> base(K, 0);
    int nv = 0;
    for (int s = 0; s < K; ++s) {
        base[s] = nv;
        nv += sc.n_actions(s);
    }

    auto var = [&](int s, int mdx) { return base[s] + mdx; };

    LpProblem cost_lp;
    cost_lp.nvars = nv;
    cost_lp.c.assign(nv, 0.0);
    for (int s = 0; s < K; ++s)
        for (int m = 0; m < sc.n_actions(s); ++m)
            cost_lp.c[var(s, m)] = sc.channel_probs[s] * sc.cost_cache[s][m];
    for (int s = 0; s < K; ++s) {
        std::vector<double> row(nv, 0.0);
        for (int m = 0; m < sc.n_actions(s); ++m) row[var(s, m)] = 1.0;
        cost_lp.rows.push_back(std::move(row));
        cost_lp.rhs.push_back(1.0);
        cost_lp.rel.push_back(Eq);
    }
    for (int n = 0; n < N; ++n) {
        std::vector<double> row(nv, 0.0);
        for (int s = 0; s < K; ++s)
            for (int m = 0; m < sc.n_actions(s); ++m)
                row[var(s, m)] = sc.channel_probs[s] * sc.rate_cache[s][m][n];
        cost_lp.rows.push_back(std::move(row));
        cost_lp.rhs.push_back(sc.lambda[n]);
        cost_lp.rel.push_back(Ge);
    }

    // max-slack LP: same feasible set with the rate constraints relaxed by a
    // free slack variable (split into eta+ - eta-); certifies stabilizability
    LpProblem slack_lp = cost_lp;
    slack_lp.nvars = nv + 2;
    slack_lp.c.assign(nv + 2, 0.0);
    slack_lp.c[nv] = -1.0;
    slack_lp.c[nv + 1] = 1.0;
    for (int i = 0; i < static_cast<int>(slack_lp.rows.size()); ++i) {
        slack_lp.rows[i].resize(nv + 2, 0.0);
        if (slack_lp.rel[i] == Ge) {
            slack_lp.rows[i][nv] = -1.0;
            slack_lp.rows[i][nv + 1] = 1.0;
        }
    }

    PolicySolution sol;
    LpResult slack_res = solve_lp(slack_lp);
    assert(slack_res.feasible && slack_res.bounded);
    sol.eta = -slack_res.obj;
    sol.slack_rates.assign(N, 0.0);
    for (int n = 0; n < N; ++n)
        for (int s = 0; s < K; ++s)
            for (int m = 0; m < sc.n_actions(s); ++m)
                sol.slack_rates[n] +=
                    sc.channel_probs[s] * sc.rate_cache[s][m][n] * slack_res.x[var(s, m)];
    sol.binding_user = 0;
    for (int n = 1; n < N; ++n)
        if (sol.slack_rates[n] - sc.lambda[n] <
            sol.slack_rates[sol.binding_user] - sc.lambda[sol.binding_user])
            sol.binding_user = n;

    LpResult cost_res = solve_lp(cost_lp);
    if (!cost_res.feasible) {
        sol.feasible = false;
        return sol;
    }
    sol.feasible = true;
    sol.f_star = cost_res.obj;
    sol.probs.resize(K);
    sol.rates.assign(N, 0.0);
    for (int s = 0; s < K; ++s) {
        sol.probs[s].resize(sc.n_actions(s));
        for (int m = 0; m < sc.n_actions(s); ++m) sol.probs[s][m] = cost_res.x[var(s, m)];
    }
    for (int n = 0; n < N; ++n)
        for (int s = 0; s < K; ++s)
            for (int m = 0; m < sc.n_actions(s); ++m)
                sol.rates[n] +=
                    sc.channel_probs[s] * sc.rate_cache[s][m][n] * cost_res.x[var(s, m)];
    return sol;
}

DualPoint dual_value(const Scenario& sc, double V, std::span<const double> gamma) {
    if (!sc.validated) throw ConfigError("scenario", "not validated");
    DualPoint pt;
    pt.gamma.assign(gamma.begin(), gamma.end());
    pt.argmin_action.resize(sc.n_states());
    double g = 0.0;
    for (int s = 0; s < sc.n_states(); ++s) {
        int best = 0;
        double best_v = 0.0;
        for (int m = 0; m < sc.n_actions(s); ++m) {
            double v = V * sc.cost_cache[s][m];
            for (int n = 0; n < sc.n_users; ++n)
                v += gamma[n] * (sc.lambda[n] - sc.rate_cache[s][m][n]);
            if (m == 0 || v < best_v) {
                best = m;
                best_v = v;
            }
        }
        pt.argmin_action[s] = best;
        g += sc.channel_probs[s] * best_v;
    }
    pt.g = g;
    return pt;
}

namespace {

double dual_g_only(const Scenario& sc, double V, const std::vector<double>& gamma) {
    double g = 0.0;
    for (int s = 0; s < sc.n_states(); ++s) {
        double best_v = 0.0;
        for (int m = 0; m < sc.n_actions(s); ++m) {
            double v = V * sc.cost_cache[s][m];
            for (int n = 0; n < sc.n_users; ++n)
                v += gamma[n] * (sc.lambda[n] - sc.rate_cache[s][m][n]);
            if (m == 0 || v < best_v) best_v = v;
        }
        g += sc.channel_probs[s] * best_v;
    }
    return g;
}

std::vector<double> grid_point(const DualGridBox& box, long long flat) {
    const int dims = static_cast<int>(box.lo.size());
    std::vector<double> gamma(dims);
    for (int d = dims - 1; d >= 0; --d) {
        long long i = flat % box.points_per_dim;
        flat /= box.points_per_dim;
        double span = box.hi[d] - box.lo[d];
        gamma[d] = box.lo[d] + span * static_cast<double>(i) /
                                   static_cast<double>(box.points_per_dim - 1);
    }
    return gamma;
}

DualScanResult reduce_scan(const Scenario& sc, double V, const DualGridBox& box,
                           const std::vector<double>& values) {
    // deterministic reduction: row-major order is lexicographic in gamma,
    // so the first maximum is the lexicographically smallest one
    DualScanResult res;
    long long best_idx = 0;
    for (long long i = 1; i < static_cast<long long>(values.size()); ++i)
        if (values[i] > values[best_idx]) best_idx = i;
    res.best_g = values[best_idx];
    res.best_gamma = grid_point(box, best_idx);
    double eps = 1e-9 * std::max(1.0, std::abs(res.best_g));
    for (long long i = 0; i < static_cast<long long>(values.size()); ++i)
        if (values[i] >= res.best_g - eps) res.plateau.push_back(grid_point(box, i));
    (void)sc;
    (void)V;
    return res;
}

long long grid_size(const DualGridBox& box) {
    long long total = 1;
    for (std::size_t d = 0; d < box.lo.size(); ++d) total *= box.points_per_dim;
    return total;
}

}  // namespace

DualScanResult scan_dual_grid_serial(const Scenario& sc, double V, const DualGridBox& box) {
    const long long total = grid_size(box);
    std::vector<double> values(total);
    for (long long i = 0; i < total; ++i) values[i] = dual_g_only(sc, V, grid_point(box, i));
    return reduce_scan(sc, V, box, values);
}

DualScanResult scan_dual_grid_parallel(const Scenario& sc, double V, const DualGridBox& box) {
    const long long total = grid_size(box);
    std::vector<double> values(total);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < total; ++i) values[i] = dual_g_only(sc, V, grid_point(box, i));
    return reduce_scan(sc, V, box, values);
}

GammaStar solve_gamma_star(const Scenario& sc, double V, bool parallel) {
    PolicySolution pol = solve_min_cost(sc);
    if (pol.eta <= 1e-9) {
        std::ostringstream os;
        os << "dual is unbounded: slack check failed (eta = " << pol.eta
           << " <= 0 for user " << pol.binding_user << ")";
        throw InfeasibleScenario(pol.binding_user, os.str());
    }

    const int N = sc.n_users;
    // any gamma with sum above V*f_max/eta is dominated by gamma = 0
    double cap = V * sc.f_max / pol.eta * 1.05 + 1.0;
    DualGridBox box;
    box.lo.assign(N, 0.0);
    box.hi.assign(N, cap);
    box.points_per_dim = N <= 1 ? 129 : (N == 2 ? 33 : 9);

    double target = 1e-3 * std::max(V, 1.0);
    GammaStar gs;
    DualScanResult scan;
    double spacing = cap / (box.points_per_dim - 1);
    for (int iter = 0;; ++iter) {
        scan = parallel ? scan_dual_grid_parallel(sc, V, box)
                        : scan_dual_grid_serial(sc, V, box);
        if (iter == 0) {
            // the uniqueness diagnostic comes from the full-box scan, where a
            // flat optimum is visible; later scans only see the refined patch
            gs.plateau_centroid.assign(N, 0.0);
            for (const auto& p : scan.plateau)
                for (int d = 0; d < N; ++d) gs.plateau_centroid[d] += p[d];
            for (int d = 0; d < N; ++d)
                gs.plateau_centroid[d] /= static_cast<double>(scan.plateau.size());
            std::vector<double> mn(N, std::numeric_limits<double>::infinity()), mx(N, 0.0);
            for (const auto& p : scan.plateau)
                for (int d = 0; d < N; ++d) {
                    mn[d] = std::min(mn[d], p[d]);
                    mx[d] = std::max(mx[d], p[d]);
                }
            double d2 = 0.0;
            for (int d = 0; d < N; ++d) d2 += (mx[d] - mn[d]) * (mx[d] - mn[d]);
            gs.plateau_diameter = std::sqrt(d2);
        }
        spacing = 0.0;
        for (int d = 0; d < N; ++d)
            spacing = std::max(spacing, (box.hi[d] - box.lo[d]) / (box.points_per_dim - 1));
        if (spacing <= target || iter >= 60) break;
        for (int d = 0; d < N; ++d) {
            double step = (box.hi[d] - box.lo[d]) / (box.points_per_dim - 1);
            box.lo[d] = std::max(0.0, scan.best_gamma[d] - 1.6 * step);
            box.hi[d] = scan.best_gamma[d] + 1.6 * step;
        }
    }

    gs.resolution = spacing;
    gs.gamma = scan.best_gamma;
    gs.g = scan.best_g;
    return gs;
}

std::map<long long, double> shift_distribution(const std::map<long long, double>& pmf, int D) {
    double sum = 0.0;
    for (const auto& [k, p] : pmf) {
        if (k < 0) throw std::invalid_argument("pmf has a negative delay key");
        if (p < -1e-15) throw std::invalid_argument("pmf has a negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("pmf sums to " + std::to_string(sum));
    if (D < 0) throw std::invalid_argument("negative shift");

    std::map<long long, double> out;
    for (const auto& [k, p] : pmf) {
        if (p == 0.0) continue;
        if (k <= D)
            out[0] += p;
        else
            out[k - D] += p;
    }
    return out;
}

double pmf_mean(const std::map<long long, double>& pmf) {
    double m = 0.0;
    for (const auto& [k, p] : pmf) m += static_cast<double>(k) * p;
    return m;
}

double delay_reduction(std::span<const std::map<long long, double>> pmfs,
                       std::span<const double> lambda, std::span<const int> D) {
    if (pmfs.size() != lambda.size() || pmfs.size() != D.size())
        throw std::invalid_argument("pmfs/lambda/D size mismatch");
    double lam_sum = 0.0;
    for (double l : lambda) lam_sum += l;
    if (lam_sum <= 0.0) throw std::invalid_argument("all arrival rates are zero");

    double num = 0.0;
    for (std::size_t n = 0; n < pmfs.size(); ++n) {
        double head = 0.0, tail = 0.0;
        for (const auto& [k, p] : pmfs[n]) {
            if (k >= 1 && k <= D[n]) head += static_cast<double>(k) * p;
            if (k >= D[n] + 1) tail += p;
        }
        num += lambda[n] * (head + static_cast<double>(D[n]) * tail);
    }
    return num / lam_sum;
}

}  // namespace preqsim
