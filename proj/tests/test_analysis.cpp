#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "preqsim/analysis.hpp"
#include "preqsim/engine.hpp"
#include "preqsim/oracle.hpp"
#include "preqsim/sweep.hpp"

using namespace preqsim;

TEST_CASE("empirical pmf from a packet log") {
    std::vector<PacketRow> log = {
        {0, 0, 0, 0}, {0, 1, 1, 0}, {0, 2, 5, 3}, {0, 3, -1, -1},
        {1, 0, 4, 4}, {1, 1, 5, 4},
    };
    auto pmfs = empirical_delay_pmf(log, 2);
    CHECK(pmfs[0].served == 3);
    CHECK(pmfs[0].censored == 1);
    CHECK(pmfs[0].at(0) == doctest::Approx(2.0 / 3));
    CHECK(pmfs[0].at(3) == doctest::Approx(1.0 / 3));
    CHECK(pmfs[1].at(4) == doctest::Approx(1.0));
    CHECK_THROWS_AS(empirical_delay_pmf(std::vector<PacketRow>{}, 1),
                    std::invalid_argument);
}

TEST_CASE("instant service gives a point mass at zero") {
    std::vector<PacketRow> log = {{0, 0, 0, 0}, {0, 1, 1, 0}, {0, 9, 9, 0}};
    auto pmfs = empirical_delay_pmf(log, 1);
    CHECK(pmfs[0].p.size() == 1);
    CHECK(pmfs[0].at(0) == doctest::Approx(1.0));
}

TEST_CASE("deterministic unit arrivals and unit service give delay one") {
    // D = 0: each packet arrives at t and is served at t+1
    Scenario s;
    s.name = "unit";
    s.n_users = 1;
    s.arrivals = {DiscreteDist{{1}, {1.0}}};
    s.channel_states = {{1}};
    s.channel_probs = {1.0};
    s.actions = {{{0}, {1}}};
    s.rate_rule = RateRule::Table;
    s.rate_table = {{{0}, {1}}};
    s.cost_rule = CostRule::Table;
    s.cost_table = {{0.0, 0.5}};
    s.prediction = {0};
    s = validate(std::move(s));

    EngineOptions opt;
    opt.V = 0.1;  // queue weight wins as soon as the queue is non-empty
    opt.burn_in = 0.1;
    RunReport rep = run_simulation(s, Algorithm::BP, opt, 5000, 3);
    CHECK(rep.delay[0].at(1) == doctest::Approx(1.0));
    CHECK(rep.w_tot == doctest::Approx(1.0));
}

TEST_CASE("tv distance basics") {
    std::map<long long, double> a = {{0, 0.5}, {1, 0.5}};
    std::map<long long, double> b = {{0, 0.5}, {2, 0.5}};
    CHECK(tv_distance(a, a) == doctest::Approx(0.0));
    CHECK(tv_distance(a, b) == doctest::Approx(0.5));
    std::map<long long, double> c = {{5, 1.0}};
    CHECK(tv_distance(a, c) == doctest::Approx(1.0));
}

TEST_CASE("verify_shift is exact on an analytically shifted pmf") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport base = run_simulation(sc, Algorithm::BP, opt, 40000, 21);

    RunReport pred = base;  // synthetic predictive run
    std::vector<int> D = {4, 9};
    for (int n = 0; n < 2; ++n) pred.delay[n].p = shift_distribution(base.delay[n].p, D[n]);
    ShiftCheck check = verify_shift(base, pred, D);
    CHECK(check.max_tv == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("verify_shift with zero window and the same seed is exact") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport a = run_simulation(sc, Algorithm::BP, opt, 20000, 5);
    RunReport b = run_simulation(sc, Algorithm::BP, opt, 20000, 5);
    std::vector<int> D = {0, 0};
    CHECK(verify_shift(a, b, D).max_tv == doctest::Approx(0.0));
}

TEST_CASE("verify_shift rejects mismatched configurations") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport a = run_simulation(sc, Algorithm::BP, opt, 5000, 5);
    RunReport b = a;
    b.discipline = Discipline::Lifo;
    std::vector<int> D = {0, 0};
    CHECK_THROWS_AS(verify_shift(a, b, D), std::invalid_argument);
    RunReport c = a;
    c.V = 20.0;
    CHECK_THROWS_AS(verify_shift(a, c, D), std::invalid_argument);
}

TEST_CASE("theorem9_gap trivial cases and guards") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport bp = run_simulation(sc, Algorithm::BP, opt, 20000, 9);

    SUBCASE("identical runs, zero window") {
        std::vector<int> D = {0, 0};
        auto gap = theorem9_gap(bp, bp, sc.lambda, D, {}, sc.a_max);
        CHECK(gap.observed == doctest::Approx(0.0));
        CHECK(gap.predicted == doctest::Approx(0.0));
        CHECK(gap.ratio == doctest::Approx(1.0));
    }
    SUBCASE("predicted reduction is sum of D_n lambda_n") {
        std::vector<int> D = {5, 10};
        auto gap = theorem9_gap(bp, bp, sc.lambda, D, {}, sc.a_max);
        CHECK(gap.predicted == doctest::Approx(5 * 0.6 + 10 * 1.0));
    }
    SUBCASE("discipline guard") {
        RunReport lifo = bp;
        lifo.discipline = Discipline::Lifo;
        std::vector<int> D = {0, 0};
        CHECK_THROWS_AS(theorem9_gap(bp, lifo, sc.lambda, D, {}, sc.a_max),
                        std::invalid_argument);
    }
    SUBCASE("window gate against gamma star") {
        std::vector<int> D = {5, 10};
        std::vector<double> gamma = {10.0, 35.0};  // D*A_max = 15, 30
        CHECK_THROWS_AS(theorem9_gap(bp, bp, sc.lambda, D, gamma, sc.a_max),
                        std::invalid_argument);
    }
}

TEST_CASE("sweep csv has the stable schema and one row per run") {
    Scenario sc = paper_sec6_preset();
    ExperimentPlan plan;
    plan.T = 2000;
    plan.V = {5.0, 10.0};
    plan.seeds = {1};
    auto configs = expand_plan(plan, sc);
    auto reports = run_plan_serial(configs);
    std::string csv = summarize_sweep(reports, sc.n_users, 4.0, 18.0);

    std::istringstream is(csv);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "algo,discipline,V,D1,D2,seed,T,f_av,f_star,f_bound,q_sum_av,q_actual_av,"
          "w_tot,zero_delay_1,zero_delay_2,censored");
    int rows = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    CHECK(csv.find("pbp,fifo,5,5,10,1,2000") != std::string::npos);
}

TEST_CASE("theorem-2 drift constant for the paper scenario") {
    Scenario sc = paper_sec6_preset();
    CHECK(drift_penalty_bound(sc) == doctest::Approx(18.0));
}

TEST_CASE("run report json round trip") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport a = run_simulation(sc, Algorithm::PBP, opt, 5000, 13);
    RunReport b = report_from_json_text(report_to_json_text(a));
    CHECK(a.algo == b.algo);
    CHECK(a.f_av == b.f_av);
    CHECK(a.q_sum_total == b.q_sum_total);
    CHECK(a.zero_delay == b.zero_delay);
    for (int n = 0; n < sc.n_users; ++n) CHECK(a.delay[n].p == b.delay[n].p);
}

TEST_CASE("plan json round trip and deterministic expansion order") {
    ExperimentPlan plan;
    plan.scenario_ref = "paper_sec6";
    plan.algorithms = {"bp", "pbp"};
    plan.disciplines = {"fifo", "lifo"};
    plan.V = {1.0, 3.0};
    plan.rho = {1.0, 3.0};
    plan.seeds = {1, 2};
    plan.T = 100;
    ExperimentPlan back = ExperimentPlan::from_json_text(plan.to_json_text());
    CHECK(back.algorithms == plan.algorithms);
    CHECK(back.V == plan.V);
    CHECK(back.rho == plan.rho);
    CHECK(back.T == plan.T);

    Scenario sc = paper_sec6_preset();
    auto configs = expand_plan(plan, sc);
    REQUIRE(configs.size() == 2 * 2 * 2 * 2 * 2);
    // order: algorithm, discipline, V, window, seed
    CHECK(configs[0].algo == Algorithm::BP);
    CHECK(configs[0].discipline == Discipline::Fifo);
    CHECK(configs[0].V == 1.0);
    CHECK(configs[0].scenario.prediction == std::vector<int>{5, 10});
    CHECK(configs[0].seed == 1);
    CHECK(configs[1].seed == 2);
    CHECK(configs[2].scenario.prediction == std::vector<int>{15, 30});
    CHECK(configs.back().algo == Algorithm::PBP);
    CHECK(configs.back().discipline == Discipline::Lifo);
}
