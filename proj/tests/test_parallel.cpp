#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "preqsim/oracle.hpp"
#include "preqsim/parallel.hpp"
#include "preqsim/sweep.hpp"

using namespace preqsim;

TEST_CASE("worker_count precedence: request, env, default") {
    CHECK(worker_count(3) == 3);
    setenv("PREQSIM_THREADS", "2", 1);
    CHECK(worker_count() == 2);
    CHECK(worker_count(5) == 5);
    setenv("PREQSIM_THREADS", "junk", 1);
    CHECK(worker_count() >= 1);
    unsetenv("PREQSIM_THREADS");
    CHECK(worker_count() >= 1);
}

TEST_CASE("parallel sweep equals the serial reference, any worker count") {
    Scenario sc = paper_sec6_preset();
    ExperimentPlan plan;
    plan.algorithms = {"bp", "pbp"};
    plan.disciplines = {"fifo", "lifo"};
    plan.V = {5.0, 20.0};
    plan.rho = {1.0};
    plan.seeds = {1, 2};
    plan.T = 3000;
    auto configs = expand_plan(plan, sc);

    auto serial = run_plan_serial(configs);
    for (int workers : {1, 2, 8}) {
        auto par = run_plan_parallel(configs, workers);
        REQUIRE(par.size() == serial.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(par[i].f_av == serial[i].f_av);
            CHECK(par[i].q_sum_total == serial[i].q_sum_total);
            CHECK(par[i].q_actual_total == serial[i].q_actual_total);
            CHECK(par[i].zero_delay == serial[i].zero_delay);
        }
        std::string csv_a = summarize_sweep(serial, sc.n_users, 4.0, 18.0);
        std::string csv_b = summarize_sweep(par, sc.n_users, 4.0, 18.0);
        CHECK(csv_a == csv_b);
    }
}

TEST_CASE("parallel sweep propagates run failures") {
    Scenario sc = paper_sec6_preset();
    RunConfig bad;
    bad.scenario = sc;
    bad.T = -5;  // engine rejects the horizon
    std::vector<RunConfig> configs = {bad};
    CHECK_THROWS_AS(run_plan_parallel(configs, 2), ConfigError);
}

TEST_CASE("dual grid maximization: parallel kernel equals serial on refinement path") {
    Scenario sc = paper_sec6_preset();
    for (double V : {5.0, 50.0}) {
        GammaStar a = solve_gamma_star(sc, V, false);
        GammaStar b = solve_gamma_star(sc, V, true);
        CHECK(a.gamma == b.gamma);
        CHECK(a.g == b.g);
        CHECK(a.plateau_diameter == b.plateau_diameter);
    }
}
