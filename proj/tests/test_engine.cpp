#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <set>
#include <utility>

#include "preqsim/engine.hpp"
#include "preqsim/scenario.hpp"

using namespace preqsim;

namespace {

// single user, window D, scripted dynamics; arrivals beyond the script are 0
struct ScriptedRun {
    Scenario sc;
    Engine eng;

    ScriptedRun(int window, Discipline disc, std::vector<int> first, long long horizon)
        : sc(make_scenario(window)),
          eng(sc, Algorithm::PBP, make_options(disc), horizon) {
        eng.init_scripted(std::vector<std::vector<int>>{first});
    }

    static Scenario make_scenario(int window) {
        Scenario s;
        s.name = "scripted";
        s.n_users = 1;
        s.arrivals = {DiscreteDist{{0}, {1.0}}};
        s.channel_states = {{1}};
        s.channel_probs = {1.0};
        s.actions = {{{0}}};
        s.rate_rule = RateRule::Table;
        s.rate_table = {{{0}}};
        s.cost_rule = CostRule::Table;
        s.cost_table = {{0.0}};
        s.prediction = {window};
        return validate(std::move(s));
    }

    static EngineOptions make_options(Discipline disc) {
        EngineOptions opt;
        opt.discipline = disc;
        opt.check_twin = true;
        opt.validate_alloc = true;
        opt.packet_log = true;
        opt.slot_trace = true;
        opt.burn_in = 0.0;
        return opt;
    }

    void slot(int mu, int next_arrival) {
        int rates[] = {mu};
        int arr[] = {next_arrival};
        eng.step_scripted(0, rates, arr);
    }
};

}  // namespace

TEST_CASE("window zero reduces to the single-queue recursion") {
    // Q(t+1) = [Q(t) - mu]^+ + A(t); arrivals 4,0,0,... with mu 0,1,1,...
    ScriptedRun run(0, Discipline::Fifo, {}, 8);
    run.slot(0, 4);
    CHECK(run.eng.q_actual(0) == 4);
    std::vector<long long> expect = {3, 2, 1, 0, 0, 0, 0};
    for (long long q : expect) {
        run.slot(1, 0);
        CHECK(run.eng.q_actual(0) == q);
        CHECK(run.eng.q_hat(0) == q);
    }
}

TEST_CASE("golden trace: D=2, arrivals (2,1,0,3,0), mu=2, FIFO") {
    ScriptedRun run(2, Discipline::Fifo, {2, 1}, 5);
    // snapshots of (Q^(-1), Q^(0), Q^(1)) at the start of each slot
    struct Row {
        long long actual;
        std::vector<int> pred;
    };
    std::vector<Row> expect = {
        {0, {2, 1}}, {0, {1, 0}}, {0, {0, 3}}, {0, {1, 0}}, {0, {0, 0}},
    };
    std::vector<int> scripted_arrivals = {0, 3, 0, 0, 0};  // A(t+2) drawn at slot t
    for (std::size_t t = 0; t < expect.size(); ++t) {
        CHECK(run.eng.q_actual(0) == expect[t].actual);
        CHECK(run.eng.pred_queues(0) == expect[t].pred);
        run.slot(2, scripted_arrivals[t]);
    }
    CHECK(run.eng.q_sum(0) == 0);
    // every packet pre-served: all delays zero
    RunReport rep = run.eng.report();
    CHECK(rep.delay[0].served == 6);
    CHECK(rep.delay[0].censored == 0);
    CHECK(rep.delay[0].at(0) == doctest::Approx(1.0));
}

TEST_CASE("golden trace: D=2, arrivals (2,1,0,3,0), mu=1, FIFO") {
    ScriptedRun run(2, Discipline::Fifo, {2, 1}, 5);
    std::vector<int> scripted_arrivals = {0, 3, 0, 0, 0};
    std::vector<long long> expect_actual = {0, 1, 1, 0, 2};
    std::vector<std::vector<int>> expect_pred = {{2, 1}, {1, 0}, {0, 3}, {3, 0}, {0, 0}};
    std::vector<long long> expect_hat = {3, 2, 4, 3, 2};
    for (int t = 0; t < 5; ++t) {
        CHECK(run.eng.q_actual(0) == expect_actual[t]);
        CHECK(run.eng.pred_queues(0) == expect_pred[t]);
        CHECK(run.eng.q_hat(0) == expect_hat[t]);
        run.slot(1, scripted_arrivals[t]);
    }
    CHECK(run.eng.q_actual(0) == 1);  // one packet of cohort 3 still queued
    RunReport rep = run.eng.report();
    CHECK(rep.delay[0].served == 5);
    CHECK(rep.delay[0].censored == 1);
    CHECK(rep.delay[0].at(0) == doctest::Approx(2.0 / 5));
    CHECK(rep.delay[0].at(1) == doctest::Approx(3.0 / 5));
}

TEST_CASE("golden trace: D=2, arrivals (2,1,0,3,0), mu=1, LIFO") {
    ScriptedRun run(2, Discipline::Lifo, {2, 1}, 5);
    std::vector<int> scripted_arrivals = {0, 3, 0, 0, 0};
    std::vector<long long> expect_actual = {0, 2, 1, 1, 2};
    std::vector<std::vector<int>> expect_pred = {{2, 1}, {0, 0}, {0, 3}, {2, 0}, {0, 0}};
    for (int t = 0; t < 5; ++t) {
        CHECK(run.eng.q_actual(0) == expect_actual[t]);
        CHECK(run.eng.pred_queues(0) == expect_pred[t]);
        run.slot(1, scripted_arrivals[t]);
    }
    RunReport rep = run.eng.report();
    CHECK(rep.delay[0].served == 5);
    CHECK(rep.delay[0].censored == 1);
    CHECK(rep.delay[0].at(0) == doctest::Approx(3.0 / 5));
    CHECK(rep.delay[0].at(1) == doctest::Approx(2.0 / 5));
    // LIFO leaves the oldest packet behind
    bool censored_is_cohort0 = false;
    for (const auto& row : run.eng.full_packet_log())
        if (row.served_slot < 0 && row.arrival_slot == 0) censored_is_cohort0 = true;
    CHECK(censored_is_cohort0);
    CHECK(run.eng.q_actual(0) == 1);
}

TEST_CASE("init fills the window with the first D_n arrivals") {
    Scenario sc = paper_sec6_preset();
    sc.prediction = {3, 0};
    sc.validated = false;
    sc = validate(std::move(sc));

    EngineOptions opt;
    opt.burn_in = 0.0;
    Engine eng(sc, Algorithm::PBP, opt, 10);
    ScenarioRng rng(sc, 11);
    ScenarioRng replay(sc, 11);
    eng.init(rng);

    std::vector<int> expected;
    for (int d = 0; d < 3; ++d) expected.push_back(sc.arrivals[0].sample(replay.arrival[0]));
    CHECK(eng.pred_queues(0) == expected);
    CHECK(eng.q_actual(0) == 0);
    long long sum = expected[0] + expected[1] + expected[2];
    CHECK(eng.q_hat(0) == sum);
    CHECK(eng.q_sum(0) == sum);
    CHECK(eng.q_sum(1) == 0);  // D_2 = 0
}

TEST_CASE("BP and PBP coincide when every window is zero") {
    Scenario sc = paper_sec6_preset();
    sc.prediction = {0, 0};
    sc.validated = false;
    sc = validate(std::move(sc));

    EngineOptions opt;
    opt.V = 10.0;
    opt.slot_trace = true;
    opt.burn_in = 0.0;

    Engine bp(sc, Algorithm::BP, opt, 2000);
    Engine pbp(sc, Algorithm::PBP, opt, 2000);
    ScenarioRng r1(sc, 3), r2(sc, 3);
    RunReport rep_bp = bp.run(r1);
    RunReport rep_pbp = pbp.run(r2);

    CHECK(rep_bp.f_av == rep_pbp.f_av);
    CHECK(rep_bp.q_actual_total == rep_pbp.q_actual_total);
    REQUIRE(bp.slot_trace().size() == pbp.slot_trace().size());
    for (std::size_t i = 0; i < bp.slot_trace().size(); ++i) {
        CHECK(bp.slot_trace()[i].action == pbp.slot_trace()[i].action);
        CHECK(bp.slot_trace()[i].q_actual == pbp.slot_trace()[i].q_actual);
    }
}

TEST_CASE("same seed twice gives a bit-identical report") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport a = run_simulation(sc, Algorithm::PBP, opt, 20000, 77);
    RunReport b = run_simulation(sc, Algorithm::PBP, opt, 20000, 77);
    CHECK(a.f_av == b.f_av);
    CHECK(a.q_sum_total == b.q_sum_total);
    CHECK(a.q_actual_total == b.q_actual_total);
    CHECK(a.zero_delay == b.zero_delay);
    for (int n = 0; n < sc.n_users; ++n) {
        CHECK(a.delay[n].p == b.delay[n].p);
        CHECK(a.delay[n].served == b.delay[n].served);
    }
}

TEST_CASE("property: twin equivalence holds on random scenarios") {
    RngStream gen(2025, 0);
    for (int trial = 0; trial < 40; ++trial) {
        Scenario sc = random_scenario(gen);
        for (Discipline disc : {Discipline::Fifo, Discipline::Lifo}) {
            EngineOptions opt;
            opt.discipline = disc;
            opt.check_twin = true;
            opt.validate_alloc = true;
            opt.V = static_cast<double>(gen.next_below(50));
            // a throw here means the equivalence broke
            RunReport rep = run_simulation(sc, Algorithm::PBP, opt, 2000, gen.next_u64());
            CHECK(rep.twin_checked);
        }
    }
}

TEST_CASE("property: integer conservation of packets") {
    RngStream gen(31337, 0);
    for (int trial = 0; trial < 25; ++trial) {
        Scenario sc = random_scenario(gen);
        EngineOptions opt;
        opt.burn_in = 0.0;
        Engine eng(sc, Algorithm::PBP, opt, 1500);
        ScenarioRng rng(sc, gen.next_u64());
        RunReport rep = eng.run(rng);
        long long still_queued = 0;
        for (int n = 0; n < sc.n_users; ++n) still_queued += eng.q_sum(n);
        CHECK(rep.packets_entered ==
              rep.packets_served + static_cast<std::uint64_t>(still_queued));
    }
}

TEST_CASE("actual-queue inflow matches the survivor cascade") {
    // replay [A - mu]^+ along each cohort's journey from the slot trace
    RngStream gen(4242, 0);
    RandomScenarioOptions o;
    o.max_users = 2;
    o.max_window = 5;
    Scenario sc = random_scenario(gen, o);
    EngineOptions opt;
    opt.slot_trace = true;
    opt.burn_in = 0.0;
    opt.V = 5.0;
    Engine eng(sc, Algorithm::PBP, opt, 400);
    ScenarioRng rng(sc, 9);
    eng.run(rng);
    const auto& trace = eng.slot_trace();

    for (int n = 0; n < sc.n_users; ++n) {
        int D = sc.prediction[n];
        if (D == 0) continue;
        for (long long tau = D; tau + 1 < static_cast<long long>(trace.size()); ++tau) {
            // cohort tau was drawn at slot tau - D
            long long cnt = trace[tau - D].arrivals_drawn[n];
            for (int d = D - 1; d >= 0; --d) {
                long long slot = tau - d;
                cnt = std::max<long long>(cnt - trace[slot].alloc[n][1 + d], 0);
            }
            // inflow reconstructed from consecutive actual-queue snapshots
            long long served = std::min<long long>(trace[tau].alloc[n][0],
                                                   trace[tau].q_actual[n]);
            long long inflow = trace[tau + 1].q_actual[n] -
                               (trace[tau].q_actual[n] - served);
            CHECK(inflow == cnt);
        }
    }
}

TEST_CASE("per-packet delays equal the twin delays shifted by D") {
    Scenario sc = paper_sec6_preset();
    sc.prediction = {3, 6};
    sc.validated = false;
    sc = validate(std::move(sc));

    for (Discipline disc : {Discipline::Fifo, Discipline::Lifo}) {
        EngineOptions opt;
        opt.discipline = disc;
        opt.V = 5.0;
        opt.packet_log = true;
        opt.burn_in = 0.0;

        Engine pred(sc, Algorithm::PBP, opt, 3000);
        ScenarioRng r1(sc, 123);
        pred.run(r1);

        EngineOptions topt = opt;
        topt.twin_arrivals = true;
        Engine twin(sc, Algorithm::BP, topt, 3000);
        ScenarioRng r2(sc, 123);
        twin.run(r2);

        // group served delays by (user, original arrival slot)
        using Key = std::pair<int, long long>;
        std::map<Key, std::multiset<long long>> from_pred, from_twin;
        for (const auto& row : pred.packet_log())
            from_pred[{row.user, row.arrival_slot}].insert(row.delay);
        for (const auto& row : twin.packet_log()) {
            int D = sc.prediction[row.user];
            from_twin[{row.user, row.arrival_slot + D}].insert(
                std::max<long long>(row.delay - D, 0));
        }
        CHECK(from_pred == from_twin);
    }
}

TEST_CASE("little's law consistency on a stable run") {
    Scenario sc = paper_sec6_preset();
    EngineOptions opt;
    opt.V = 10.0;
    RunReport rep = run_simulation(sc, Algorithm::PBP, opt, 100000, 5);
    CHECK(rep.little_ok);
    CHECK(rep.censored_frac < 1e-3);
}

TEST_CASE("zero arrival rates cost nothing under any V") {
    Scenario sc = paper_sec6_preset();
    for (auto& d : sc.arrivals) d = DiscreteDist{{0}, {1.0}};
    sc.validated = false;
    sc = validate(std::move(sc));
    for (double v : {0.0, 1.0, 50.0}) {
        EngineOptions opt;
        opt.V = v;
        RunReport rep = run_simulation(sc, Algorithm::PBP, opt, 5000, 1);
        CHECK(rep.f_av == 0.0);
        CHECK(rep.q_sum_av == 0.0);
    }
}

TEST_CASE("zero-delay fraction is non-decreasing in the window size") {
    Scenario base = paper_sec6_preset();
    std::vector<std::vector<int>> windows = {{0, 0}, {2, 4}, {5, 10}, {15, 30}};
    std::vector<std::vector<double>> fractions;
    for (const auto& w : windows) {
        Scenario sc = base;
        sc.prediction = w;
        sc.validated = false;
        sc = validate(std::move(sc));
        EngineOptions opt;
        opt.V = 10.0;
        RunReport rep = run_simulation(sc, Algorithm::PBP, opt, 50000, 99);
        fractions.push_back(rep.zero_delay);
    }
    for (std::size_t i = 1; i < fractions.size(); ++i)
        for (int n = 0; n < base.n_users; ++n)
            CHECK(fractions[i][n] >= fractions[i - 1][n] - 0.005);
}
