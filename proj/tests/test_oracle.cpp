#include <catch2/catch_amalgamated.hpp>

#include "qpwalk/ergodicity.hpp"
#include "qpwalk/model_io.hpp"
#include "qpwalk/oracle.hpp"

using namespace qpwalk;

TEST_CASE("absorbing origin concentrates all mass") {
    Model m = make_symmetric_aloha(0.0, 0.6, 2, 2);
    TruncatedSolution sol = truncated_stationary(m.kernel, 10, 1e-12);
    CHECK(sol.at(0, 0) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("truncation below the thresholds is rejected") {
    Model m = make_symmetric_aloha(0.2, 0.6, 2, 2);
    CHECK_THROWS_AS(truncated_stationary(m.kernel, 3), ValidationError);
}

TEST_CASE("symmetric model has a symmetric stationary law") {
    Model m = make_symmetric_aloha(0.2, 0.6, 2, 2);
    TruncatedSolution sol = truncated_stationary(m.kernel, 60, 1e-12);
    CHECK(sol.residual < 1e-12);
    for (int i = 0; i <= 20; ++i)
        for (int j = 0; j < i; ++j)
            CHECK(sol.at(i, j) == Catch::Approx(sol.at(j, i)).margin(1e-10));
    double sum = 0;
    for (double v : sol.pi) sum += v;
    CHECK(sum == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("doubling the truncation leaves the head unchanged") {
    Model m = make_symmetric_aloha(0.2, 0.6, 2, 2);
    TruncatedSolution a = truncated_stationary(m.kernel, 60, 1e-12);
    TruncatedSolution b = truncated_stationary(m.kernel, 120, 1e-12);
    double worst = 0;
    for (int n1 = 0; n1 <= 10; ++n1)
        for (int n2 = 0; n2 <= 10 - n1; ++n2)
            worst = std::max(worst, std::abs(a.at(n1, n2) - b.at(n1, n2)));
    CHECK(worst < 1e-8);
}

TEST_CASE("global balance holds at interior grid states") {
    Model m = make_stability_aloha(0.2, 0.05, 0.05);
    const int T = 40;
    TruncatedSolution sol = truncated_stationary(m.kernel, T, 1e-12);
    // inflow equals stationary mass away from the folded edges
    for (int n1 = 3; n1 <= 8; ++n1)
        for (int n2 = 3; n2 <= 8; ++n2) {
            double inflow = 0;
            for (int i = -1; i <= 1; ++i)
                for (int j = -1; j <= 1; ++j)
                    inflow += sol.at(n1 - i, n2 - j) * m.kernel.p(i, j, {n1 - i, n2 - j});
            CHECK(inflow == Catch::Approx(sol.at(n1, n2)).margin(1e-12));
        }
}

TEST_CASE("simulation is pinned at the origin without arrivals") {
    Model m = make_symmetric_aloha(0.0, 0.6, 2, 2);
    SimulationResult res = simulate(m.kernel, 2000, 11);
    CHECK(res.at({0, 0}) == 1.0);
    CHECK(res.final_state == State{0, 0});
}

TEST_CASE("equal seeds reproduce bit-identical results") {
    Model m = make_symmetric_aloha(0.2, 0.6, 2, 2);
    SimulationResult a = simulate(m.kernel, 50000, 42);
    SimulationResult b = simulate(m.kernel, 50000, 42);
    CHECK(a.empirical == b.empirical);
    CHECK(a.drift1 == b.drift1);
    CHECK(a.final_state == b.final_state);
    SimulationResult c = simulate(m.kernel, 50000, 43);
    CHECK(a.empirical != c.empirical);
}

TEST_CASE("ergodic point: empirical origin mass agrees with the direct solve") {
    Model m = make_symmetric_aloha(0.2, 0.6, 2, 2);
    TruncatedSolution sol = truncated_stationary(m.kernel, 60, 1e-12);
    SimulationResult sim = simulate(m.kernel, 2000000, 1234);
    // crude standard error for an indicator with some autocorrelation slack
    double p = sim.at({0, 0});
    double se = 3 * std::sqrt(p * (1 - p) / sim.steps) * 5;
    CHECK(std::abs(p - sol.at(0, 0)) < std::max(se, 2e-3));
}

TEST_CASE("transient point has positive drift at three sigma") {
    Model m = make_symmetric_aloha(0.35, 0.6, 2, 2);
    REQUIRE(classify(m.kernel) == Classification::Transient);
    SimulationResult sim = simulate(m.kernel, 1000000, 7);
    CHECK(sim.drift1 - 3 * sim.drift1_se > 0);
    CHECK(sim.drift2 - 3 * sim.drift2_se > 0);
}

TEST_CASE("compare metrics") {
    auto zero = [](State) { return 0.0; };
    CompareReport same = compare_on_window(zero, zero, 10);
    CHECK(same.max_abs == 0.0);
    CHECK(same.total_variation == 0.0);
    auto bump = [](State s) { return s == State{2, 3} ? 1e-3 : 0.0; };
    CompareReport rep = compare_on_window(bump, zero, 10);
    CHECK(rep.max_abs == Catch::Approx(1e-3));
    CHECK(rep.argmax == State{2, 3});
}
