#include "test_support.hpp"

#include <catch_amalgamated.hpp>

using namespace cfsync;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("capacitor voltage inertia follows v^2 C / (2 S)", "[generalized_inertia]") {
    CHECK(capacitor_voltage_inertia(1.0, 2.0, 1.0) == 1.0);
    CHECK_THAT(capacitor_voltage_inertia(1.1, 3.0, 100.0), WithinAbs(1.21 * 3.0 / 200.0, 1e-15));
    REQUIRE_THROWS_AS(capacitor_voltage_inertia(0.0, 1.0, 1.0), Error);
    REQUIRE_THROWS_AS(capacitor_voltage_inertia(1.0, -1.0, 1.0), Error);
}

TEST_CASE("initial eps is inversely proportional to H_v", "[generalized_inertia]") {
    CapacitorBusModel m;
    m.t_step = 0.5;
    const auto sw = simulate_capacitor_bus(m, {1.0, 2.0, 4.0}, 5.0, 1e-3);
    const auto k = static_cast<std::size_t>(snap_to_grid(m.t_step, 1e-3));
    const double e1 = sw.runs[0].eps[k];
    CHECK(e1 > 0.0);
    CHECK_THAT(sw.runs[1].eps[k] / e1, WithinAbs(0.5, 1e-9));
    CHECK_THAT(sw.runs[2].eps[k] / e1, WithinAbs(0.25, 1e-9));
    CHECK(sw.runs[0].eps[k - 1] == 0.0);
}

TEST_CASE("peak eps magnitude strictly decreases with H_v", "[generalized_inertia]") {
    const auto sw = simulate_capacitor_bus(CapacitorBusModel{}, {0.5, 1.0, 2.0, 4.0, 8.0}, 5.0, 1e-3);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : sw.runs) {
        double peak = 0.0;
        for (double e : r.eps) peak = std::max(peak, std::abs(e));
        CHECK(peak < prev);
        prev = peak;
    }
}

TEST_CASE("voltage inertia fit recovers each H_v", "[generalized_inertia]") {
    const auto sw = simulate_capacitor_bus(CapacitorBusModel{}, {1.0, 2.0, 4.0}, 5.0, 1e-3);
    for (const auto& r : sw.runs) {
        const auto f = estimate_voltage_inertia(sw.times, r.eps, r.dq, 0.0, 5.0);
        CHECK_THAT(f.value, WithinRel(r.h_v, 1e-2));
        CHECK(f.residual < 1e-9);
    }
}

TEST_CASE("capacitor bus settles where supply meets load", "[generalized_inertia]") {
    CapacitorBusModel m;
    m.q_step = 0.21;
    const auto sw = simulate_capacitor_bus(m, {1.0}, 40.0, 1e-3);
    CHECK_THAT(sw.runs[0].v.back(), WithinAbs(1.1, 1e-6));  // B v^2 = 1.21
}

TEST_CASE("capacitor voltage collapse is a numerical failure", "[generalized_inertia]") {
    CapacitorBusModel m;
    m.q_step = -2.0;
    try {
        (void)simulate_capacitor_bus(m, {1.0}, 60.0, 1e-2);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numerical);
        CHECK_THAT(e.what(), ContainsSubstring("voltage collapse"));
    }
}

TEST_CASE("frequency inertia is exact for a quadratic speed trajectory", "[generalized_inertia]") {
    const auto t = test::grid(0.0, 2.0, 1e-3);
    const double m = 0.0336;
    std::vector<double> w, dp;
    for (double s : t) {
        w.push_back(377.0 + 0.3 * s * s);
        dp.push_back(m * 0.6 * s);
    }
    const auto f = estimate_frequency_inertia(t, w, dp, 0.5, 1.5);
    CHECK_THAT(f.value, WithinRel(m, 1e-9));
    CHECK(f.samples == 1001);
}

TEST_CASE("flat speed gives no frequency excursion", "[generalized_inertia]") {
    const auto t = test::grid(0.0, 1.0, 1e-3);
    const std::vector<double> w(t.size(), 377.0), dp(t.size(), 0.1);
    REQUIRE_THROWS_WITH(estimate_frequency_inertia(t, w, dp, 0.0, 1.0), ContainsSubstring("no frequency excursion"));
    REQUIRE_THROWS_AS(estimate_frequency_inertia(t, w, dp, 0.5, 0.5), Error);
}

TEST_CASE("zeta equals the power imbalance for exact models", "[generalized_inertia]") {
    const auto sw = simulate_capacitor_bus(CapacitorBusModel{}, {2.0}, 2.0, 1e-3);
    const auto& r = sw.runs[0];
    const std::vector<double> wdot(r.eps.size(), 0.5);
    const auto z = generalized_inertia_series(r.h_v, 0.04, r.eps, wdot);
    for (std::size_t i = 0; i < z.size(); ++i) {
        REQUIRE_THAT(z[i].real(), WithinAbs(r.dq[i], 1e-15));
        REQUIRE_THAT(z[i].imag(), WithinAbs(0.02, 1e-15));
    }
}

TEST_CASE("generator inertia from the load-shed swing matches the case data", "[generalized_inertia]") {
    auto c = test::wscc9();
    for (auto& g : c.generators) {
        g.d = 0.1;
        g.governor.reset();
    }
    SimConfig sc;
    sc.t_end = 3.0;
    const auto tr = simulate(c, sc);
    const auto cf = estimate_complex_frequency(tr);
    InertiaConfig ic;
    ic.window_start = 2.0 + 2 * sc.dt;
    ic.window_end = 2.3;
    const auto est = estimate_generator_inertia(tr, c, cf, ic);
    REQUIRE(est.size() == 3);
    for (const auto& e : est) {
        INFO(e.bus_or_region);
        CHECK_THAT(e.m, WithinRel(e.m_case, 0.02));
        CHECK(e.h_v);
        CHECK(e.zeta_series.size() == e.imbalance.size());
    }
    CHECK_THAT(est[0].m_case, WithinRel(2.0 * 23.64 / c.omega_s(), 1e-12));
}
