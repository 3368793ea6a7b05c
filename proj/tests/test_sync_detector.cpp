#include "oracles/window_scan.hpp"
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace cfsync;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

ComplexFrequencySeries constant_node(double eps, double omega, double t_end = 20.0, double dt = 0.01) {
    const auto t = test::grid(0.0, t_end, dt);
    return test::make_series(t, {std::vector<double>(t.size(), eps)}, {std::vector<double>(t.size(), omega)});
}

NodeVerdict verdict_with_limit(int bus, double eps, double omega, bool converged = true) {
    NodeVerdict v;
    v.bus = bus;
    v.converged = converged;
    v.limit = {eps, omega};
    return v;
}

}  // namespace

TEST_CASE("coarse limit of a constant series is the constant", "[sync_detector]") {
    const auto s = constant_node(0.0, 377.0);
    SyncConfig cfg;
    const auto c = coarse_limit(s.view(0), cfg);
    CHECK(c.eps == 0.0);
    CHECK(c.omega == 377.0);
}

TEST_CASE("coarse limit equals the direct arithmetic mean of the segment", "[sync_detector]") {
    const auto t = test::grid(0.0, 20.0, 0.01);
    std::vector<double> e(t.size()), w(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        e[i] = 0.002 * ((i % 2) ? 1.0 : -1.0);
        w[i] = 377.0 + 0.01 * ((i % 2) ? 1.0 : -1.0);
    }
    const auto s = test::make_series(t, {e}, {w});
    SyncConfig cfg;  // segment [17, 20]
    double se = 0.0, sw = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= 17.0 - 1e-9) {
            se += e[i];
            sw += w[i];
            ++n;
        }
    }
    const auto c = coarse_limit(s.view(0), cfg);
    CHECK_THAT(c.eps, WithinAbs(se / n, 1e-15));
    CHECK_THAT(c.omega, WithinAbs(sw / n, 1e-12));
}

TEST_CASE("coarse segment after t_end is an error", "[sync_detector]") {
    const auto s = constant_node(0.0, 377.0);
    SyncConfig cfg;
    cfg.t_coarse = 25.0;
    REQUIRE_THROWS_WITH(coarse_limit(s.view(0), cfg), ContainsSubstring("empty coarse segment"));
}

TEST_CASE("exponential settling matches the analytic crossing", "[sync_detector]") {
    const auto t = test::grid(0.0, 20.0, 1e-3);
    std::vector<double> x;
    for (double s : t) x.push_back(1.0 + 5.0 * std::exp(-s));
    const auto tc = find_convergence_time(t, x, 1.0, 0.01, 1.0, 0.0);
    REQUIRE(tc);
    // The trailing window starts at tc - 1 where 5 e^{-(tc - 1)} first drops below 0.01.
    CHECK_THAT(*tc, WithinAbs(1.0 + std::log(500.0), 1.5e-3));
    CHECK(*tc == *oracle::window_scan(t, x, 1.0, 0.01, 1.0, 0.0));
}

TEST_CASE("a constant series converges at the earliest admissible instant", "[sync_detector]") {
    const auto t = test::grid(0.0, 10.0, 0.01);
    const std::vector<double> x(t.size(), 2.0);
    const auto tc = find_convergence_time(t, x, 2.0, 1e-3, 1.0, 3.0);
    REQUIRE(tc);
    CHECK_THAT(*tc, WithinAbs(4.0, 1e-12));
}

TEST_CASE("a series that never enters the band has no convergence time", "[sync_detector]") {
    const auto t = test::grid(0.0, 10.0, 0.01);
    const std::vector<double> x(t.size(), 2.0);
    CHECK_FALSE(find_convergence_time(t, x, 0.0, 1e-3, 1.0, 0.0));
}

TEST_CASE("window not shorter than the span is a configuration error", "[sync_detector]") {
    const auto t = test::grid(0.0, 1.0, 0.01);
    const std::vector<double> x(t.size(), 0.0);
    try {
        (void)find_convergence_time(t, x, 0.0, 1e-3, 1.0, 0.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}

TEST_CASE("detector agrees with the exhaustive window scan on random signals", "[sync_detector][property]") {
    std::mt19937 rng(20240611);
    int matched = 0;
    for (int k = 0; k < 100; ++k) {
        const auto s = oracle::random_settle_signal(rng);
        const auto got = find_convergence_time(s.t, s.x, s.target, s.tol, s.window, s.t_event);
        const auto ref = oracle::window_scan(s.t, s.x, s.target, s.tol, s.window, s.t_event);
        if (got == ref) ++matched;
    }
    CHECK(matched == 100);
}

TEST_CASE("loosening the tolerance never delays convergence", "[sync_detector][property]") {
    std::mt19937 rng(7);
    for (int k = 0; k < 50; ++k) {
        const auto s = oracle::random_settle_signal(rng);
        const auto tight = find_convergence_time(s.t, s.x, s.target, s.tol, s.window, s.t_event);
        const auto loose = find_convergence_time(s.t, s.x, s.target, 2.0 * s.tol, s.window, s.t_event);
        if (tight) {
            REQUIRE(loose);
            CHECK(*loose <= *tight);
        }
    }
}

TEST_CASE("shifting series and event by a constant shifts the result exactly", "[sync_detector][property]") {
    std::vector<double> t, t2, x;
    for (int i = 0; i <= 16384; ++i) {
        t.push_back(i / 1024.0);
        t2.push_back(t.back() + 8.0);
        const double a = std::max(0.0, t.back() - 1.0);
        x.push_back(t.back() >= 1.0 ? std::exp(-a) * std::cos(6.0 * a) : 0.0);
    }
    const auto a = find_convergence_time(t, x, 0.0, 1e-3, 0.5, 1.0);
    const auto b = find_convergence_time(t2, x, 0.0, 1e-3, 0.5, 9.0);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*b == *a + 8.0);
}

TEST_CASE("constant node converges with zero fluctuation", "[sync_detector]") {
    const auto s = constant_node(0.0, 377.0);
    SyncConfig cfg;
    const auto v = node_verdict(s.view(0), cfg, 4);
    CHECK(v.converged);
    CHECK(v.fluctuation == 0.0);
    CHECK(v.limit == ComplexFrequencySample{0.0, 377.0});
    CHECK(v.bus == 4);
}

TEST_CASE("eps settling before omega orders the convergence times", "[sync_detector]") {
    const auto t = test::grid(0.0, 20.0, 0.01);
    std::vector<double> e, w;
    for (double s : t) {
        const double a = std::max(0.0, s - 1.0);
        e.push_back(s < 1.0 ? 0.0 : 0.05 * std::exp(-1.5 * a));
        w.push_back(377.0 + (s < 1.0 ? 0.0 : 0.5 * std::exp(-0.8 * a)));
    }
    const auto series = test::make_series(t, {e}, {w});
    SyncConfig cfg;
    cfg.t_event = 1.0;
    const auto v = node_verdict(series.view(0), cfg);
    REQUIRE(v.t_eps);
    REQUIRE(v.t_omega);
    CHECK(*v.t_eps < *v.t_omega);
    CHECK(*v.t_end_k == *v.t_omega);
    std::vector<double> tv(t.begin(), t.end());
    CHECK(*v.t_eps == *oracle::window_scan(tv, e, v.coarse.eps, cfg.tol_eps, cfg.window, cfg.t_event));
    CHECK(*v.t_omega == *oracle::window_scan(tv, w, v.coarse.omega, cfg.tol_omega, cfg.window, cfg.t_event));
}

TEST_CASE("oscillation above the node tolerance is not converged", "[sync_detector]") {
    const auto t = test::grid(0.0, 20.0, 0.01);
    SyncConfig cfg;
    std::vector<double> e(t.size(), 0.0), w;
    for (std::size_t i = 0; i < t.size(); ++i) w.push_back(377.0 + 2.0 * cfg.tol_node * ((i % 2) ? 1.0 : -1.0));
    const auto s = test::make_series(t, {e}, {w});
    const auto v = node_verdict(s.view(0), cfg);
    CHECK_FALSE(v.converged);
    CHECK_THAT(v.fluctuation, WithinAbs(4.0 * cfg.tol_node, 1e-12));
}

TEST_CASE("window-mean limit mode averages the final window", "[sync_detector]") {
    const auto t = test::grid(0.0, 20.0, 0.5);
    std::vector<double> e(t.size(), 0.0), w(t.size(), 10.0);
    w.back() = 13.0;
    const auto s = test::make_series(t, {e}, {w});
    SyncConfig cfg;
    cfg.limit_mode = LimitMode::WindowMean;
    const auto v = node_verdict(s.view(0), cfg);
    CHECK_THAT(v.limit.omega, WithinAbs(11.0, 1e-12));  // samples at 19, 19.5, 20
}

TEST_CASE("subnet with identical limits is synchronized", "[sync_detector]") {
    SyncConfig cfg;
    const auto sv = subnet_verdict("S", {verdict_with_limit(1, 0.0, 377.1), verdict_with_limit(2, 0.0, 377.1)}, cfg);
    CHECK(sv.internally_synced);
    CHECK(*sv.spread == 0.0);
}

TEST_CASE("limits apart by twice tol_eq break subnet synchronization", "[sync_detector]") {
    SyncConfig cfg;
    const auto sv = subnet_verdict(
        "S", {verdict_with_limit(1, 0.0, 377.0), verdict_with_limit(2, 2.0 * cfg.tol_eq, 377.0)}, cfg);
    CHECK_FALSE(sv.internally_synced);
}

TEST_CASE("subnet spread equals the all-pairs maximum", "[sync_detector]") {
    SyncConfig cfg;
    std::vector<NodeVerdict> m{verdict_with_limit(1, 0.0, 1.0), verdict_with_limit(2, 3e-4, 1.0004),
                               verdict_with_limit(3, -2e-4, 0.9999)};
    double ref = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) ref = std::max(ref, distance(m[i].limit, m[j].limit));
    }
    const auto sv = subnet_verdict("S", m, cfg);
    CHECK(*sv.spread == ref);
    CHECK_THAT(sv.limit->eps, WithinAbs(1e-4 / 3.0, 1e-15));
}

TEST_CASE("a non-converged member forces an unsynchronized subnet", "[sync_detector][property]") {
    SyncConfig cfg;
    const auto sv = subnet_verdict(
        "S", {verdict_with_limit(1, 0.0, 377.0), verdict_with_limit(2, 0.0, 377.0, false)}, cfg);
    CHECK_FALSE(sv.internally_synced);
    CHECK(*sv.spread == 0.0);
}

TEST_CASE("subnet spread obeys the component-wise triangle bound", "[sync_detector][property]") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    SyncConfig cfg;
    for (int k = 0; k < 100; ++k) {
        std::vector<NodeVerdict> m;
        double elo = 1e9, ehi = -1e9, wlo = 1e9, whi = -1e9;
        for (int i = 0; i < 4; ++i) {
            m.push_back(verdict_with_limit(i, u(rng), 377.0 + u(rng)));
            elo = std::min(elo, m.back().limit.eps);
            ehi = std::max(ehi, m.back().limit.eps);
            wlo = std::min(wlo, m.back().limit.omega);
            whi = std::max(whi, m.back().limit.omega);
        }
        const auto sv = subnet_verdict("S", m, cfg);
        REQUIRE(*sv.spread <= (ehi - elo) + (whi - wlo) + 1e-15);
    }
}

TEST_CASE("empty subnet is rejected", "[sync_detector]") {
    REQUIRE_THROWS_WITH(subnet_verdict("S", {}, SyncConfig{}), ContainsSubstring("empty"));
}

TEST_CASE("identical nodes are globally synchronized", "[sync_detector]") {
    SyncConfig cfg;
    std::vector<NodeVerdict> nodes{verdict_with_limit(1, 0.0, 377.0), verdict_with_limit(2, 0.0, 377.0)};
    std::vector<SubnetVerdict> subs{subnet_verdict("A", {nodes[0]}, cfg), subnet_verdict("B", {nodes[1]}, cfg)};
    const auto g = global_verdict(subs, nodes, cfg);
    CHECK(g.status == GlobalStatus::Synchronized);
    CHECK(*subs[0].synced_with_global);
}

TEST_CASE("an offset subnet is flagged and breaks global synchronization", "[sync_detector]") {
    SyncConfig cfg;
    std::vector<NodeVerdict> nodes{verdict_with_limit(1, 0.0, 377.0), verdict_with_limit(2, 0.0, 377.0),
                                   verdict_with_limit(3, 0.0, 377.0 + 2.5 * cfg.tol_eq)};
    std::vector<SubnetVerdict> subs{subnet_verdict("A", {nodes[0], nodes[1]}, cfg), subnet_verdict("B", {nodes[2]}, cfg)};
    const auto g = global_verdict(subs, nodes, cfg);
    CHECK(g.status == GlobalStatus::NotSynchronized);
    CHECK(*subs[0].synced_with_global);
    CHECK_FALSE(*subs[1].synced_with_global);
}

TEST_CASE("no converged node leaves the global verdict undetermined", "[sync_detector]") {
    SyncConfig cfg;
    std::vector<NodeVerdict> nodes{verdict_with_limit(1, 0.0, 377.0, false)};
    std::vector<SubnetVerdict> subs{subnet_verdict("A", nodes, cfg)};
    const auto g = global_verdict(subs, nodes, cfg);
    CHECK(g.status == GlobalStatus::Undetermined);
    CHECK_FALSE(g.limit);
    CHECK_FALSE(subs[0].synced_with_global);
}
