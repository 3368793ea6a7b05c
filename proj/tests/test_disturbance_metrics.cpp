#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace cfsync;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NodeMetrics with_times(int bus, std::optional<double> te, std::optional<double> tw) {
    NodeMetrics m;
    m.bus = bus;
    m.t_eps = te;
    m.t_omega = tw;
    return m;
}

NodeVerdict with_limit(int bus, double eps, double omega) {
    NodeVerdict v;
    v.bus = bus;
    v.converged = true;
    v.limit = {eps, omega};
    return v;
}

std::vector<double> sampled(const std::vector<double>& t, double c, double a, double sigma, double freq) {
    std::vector<double> x;
    for (double s : t) x.push_back(c + a * std::exp(-sigma * s) * (freq > 0.0 ? std::cos(freq * s) : 1.0));
    return x;
}

}  // namespace

TEST_CASE("convergence rate reproduces the tabulated time-rate pairs", "[disturbance_metrics]") {
    CHECK_THAT(convergence_rate(14.27), WithinAbs(0.0701, 5e-4));
    CHECK_THAT(convergence_rate(10.2), WithinAbs(0.0980, 5e-4));
}

TEST_CASE("rate is the reciprocal of time", "[disturbance_metrics][property]") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.01, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const double t = u(rng);
        REQUIRE(convergence_rate(t) == 1.0 / t);
    }
}

TEST_CASE("overshoot of a full sine period is two", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 2.0 * std::numbers::pi, 1e-4);
    std::vector<double> x;
    for (double s : t) x.push_back(std::sin(s));
    CHECK_THAT(overshoot(t, x, 0.0, 2.0 * std::numbers::pi), WithinAbs(2.0, 1e-8));
}

TEST_CASE("overshoot of a constant is zero and of a ramp is its rise", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 10.0, 0.01);
    const std::vector<double> c(t.size(), 3.0);
    CHECK(overshoot(t, c, 1.0, 9.0) == 0.0);
    std::vector<double> r;
    for (std::size_t i = 0; i < t.size(); ++i) r.push_back(0.5 * static_cast<double>(i));
    CHECK(overshoot(t, r, 0.0, 10.0) == r.back() - r.front());
}

TEST_CASE("overshoot is invariant to offsets and time reversal", "[disturbance_metrics][property]") {
    std::mt19937 rng(4);
    std::normal_distribution<double> nd;
    const auto t = test::grid(0.0, 5.0, 0.01);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> x(t.size());
        for (auto& v : x) v = nd(rng);
        std::vector<double> shifted, reversed(x.rbegin(), x.rend());
        for (double v : x) shifted.push_back(v + 0.25);
        const double a = overshoot(t, x, 0.0, 5.0);
        CHECK_THAT(overshoot(t, shifted, 0.0, 5.0), WithinAbs(a, 1e-12));
        CHECK(overshoot(t, reversed, 0.0, 5.0) == a);
    }
}

TEST_CASE("empty overshoot window is an error", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 1.0, 0.1);
    const std::vector<double> x(t.size(), 0.0);
    REQUIRE_THROWS_WITH(overshoot(t, x, 2.0, 3.0), ContainsSubstring("empty overshoot window"));
}

TEST_CASE("pure exponential decay is recovered exactly", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 20.0, 1e-3);
    const auto x = sampled(t, 1.0, 2.0, 0.5, 0.0);
    const auto f = fit_damping(t, x, 1.0, 0.0);
    CHECK(f.method == FitMethod::AllSamples);
    CHECK_THAT(f.sigma, WithinAbs(0.5, 1e-6));
    CHECK_THAT(f.amplitude, WithinRel(2.0, 1e-6));
    CHECK_THAT(f.r_squared, WithinAbs(1.0, 1e-9));
}

TEST_CASE("exponential recovery holds across the parameter range", "[disturbance_metrics][property]") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ls(std::log(0.01), std::log(5.0));
    std::uniform_real_distribution<double> la(std::log(1e-3), std::log(10.0));
    std::uniform_real_distribution<double> lc(-2.0, 2.0);
    const auto t = test::grid(0.0, 20.0, 1e-3);
    for (int k = 0; k < 40; ++k) {
        const double sigma = std::exp(ls(rng)), a = std::exp(la(rng)), c = lc(rng);
        const auto f = fit_damping(t, sampled(t, c, a, sigma, 0.0), c, 0.0);
        INFO("sigma=" << sigma << " A=" << a << " c=" << c);
        REQUIRE_THAT(f.sigma, WithinAbs(sigma, 1e-6));
        REQUIRE_THAT(f.amplitude, WithinRel(a, 1e-6));
    }
}

TEST_CASE("damped oscillation is recovered from its peak envelope", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 20.0, 1e-3);
    for (double sigma : {0.05, 0.2, 0.5, 1.0}) {
        const auto f = fit_damping(t, sampled(t, 1.0, 2.0, sigma, 10.0), 1.0, 0.0);
        INFO("sigma=" << sigma);
        CHECK(f.method == FitMethod::Envelope);
        CHECK_THAT(f.sigma, WithinRel(sigma, 0.05));
    }
}

TEST_CASE("a settled signal is fully damped", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 5.0, 1e-3);
    const std::vector<double> x(t.size(), 1.0);
    const auto f = fit_damping(t, x, 1.0, 0.0);
    CHECK(f.fully_damped());
    CHECK(std::isinf(f.sigma));
    CHECK(f.amplitude == 0.0);
}

TEST_CASE("node metrics on a constant node are all zero", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 20.0, 0.01);
    const auto s = test::make_series(t, {std::vector<double>(t.size(), 0.0)}, {std::vector<double>(t.size(), 377.0)});
    SyncConfig cfg;
    const auto v = node_verdict(s.view(0), cfg);
    const auto m = node_metrics(s.view(0), v, cfg);
    CHECK(m.overshoot_eps == 0.0);
    CHECK(m.overshoot_omega == 0.0);
    CHECK(*m.delta_tau == 0.0);
    CHECK(m.damping_eps->fully_damped());
    CHECK(*m.s_eps == 1.0 / *m.t_eps);
}

TEST_CASE("missing convergence time leaves that rate absent", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 20.0, 0.01);
    std::vector<double> w;
    for (std::size_t i = 0; i < t.size(); ++i) w.push_back(377.0 + 0.01 * ((i % 2) ? 1.0 : -1.0));
    const auto s = test::make_series(t, {std::vector<double>(t.size(), 0.0)}, {w});
    SyncConfig cfg;
    const auto v = node_verdict(s.view(0), cfg);
    const auto m = node_metrics(s.view(0), v, cfg);
    CHECK(m.s_eps);
    CHECK_FALSE(m.s_omega);
    CHECK_FALSE(m.delta_tau);
    CHECK(m.overshoot_omega > 0.0);
}

TEST_CASE("subnet lag reproduces the tabulated sign reading", "[disturbance_metrics]") {
    const std::vector<NodeMetrics> m{with_times(1, 10.2, 14.27), with_times(2, 10.4, 14.27),
                                     with_times(3, 10.27, 14.27)};
    const std::vector<NodeVerdict> v{with_limit(1, 0, 377), with_limit(2, 0, 377), with_limit(3, 0, 377)};
    const auto sm = subnet_metrics("S1", m, v, 1e-3);
    CHECK(*sm.t_eps_max == 10.4);
    CHECK(*sm.t_omega_max == 14.27);
    CHECK_THAT(*sm.lag, WithinAbs(-3.87, 1e-12));
    CHECK(sm.locally_synced);
    for (const auto& row : sm.limit_diff) {
        for (double d : row) CHECK(d == 0.0);
    }
}

TEST_CASE("limit difference above tol_s breaks local synchronization", "[disturbance_metrics]") {
    const std::vector<NodeMetrics> m{with_times(1, 1.0, 1.0), with_times(2, 1.0, 1.0)};
    const std::vector<NodeVerdict> v{with_limit(1, 0.0, 377.0), with_limit(2, 0.002, 377.0)};
    const auto sm = subnet_metrics("S", m, v, 1e-3);
    CHECK_THAT(sm.limit_diff[0][1], WithinAbs(0.002, 1e-15));
    CHECK_FALSE(sm.locally_synced);
}

TEST_CASE("limit differences satisfy the triangle inequality", "[disturbance_metrics][property]") {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        std::vector<NodeMetrics> m;
        std::vector<NodeVerdict> v;
        for (int i = 0; i < 5; ++i) {
            m.push_back(with_times(i, 1.0, 1.0));
            v.push_back(with_limit(i, u(rng), 377.0 + u(rng)));
        }
        const auto d = subnet_metrics("S", m, v, 1e-3).limit_diff;
        for (std::size_t a = 0; a < 5; ++a) {
            for (std::size_t b = 0; b < 5; ++b) {
                for (std::size_t c = 0; c < 5; ++c) REQUIRE(d[a][c] <= d[a][b] + d[b][c] + 1e-15);
            }
        }
    }
}

TEST_CASE("a flat system has no disturbed buses", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 10.0, 0.01);
    const auto cf = test::make_series(t, {std::vector<double>(t.size(), 0.0), std::vector<double>(t.size(), 0.0)},
                                      {std::vector<double>(t.size(), 377.0), std::vector<double>(t.size(), 377.0)});
    SyncConfig cfg;
    cfg.t_end = 10.0;
    const std::vector<ComplexFrequencySample> lim{{0.0, 377.0}, {0.0, 377.0}};
    for (auto conv : {NConvention::PaperLiteral, NConvention::TotalBuses}) {
        const auto r = disturbance_region(cf, lim, cfg, conv);
        CHECK(r.s_inf.empty());
        CHECK(r.r_inf == 0.0);
        CHECK(r.d_inf == 0.0);
    }
}

TEST_CASE("nine buses disturbed in both components under the literal convention", "[disturbance_metrics]") {
    const auto t = test::grid(0.0, 10.0, 0.01);
    std::vector<std::vector<double>> e, w;
    for (int b = 0; b < 9; ++b) {
        std::vector<double> eb(t.size(), 0.0), wb(t.size(), 377.0);
        eb[500] = 1.0;
        wb[500] = 378.0;
        e.push_back(eb);
        w.push_back(wb);
    }
    const auto cf = test::make_series(t, e, w);
    SyncConfig cfg;
    cfg.t_end = 10.0;
    const std::vector<ComplexFrequencySample> lim(9, {0.0, 377.0});
    const auto lit = disturbance_region(cf, lim, cfg, NConvention::PaperLiteral);
    CHECK(lit.n == 9);
    CHECK(lit.r_inf == 1.0);
    CHECK_THAT(lit.d_inf, WithinAbs(1.0 / 9.0, 1e-15));
    const auto tot = disturbance_region(cf, lim, cfg, NConvention::TotalBuses);
    CHECK(tot.r_inf == 1.0);
    CHECK_THAT(tot.d_inf, WithinAbs(1.0 / 9.0, 1e-15));
}

TEST_CASE("disturbed sets grow as tolerances tighten", "[disturbance_metrics][property]") {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto t = test::grid(0.0, 5.0, 0.05);
    for (int k = 0; k < 30; ++k) {
        std::vector<std::vector<double>> e, w;
        for (int b = 0; b < 6; ++b) {
            std::vector<double> eb, wb;
            const double a = 1e-3 * u(rng), aw = 1e-2 * u(rng);
            for (double s : t) {
                eb.push_back(a * std::sin(3.0 * s));
                wb.push_back(377.0 + aw * std::cos(2.0 * s));
            }
            e.push_back(eb);
            w.push_back(wb);
        }
        const auto cf = test::make_series(t, e, w);
        const std::vector<ComplexFrequencySample> lim(6, {0.0, 377.0});
        SyncConfig loose;
        loose.t_end = 5.0;
        loose.tol_eps = 5e-4;
        loose.tol_omega = 5e-3;
        auto tight = loose;
        tight.tol_eps = 1e-4;
        tight.tol_omega = 1e-3;
        const auto a = disturbance_region(cf, lim, loose, NConvention::TotalBuses);
        const auto b = disturbance_region(cf, lim, tight, NConvention::TotalBuses);
        for (int id : a.s_inf) REQUIRE(std::find(b.s_inf.begin(), b.s_inf.end(), id) != b.s_inf.end());
        REQUIRE(b.r_inf >= a.r_inf);
        REQUIRE((b.r_inf >= 0.0 && b.r_inf <= 1.0));
    }
}
