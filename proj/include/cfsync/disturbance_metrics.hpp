#pragma once

// =============================================================================
// cfsync - disturbance-response indices
// =============================================================================
// Per node: convergence times and rates, peak-to-valley overshoot, exponential
// damping rate of the deviation from the limit. Per subnet: slowest
// convergence instants, their lag, and the limit difference matrix. Network
// wide: the set of disturbed buses and the impact ratios derived from it.
// =============================================================================

#include "cfsync/cf_estimator.hpp"
#include "cfsync/common.hpp"
#include "cfsync/sync_detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace cfsync {

enum class OvershootEnd { NodeConvergence, TEnd };
enum class NConvention { PaperLiteral, TotalBuses };

[[nodiscard]] inline const char* to_string(NConvention c) {
    return c == NConvention::PaperLiteral ? "paper_literal" : "total_buses";
}

struct MetricsConfig {
    OvershootEnd overshoot_end = OvershootEnd::NodeConvergence;
    double min_r_squared = 0.8;
    double tol_subnet = 1e-3;
    NConvention n_convention = NConvention::TotalBuses;
};

enum class FitMethod { Envelope, AllSamples, FullyDamped };

[[nodiscard]] inline const char* to_string(FitMethod m) {
    switch (m) {
        case FitMethod::Envelope: return "envelope";
        case FitMethod::AllSamples: return "all_samples";
        case FitMethod::FullyDamped: return "fully_damped";
    }
    return "fully_damped";
}

struct DampingFit {
    double sigma = 0.0;  // 1/s; +inf when fully damped
    double amplitude = 0.0;
    double r_squared = 1.0;
    FitMethod method = FitMethod::FullyDamped;
    std::size_t points = 0;

    [[nodiscard]] bool fully_damped() const { return method == FitMethod::FullyDamped; }
};

struct NodeMetrics {
    int bus = 0;
    std::optional<double> t_eps;
    std::optional<double> t_omega;
    std::optional<double> delta_tau;
    std::optional<double> s_eps;
    std::optional<double> s_omega;
    double overshoot_eps = 0.0;
    double overshoot_omega = 0.0;
    std::optional<DampingFit> damping_eps;
    std::optional<DampingFit> damping_omega;
    bool poorly_damped_eps = false;
    bool poorly_damped_omega = false;
};

struct SubnetMetrics {
    std::string subnet;
    std::vector<int> members;
    std::optional<double> t_eps_max;
    std::optional<double> t_omega_max;
    std::optional<double> lag;  // positive: voltage loop slower
    std::vector<std::vector<double>> limit_diff;
    bool locally_synced = false;
};

struct DisturbanceRegion {
    std::vector<int> disturbed_eps;
    std::vector<int> disturbed_omega;
    std::vector<int> s_inf;
    double r_inf = 0.0;
    double d_inf = 0.0;
    std::size_t n = 0;
    NConvention n_convention = NConvention::TotalBuses;
};

/// Convergence rate, the reciprocal of a convergence time.
[[nodiscard]] inline double convergence_rate(double t) { return 1.0 / t; }

/// max - min of x over samples with t in [t_lo, t_hi].
[[nodiscard]] inline double overshoot(std::span<const double> t, std::span<const double> x, double t_lo, double t_hi) {
    const double slack = detail::time_slack(t);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t_lo - slack && t[i] <= t_hi + slack) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
    }
    if (!(hi >= lo)) fail_input("empty overshoot window");
    return hi - lo;
}

namespace detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 1.0;
};

[[nodiscard]] inline LineFit least_squares_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += e * e;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

}  // namespace detail

/// Fits |x(t) - limit| ~ A exp(-sigma t) for t >= t_event, t absolute. Uses
/// the local maxima of the deviation when there are at least three of them,
/// otherwise every sample above the floor. The floor is raised to 1e6 ulps of
/// the signal magnitude.
[[nodiscard]] inline DampingFit fit_damping(std::span<const double> t, std::span<const double> x, double limit,
                                            double t_event, double floor = 1e-12) {
    if (t.size() != x.size()) fail_input("series and time base differ in length");
    const double slack = detail::time_slack(t);
    std::size_t start = 0;
    while (start < t.size() && t[start] < t_event - slack) ++start;

    std::vector<double> r;
    std::vector<double> tt;
    for (std::size_t i = start; i < t.size(); ++i) {
        r.push_back(std::abs(x[i] - limit));
        tt.push_back(t[i]);
    }
    const double peak = r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
    if (peak <= 1e-12) return DampingFit{std::numeric_limits<double>::infinity(), 0.0, 1.0, FitMethod::FullyDamped, 0};
    // Deviations within rounding distance of the signal level carry no slope information.
    double level = std::abs(limit);
    for (std::size_t i = start; i < t.size(); ++i) level = std::max(level, std::abs(x[i]));
    floor = std::max(floor, 1e6 * std::numeric_limits<double>::epsilon() * level);

    std::vector<double> px, py;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        if (r[i] > r[i - 1] && r[i] >= r[i + 1] && r[i] > floor) {
            px.push_back(tt[i]);
            py.push_back(std::log(r[i]));
        }
    }
    FitMethod method = FitMethod::Envelope;
    if (px.size() < 3) {
        method = FitMethod::AllSamples;
        px.clear();
        py.clear();
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] > floor) {
                px.push_back(tt[i]);
                py.push_back(std::log(r[i]));
            }
        }
        if (px.size() < 10) fail_input("too few samples above the noise floor for a damping fit");
    }
    const auto line = detail::least_squares_line(px, py);
    return DampingFit{-line.slope, std::exp(line.intercept), line.r_squared, method, px.size()};
}

[[nodiscard]] inline NodeMetrics node_metrics(const CfSeriesView& s, const NodeVerdict& v, const SyncConfig& cfg,
                                              const MetricsConfig& mc = {}) {
    NodeMetrics m;
    m.bus = v.bus;
    m.t_eps = v.t_eps;
    m.t_omega = v.t_omega;
    if (v.t_eps) m.s_eps = convergence_rate(*v.t_eps);
    if (v.t_omega) m.s_omega = convergence_rate(*v.t_omega);
    if (v.t_eps && v.t_omega) m.delta_tau = std::abs(*v.t_eps - *v.t_omega);

    const double upper = mc.overshoot_end == OvershootEnd::NodeConvergence && v.t_end_k ? *v.t_end_k : cfg.t_end;
    m.overshoot_eps = overshoot(s.t, s.eps, cfg.t_event, upper);
    m.overshoot_omega = overshoot(s.t, s.omega, cfg.t_event, upper);

    // Deviations below the convergence tolerance are treated as settled.
    auto fit = [&](std::span<const double> x, double target, double tol) -> std::optional<DampingFit> {
        try {
            return fit_damping(s.t, x, target, cfg.t_event, tol);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    m.damping_eps = fit(s.eps, v.coarse.eps, cfg.tol_eps);
    m.damping_omega = fit(s.omega, v.coarse.omega, cfg.tol_omega);
    m.poorly_damped_eps = m.damping_eps && !m.damping_eps->fully_damped() && m.damping_eps->r_squared < mc.min_r_squared;
    m.poorly_damped_omega =
        m.damping_omega && !m.damping_omega->fully_damped() && m.damping_omega->r_squared < mc.min_r_squared;
    return m;
}

[[nodiscard]] inline SubnetMetrics subnet_metrics(const std::string& name, const std::vector<NodeMetrics>& metrics,
                                                  const std::vector<NodeVerdict>& verdicts, double tol_s) {
    if (metrics.empty() || metrics.size() != verdicts.size()) fail_input("subnet " + name + " is empty");
    SubnetMetrics sm;
    sm.subnet = name;
    bool have_eps = true, have_omega = true;
    double te = -std::numeric_limits<double>::infinity();
    double tw = -std::numeric_limits<double>::infinity();
    for (const auto& m : metrics) {
        sm.members.push_back(m.bus);
        if (m.t_eps) te = std::max(te, *m.t_eps);
        else have_eps = false;
        if (m.t_omega) tw = std::max(tw, *m.t_omega);
        else have_omega = false;
    }
    if (have_eps) sm.t_eps_max = te;
    if (have_omega) sm.t_omega_max = tw;
    if (have_eps && have_omega) sm.lag = te - tw;

    const std::size_t k = verdicts.size();
    sm.limit_diff.assign(k, std::vector<double>(k, 0.0));
    sm.locally_synced = true;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double d = distance(verdicts[i].limit, verdicts[j].limit);
            sm.limit_diff[i][j] = sm.limit_diff[j][i] = d;
            if (!(d < tol_s)) sm.locally_synced = false;
        }
    }
    return sm;
}

/// `targets[b]` holds the limiting values the deviations are measured from.
[[nodiscard]] inline DisturbanceRegion disturbance_region(const ComplexFrequencySeries& cf,
                                                          const std::vector<ComplexFrequencySample>& targets,
                                                          const SyncConfig& cfg, NConvention conv) {
    if (targets.size() != cf.bus_count()) fail_input("one limit per bus is required");
    const double slack = detail::time_slack(cf.times);
    DisturbanceRegion reg;
    reg.n_convention = conv;
    std::set<int> both;
    for (std::size_t b = 0; b < cf.bus_count(); ++b) {
        bool de = false, dw = false;
        for (std::size_t i = 0; i < cf.times.size(); ++i) {
            const double t = cf.times[i];
            if (t < cfg.t_event - slack || t > cfg.t_end + slack) continue;
            de = de || std::abs(cf.eps[b][i] - targets[b].eps) > cfg.tol_eps;
            dw = dw || std::abs(cf.omega[b][i] - targets[b].omega) > cfg.tol_omega;
        }
        const int id = cf.bus_ids[b];
        if (de) reg.disturbed_eps.push_back(id);
        if (dw) reg.disturbed_omega.push_back(id);
        if (de || dw) reg.s_inf.push_back(id);
        if (de && dw) both.insert(id);
    }
    const double n_union = static_cast<double>(reg.s_inf.size());
    if (conv == NConvention::PaperLiteral) {
        reg.n = reg.s_inf.size();
        if (reg.n > 0) {
            reg.r_inf = static_cast<double>(both.size()) / n_union;
            reg.d_inf = reg.r_inf / n_union;
        }
    } else {
        reg.n = cf.bus_count();
        if (reg.n > 0) reg.r_inf = n_union / static_cast<double>(reg.n);
        reg.d_inf = reg.s_inf.empty() ? 0.0 : reg.r_inf / n_union;
    }
    return reg;
}

}  // namespace cfsync
