#pragma once

// =============================================================================
// cfsync - frequency inertia, voltage inertia and generalized inertia
// =============================================================================
//   M   * d(omega)/dt = dP      (swing equation, M = 2H / omega_s)
//   H_v * eps         = dQ      (equivalent-capacitance energy balance,
//                                H_v = v^2 C_eq / (2 S_base),
//                                dQ = (Q_m - Q_e) / (2 S_base))
// zeta(t) = H_v eps + j M d(omega)/dt equals dQ + j dP.
// =============================================================================

#include "cfsync/cf_estimator.hpp"
#include "cfsync/common.hpp"
#include "cfsync/dynamics.hpp"
#include "cfsync/grid_model.hpp"
#include "cfsync/sync_detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfsync {

/// Scalar least-squares gain y ~ k x over a time window.
struct InertiaFit {
    double value = 0.0;
    double residual = 0.0;  // ||y - k x|| / ||y||
    std::size_t samples = 0;
    double window_start = 0.0;
    double window_end = 0.0;
};

namespace detail {

[[nodiscard]] inline InertiaFit fit_gain(std::span<const double> t, std::span<const double> x,
                                         std::span<const double> y, double t0, double t1, double threshold,
                                         const char* what) {
    if (t.size() != x.size() || t.size() != y.size()) fail_input("inertia series are not aligned");
    if (!(t1 > t0)) fail_config("inertia window must have positive length");
    const double slack = time_slack(t);
    double sxx = 0.0, sxy = 0.0, syy = 0.0, peak = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - slack || t[i] > t1 + slack) continue;
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
        peak = std::max(peak, std::abs(x[i]));
        ++n;
    }
    if (n == 0 || !(peak > threshold)) fail_numerical(std::string("no ") + what + " excursion in window");
    InertiaFit f;
    f.value = sxy / sxx;
    f.samples = n;
    f.window_start = t0;
    f.window_end = t1;
    const double ss_res = std::max(0.0, syy - sxy * sxy / sxx);
    f.residual = syy > 0.0 ? std::sqrt(ss_res / syy) : 0.0;
    return f;
}

}  // namespace detail

/// Fits dP = M * d(omega)/dt; the derivative uses the estimator's
/// differentiation and smoothing over the whole series before windowing.
[[nodiscard]] inline InertiaFit estimate_frequency_inertia(std::span<const double> t, std::span<const double> omega,
                                                           std::span<const double> dp, double t0, double t1,
                                                           int smoothing_window = 1, double threshold = 1e-6) {
    const auto wdot = smoothed_derivative(t, omega, smoothing_window);
    return detail::fit_gain(t, wdot, dp, t0, t1, threshold, "frequency");
}

/// Fits dQ = H_v * eps.
[[nodiscard]] inline InertiaFit estimate_voltage_inertia(std::span<const double> t, std::span<const double> eps,
                                                         std::span<const double> dq, double t0, double t1,
                                                         double threshold = 1e-9) {
    return detail::fit_gain(t, eps, dq, t0, t1, threshold, "voltage");
}

[[nodiscard]] inline double capacitor_voltage_inertia(double v, double c_eq, double s_base) {
    if (!(v > 0.0 && c_eq > 0.0 && s_base > 0.0)) fail_input("voltage, C_eq and S_base must be positive");
    return v * v * c_eq / (2.0 * s_base);
}

/// zeta(t) = h_v eps(t) + j m omega_dot(t).
[[nodiscard]] inline std::vector<Complex> generalized_inertia_series(double h_v, double m,
                                                                     std::span<const double> eps,
                                                                     std::span<const double> omega_dot) {
    if (eps.size() != omega_dot.size()) fail_input("eps and omega-dot series are not aligned");
    if (!std::isfinite(h_v) || !std::isfinite(m)) fail_input("inertia values must be finite");
    std::vector<Complex> z(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) z[i] = Complex(h_v * eps[i], m * omega_dot[i]);
    return z;
}

[[nodiscard]] inline std::vector<Complex> generalized_inertia_series(double h_v, double m,
                                                                     std::span<const double> t,
                                                                     std::span<const double> eps,
                                                                     std::span<const double> omega,
                                                                     int smoothing_window) {
    const auto wdot = smoothed_derivative(t, omega, smoothing_window);
    return generalized_inertia_series(h_v, m, eps, wdot);
}

// =============================================================================
// Single-bus equivalent-capacitance model
// =============================================================================

struct CapacitorBusModel {
    double c_eq = 2.0;
    double s_base = 1.0;
    double v0 = 1.0;
    double q_step = 0.1;      // step in reactive supply Q_m, pu
    double t_step = 0.0;      // s
    double q_load_coeff = 1.0;  // Q_e = B v^2

    /// Reactive supply before the step balances the load at v0.
    [[nodiscard]] double q_m0() const { return q_load_coeff * v0 * v0; }

    /// Imbalance (Q_m - Q_e) / 2 in per unit of S_base.
    [[nodiscard]] double delta_q(double v, bool stepped) const {
        const double qm = q_m0() + (stepped ? q_step : 0.0);
        return 0.5 * (qm - q_load_coeff * v * v);
    }

    [[nodiscard]] double nominal_h_v() const { return capacitor_voltage_inertia(v0, c_eq, s_base); }
};

struct CapacitorRun {
    double h_v = 1.0;
    std::vector<double> v;
    std::vector<double> eps;
    std::vector<double> dq;
};

struct CapacitorSweep {
    std::vector<double> times;
    std::vector<CapacitorRun> runs;
};

/// Integrates v' = v * dQ(v, t) / H_v for each H_v with classical RK4. The
/// recorded eps at a sample is dQ / H_v evaluated after any step at that instant.
[[nodiscard]] inline CapacitorSweep simulate_capacitor_bus(const CapacitorBusModel& model,
                                                           const std::vector<double>& h_v_values, double t_end,
                                                           double dt) {
    if (!(model.c_eq > 0.0) || !(model.v0 > 0.0)) fail_input("C_eq and v0 must be positive");
    if (!(model.q_load_coeff > 0.0)) fail_input("q_load_coeff must be positive");
    if (!(dt > 0.0) || !(t_end > dt)) fail_config("invalid sweep time grid");
    for (double h : h_v_values) {
        if (!(h > 0.0)) fail_input("H_v values must be positive");
    }
    const long long n = std::llround(t_end / dt);
    const long long k_step = snap_to_grid(model.t_step, dt);

    CapacitorSweep out;
    out.times.reserve(static_cast<std::size_t>(n + 1));
    for (long long k = 0; k <= n; ++k) out.times.push_back(static_cast<double>(k) * dt);

    for (double h : h_v_values) {
        CapacitorRun run;
        run.h_v = h;
        double v = model.v0;
        for (long long k = 0; k <= n; ++k) {
            const bool stepped = k >= k_step;
            const double dq = model.delta_q(v, stepped);
            run.v.push_back(v);
            run.dq.push_back(dq);
            run.eps.push_back(dq / h);
            if (k == n) break;
            auto f = [&](double vv) { return vv * model.delta_q(vv, stepped) / h; };
            const double k1 = f(v);
            const double k2 = f(v + 0.5 * dt * k1);
            const double k3 = f(v + 0.5 * dt * k2);
            const double k4 = f(v + dt * k3);
            v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!std::isfinite(v) || v <= 1e-6) {
                fail_numerical("voltage collapse at t=" + std::to_string(static_cast<double>(k + 1) * dt) +
                               " s for H_v=" + std::to_string(h));
            }
        }
        out.runs.push_back(std::move(run));
    }
    return out;
}

// =============================================================================
// Estimates from a simulated trajectory
// =============================================================================

struct GeneralizedInertiaEstimate {
    std::string bus_or_region;
    double m = 0.0;
    std::optional<double> h_v;
    double m_case = 0.0;  // 2H/omega_s from the case data, system base
    std::vector<double> times;
    std::vector<Complex> zeta_series;
    std::vector<Complex> imbalance;  // dQ + j dP
    double residual_p = 0.0;
    std::optional<double> residual_q;
    double window_start = 0.0;
    double window_end = 0.0;
};

struct InertiaConfig {
    double window_start = 0.0;
    double window_end = 0.0;
    int smoothing_window = 1;
};

/// Per generator: M from rotor speed against p_m - p_e, H_v from the terminal
/// bus eps against dQ = (q_e(before window) - q_e(t)) / 2.
[[nodiscard]] inline std::vector<GeneralizedInertiaEstimate> estimate_generator_inertia(
    const Trajectory& traj, const NetworkCase& c, const ComplexFrequencySeries& cf, const InertiaConfig& ic) {
    if (traj.gen_states.size() != c.generators.size()) fail_input("trajectory has no generator series for this case");
    const std::size_t n = traj.sample_count();
    const double slack = detail::time_slack(traj.times);
    std::size_t ref = 0;
    for (std::size_t i = 0; i < n && traj.times[i] < ic.window_start - slack; ++i) ref = i;

    std::vector<GeneralizedInertiaEstimate> out;
    for (std::size_t g = 0; g < c.generators.size(); ++g) {
        const auto& gen = c.generators[g];
        if (traj.gen_states[g].size() != n) fail_input("generator series length mismatch");
        std::vector<double> omega(n), dp(n), dq(n);
        for (std::size_t i = 0; i < n; ++i) {
            omega[i] = traj.gen_states[g][i].omega;
            dp[i] = traj.gen_states[g][i].p_m - traj.p_e[g][i];
            dq[i] = 0.5 * (traj.q_e[g][ref] - traj.q_e[g][i]);
        }
        GeneralizedInertiaEstimate est;
        est.bus_or_region = "bus " + std::to_string(gen.bus);
        est.m_case = 2.0 * gen.h * (gen.s_machine / c.s_base) / c.omega_s();
        est.window_start = ic.window_start;
        est.window_end = ic.window_end;

        const auto fm = estimate_frequency_inertia(traj.times, omega, dp, ic.window_start, ic.window_end,
                                                   ic.smoothing_window);
        est.m = fm.value;
        est.residual_p = fm.residual;

        const auto b = c.bus_index(gen.bus);
        const auto& eps = cf.eps[b];
        try {
            const auto fq = estimate_voltage_inertia(traj.times, eps, dq, ic.window_start, ic.window_end);
            est.h_v = fq.value;
            est.residual_q = fq.residual;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numerical) throw;
        }

        const auto wdot = smoothed_derivative(traj.times, omega, ic.smoothing_window);
        for (std::size_t i = 0; i < n; ++i) {
            if (traj.times[i] < ic.window_start - slack || traj.times[i] > ic.window_end + slack) continue;
            est.times.push_back(traj.times[i]);
            est.zeta_series.emplace_back(est.h_v.value_or(0.0) * eps[i], est.m * wdot[i]);
            est.imbalance.emplace_back(dq[i], dp[i]);
        }
        out.push_back(std::move(est));
    }
    return out;
}

}  // namespace cfsync
