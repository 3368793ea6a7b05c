#pragma once

// =============================================================================
// cfsync - complex frequency estimation
// =============================================================================
// For a bus phasor u = v e^{j theta} = e^{ln v + j theta} the complex frequency
// is the log-derivative  u'/u = (ln v)' + j theta' = eps + j omega.
// Both parts are computed by three-point finite differences on the sampled
// series, followed by an optional centred moving average.
// =============================================================================

#include "cfsync/common.hpp"
#include "cfsync/dynamics.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cfsync {

struct ComplexFrequencySample {
    double eps = 0.0;    // 1/s
    double omega = 0.0;  // rad/s

    [[nodiscard]] Complex value() const { return {eps, omega}; }
    friend bool operator==(const ComplexFrequencySample&, const ComplexFrequencySample&) = default;
};

/// |a - b| in the complex plane.
[[nodiscard]] inline double distance(const ComplexFrequencySample& a, const ComplexFrequencySample& b) {
    return std::hypot(a.eps - b.eps, a.omega - b.omega);
}

enum class OmegaConvention { Absolute, PerUnitDeviation };

struct EstimatorConfig {
    int smoothing_window = 5;  // samples, odd
    OmegaConvention omega_convention = OmegaConvention::Absolute;
};

/// Read-only view of one bus' complex-frequency samples.
struct CfSeriesView {
    std::span<const double> t;
    std::span<const double> eps;
    std::span<const double> omega;

    [[nodiscard]] std::size_t size() const { return t.size(); }
    [[nodiscard]] ComplexFrequencySample at(std::size_t i) const { return {eps[i], omega[i]}; }
};

struct ComplexFrequencySeries {
    std::vector<double> times;
    std::vector<int> bus_ids;
    std::vector<std::vector<double>> eps;    // [bus][sample]
    std::vector<std::vector<double>> omega;  // [bus][sample]
    EstimatorConfig config;
    double omega_s = 0.0;
    std::string scheme = "central-3pt";

    [[nodiscard]] std::size_t bus_count() const { return bus_ids.size(); }
    [[nodiscard]] CfSeriesView view(std::size_t bus) const { return {times, eps[bus], omega[bus]}; }
};

/// Removes 2*pi jumps so that consecutive differences lie in (-pi, pi].
[[nodiscard]] inline std::vector<double> unwrap_angles(std::span<const double> theta) {
    std::vector<double> out(theta.begin(), theta.end());
    double offset = 0.0;
    for (std::size_t i = 1; i < theta.size(); ++i) {
        const double d = theta[i] - theta[i - 1];
        offset += wrap_angle(d) - d;
        out[i] = theta[i] + offset;
    }
    return out;
}

/// Second-order derivative on a possibly non-uniform grid; one-sided
/// three-point formulas at both ends.
[[nodiscard]] inline std::vector<double> differentiate(std::span<const double> t, std::span<const double> x) {
    const std::size_t n = t.size();
    if (n < 3) fail_input("at least 3 samples are needed to differentiate");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = t[i] - t[i - 1];
        const double h2 = t[i + 1] - t[i];
        d[i] = (h2 * h2 * (x[i] - x[i - 1]) + h1 * h1 * (x[i + 1] - x[i])) / (h1 * h2 * (h1 + h2));
    }
    {
        const double h1 = t[1] - t[0];
        const double h2 = t[2] - t[1];
        const double a = x[1] - x[0];
        const double b = x[2] - x[1];
        d[0] = ((h1 + h2) * (h1 + h2) * a - h1 * h1 * (a + b)) / (h1 * h2 * (h1 + h2));
    }
    {
        const double h1 = t[n - 2] - t[n - 3];
        const double h2 = t[n - 1] - t[n - 2];
        const double a = x[n - 2] - x[n - 3];
        const double b = x[n - 1] - x[n - 2];
        d[n - 1] = ((h1 + h2) * (h1 + h2) * b - h2 * h2 * (a + b)) / (h1 * h2 * (h1 + h2));
    }
    return d;
}

/// Centred moving average; the window shrinks symmetrically near the ends so
/// linear trends pass through unchanged. Width 1 is the identity.
[[nodiscard]] inline std::vector<double> moving_average(std::span<const double> x, int width) {
    if (width < 1 || width % 2 == 0) fail_config("smoothing window must be a positive odd number of samples");
    if (width == 1) return {x.begin(), x.end()};
    const std::size_t n = x.size();
    const std::size_t half = static_cast<std::size_t>(width / 2);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        double s = 0.0;
        for (std::size_t j = i - h; j <= i + h; ++j) s += x[j];
        out[i] = s / static_cast<double>(2 * h + 1);
    }
    return out;
}

/// Derivative followed by smoothing, shared with the inertia estimators.
[[nodiscard]] inline std::vector<double> smoothed_derivative(std::span<const double> t, std::span<const double> x,
                                                             int smoothing_window) {
    const auto d = differentiate(t, x);
    return moving_average(d, smoothing_window);
}

[[nodiscard]] inline ComplexFrequencySeries estimate_complex_frequency(const Trajectory& traj,
                                                                       const EstimatorConfig& cfg = {}) {
    const std::size_t n = traj.sample_count();
    if (n < 3) fail_input("trajectory has fewer than 3 samples");
    if (cfg.smoothing_window < 1 || cfg.smoothing_window % 2 == 0) {
        fail_config("smoothing window must be a positive odd number of samples");
    }
    ComplexFrequencySeries out;
    out.times = traj.times;
    out.bus_ids = traj.bus_ids;
    out.config = cfg;
    out.omega_s = traj.omega_s();
    out.eps.resize(traj.bus_count());
    out.omega.resize(traj.bus_count());

    std::vector<double> lnv(n);
    for (std::size_t b = 0; b < traj.bus_count(); ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = traj.v[b][i];
            if (!(v > 0.0)) {
                fail_input("non-positive voltage at bus " + std::to_string(traj.bus_ids[b]) +
                           ", t=" + std::to_string(traj.times[i]) + " s");
            }
            lnv[i] = std::log(v);
        }
        out.eps[b] = smoothed_derivative(traj.times, lnv, cfg.smoothing_window);

        const auto th = unwrap_angles(traj.theta[b]);
        auto w = smoothed_derivative(traj.times, th, cfg.smoothing_window);
        for (double& x : w) {
            x = cfg.omega_convention == OmegaConvention::Absolute ? x + out.omega_s : x / out.omega_s;
        }
        out.omega[b] = std::move(w);
    }
    return out;
}

}  // namespace cfsync
