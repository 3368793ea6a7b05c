#pragma once

// =============================================================================
// cfsync - complex-frequency synchronization detection
// =============================================================================
// Node level: coarse mean over [t_coarse - window, t_end], per-component
// convergence instants from a trailing window, fluctuation amplitude over the
// final window, quasi-limit at t_end.
// Subnet level: spread of member limits. Global level: every node converged
// and all limits within tol_eq of each other.
// =============================================================================

#include "cfsync/cf_estimator.hpp"
#include "cfsync/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfsync {

enum class LimitMode { AtEnd, WindowMean };

struct SyncConfig {
    double t_end = 20.0;
    double window = 1.0;
    std::optional<double> t_coarse;  // defaults to t_end - 2 s
    double tol_eps = 1e-4;
    double tol_omega = 1e-3;
    double tol_node = 1e-3;
    double tol_eq = 1e-3;
    double t_event = 0.0;
    LimitMode limit_mode = LimitMode::AtEnd;

    [[nodiscard]] double coarse_start() const { return t_coarse.value_or(t_end - 2.0); }
};

inline void validate_sync_config(const SyncConfig& c) {
    if (!(c.window > 0.0 && c.window < c.t_end)) fail_config("window must satisfy 0 < window < t_end");
    if (c.coarse_start() > c.t_end - c.window + 1e-12) fail_config("t_coarse must not exceed t_end - window");
    if (!(c.tol_eps > 0.0 && c.tol_omega > 0.0 && c.tol_node > 0.0 && c.tol_eq > 0.0)) {
        fail_config("all tolerances must be positive");
    }
    if (c.t_event < 0.0) fail_config("t_event must be non-negative");
}

struct NodeVerdict {
    int bus = 0;
    bool converged = false;
    std::optional<double> t_eps;
    std::optional<double> t_omega;
    std::optional<double> t_end_k;
    ComplexFrequencySample limit;   // quasi-limit
    ComplexFrequencySample coarse;  // coarse mean used as convergence target
    double fluctuation = 0.0;
};

struct SubnetVerdict {
    std::string subnet;
    std::vector<int> members;
    bool internally_synced = false;
    std::optional<double> spread;                  // over converged members
    std::optional<ComplexFrequencySample> limit;   // mean of converged member limits
    std::optional<bool> synced_with_global;
};

enum class GlobalStatus { Synchronized, NotSynchronized, Undetermined };

[[nodiscard]] inline const char* to_string(GlobalStatus s) {
    switch (s) {
        case GlobalStatus::Synchronized: return "synchronized";
        case GlobalStatus::NotSynchronized: return "not_synchronized";
        case GlobalStatus::Undetermined: return "undetermined";
    }
    return "undetermined";
}

struct GlobalVerdict {
    GlobalStatus status = GlobalStatus::Undetermined;
    std::optional<ComplexFrequencySample> limit;
    std::optional<double> max_pairwise;  // over converged nodes
    bool all_converged = false;
};

namespace detail {

/// Slack for comparing sample instants against window edges.
[[nodiscard]] inline double time_slack(std::span<const double> t) {
    if (t.size() < 2) return 1e-12;
    return 1e-9 * (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

}  // namespace detail

/// Component-wise mean over [t_coarse - window, t_end].
[[nodiscard]] inline ComplexFrequencySample coarse_limit(const CfSeriesView& s, const SyncConfig& cfg) {
    const double lo = cfg.coarse_start() - cfg.window;
    const double hi = cfg.t_end;
    if (cfg.coarse_start() > hi) fail_config("empty coarse segment");
    const double slack = detail::time_slack(s.t);
    double se = 0.0, sw = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.t[i] >= lo - slack && s.t[i] <= hi + slack) {
            se += s.eps[i];
            sw += s.omega[i];
            ++count;
        }
    }
    if (count == 0) fail_config("empty coarse segment");
    return {se / static_cast<double>(count), sw / static_cast<double>(count)};
}

/// Index of the first sample t_i >= t_event + window whose trailing window
/// [t_i - window, t_i] stays strictly within `tol` of `target`.
[[nodiscard]] inline std::optional<std::size_t> find_convergence_index(std::span<const double> t,
                                                                      std::span<const double> x, double target,
                                                                      double tol, double window, double t_event) {
    if (t.size() != x.size()) fail_input("series and time base differ in length");
    if (t.empty() || !(window < t.back() - t.front())) fail_config("window is not shorter than the series span");
    const double slack = detail::time_slack(t);
    std::ptrdiff_t last_bad = -1;
    std::size_t left = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(std::abs(x[i] - target) < tol)) last_bad = static_cast<std::ptrdiff_t>(i);
        while (t[left] < t[i] - window - slack) ++left;
        if (t[i] >= t_event + window - slack && last_bad < static_cast<std::ptrdiff_t>(left)) return i;
    }
    return std::nullopt;
}

[[nodiscard]] inline std::optional<double> find_convergence_time(std::span<const double> t, std::span<const double> x,
                                                                double target, double tol, double window,
                                                                double t_event) {
    auto i = find_convergence_index(t, x, target, tol, window, t_event);
    if (!i) return std::nullopt;
    return t[*i];
}

/// Largest |w(t1) - w(t2)| over samples in [lo, hi].
[[nodiscard]] inline double max_pairwise_spread(const CfSeriesView& s, double lo, double hi) {
    const double slack = detail::time_slack(s.t);
    std::vector<ComplexFrequencySample> pts;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.t[i] >= lo - slack && s.t[i] <= hi + slack) pts.push_back(s.at(i));
    }
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, distance(pts[i], pts[j]));
    }
    return best;
}

[[nodiscard]] inline NodeVerdict node_verdict(const CfSeriesView& s, const SyncConfig& cfg, int bus = 0) {
    if (s.size() < 3) fail_input("series too short");
    const double slack = detail::time_slack(s.t);
    if (s.t.back() < cfg.t_end - slack) fail_config("series ends before t_end");

    NodeVerdict v;
    v.bus = bus;
    v.coarse = coarse_limit(s, cfg);
    v.t_eps = find_convergence_time(s.t, s.eps, v.coarse.eps, cfg.tol_eps, cfg.window, cfg.t_event);
    v.t_omega = find_convergence_time(s.t, s.omega, v.coarse.omega, cfg.tol_omega, cfg.window, cfg.t_event);
    if (v.t_eps && v.t_omega) v.t_end_k = std::max(*v.t_eps, *v.t_omega);

    v.fluctuation = max_pairwise_spread(s, cfg.t_end - cfg.window, cfg.t_end);
    v.converged = v.fluctuation < cfg.tol_node;

    std::size_t end = 0;
    for (std::size_t i = 0; i < s.size() && s.t[i] <= cfg.t_end + slack; ++i) end = i;
    if (cfg.limit_mode == LimitMode::AtEnd) {
        v.limit = s.at(end);
    } else {
        double se = 0.0, sw = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i <= end; ++i) {
            if (s.t[i] >= cfg.t_end - cfg.window - slack) {
                se += s.eps[i];
                sw += s.omega[i];
                ++count;
            }
        }
        v.limit = {se / static_cast<double>(count), sw / static_cast<double>(count)};
    }
    return v;
}

namespace detail {

[[nodiscard]] inline ComplexFrequencySample mean_limit(const std::vector<const NodeVerdict*>& nodes) {
    double se = 0.0, sw = 0.0;
    for (const auto* n : nodes) {
        se += n->limit.eps;
        sw += n->limit.omega;
    }
    const auto k = static_cast<double>(nodes.size());
    return {se / k, sw / k};
}

[[nodiscard]] inline double max_limit_distance(const std::vector<const NodeVerdict*>& nodes) {
    double best = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) best = std::max(best, distance(nodes[i]->limit, nodes[j]->limit));
    }
    return best;
}

}  // namespace detail

/// Non-converged members are left out of the spread but make the subnet
/// unsynchronized.
[[nodiscard]] inline SubnetVerdict subnet_verdict(const std::string& name, const std::vector<NodeVerdict>& members,
                                                  const SyncConfig& cfg) {
    if (members.empty()) fail_input("subnet " + name + " is empty");
    SubnetVerdict sv;
    sv.subnet = name;
    std::vector<const NodeVerdict*> ok;
    bool all = true;
    for (const auto& m : members) {
        sv.members.push_back(m.bus);
        if (m.converged) ok.push_back(&m);
        else all = false;
    }
    if (!ok.empty()) {
        sv.spread = detail::max_limit_distance(ok);
        sv.limit = detail::mean_limit(ok);
    }
    sv.internally_synced = all && sv.spread && *sv.spread < cfg.tol_eq;
    return sv;
}

/// Global limit is the mean of converged node limits; also fills each
/// subnet's `synced_with_global`.
[[nodiscard]] inline GlobalVerdict global_verdict(std::vector<SubnetVerdict>& subnets,
                                                  const std::vector<NodeVerdict>& nodes, const SyncConfig& cfg) {
    GlobalVerdict g;
    std::vector<const NodeVerdict*> ok;
    for (const auto& n : nodes) {
        if (n.converged) ok.push_back(&n);
    }
    g.all_converged = !nodes.empty() && ok.size() == nodes.size();
    if (ok.empty()) {
        g.status = GlobalStatus::Undetermined;
        for (auto& s : subnets) s.synced_with_global.reset();
        return g;
    }
    g.limit = detail::mean_limit(ok);
    g.max_pairwise = detail::max_limit_distance(ok);
    for (auto& s : subnets) {
        if (s.limit) s.synced_with_global = distance(*s.limit, *g.limit) < cfg.tol_eq;
        else s.synced_with_global.reset();
    }
    g.status = g.all_converged && *g.max_pairwise < cfg.tol_eq ? GlobalStatus::Synchronized
                                                                : GlobalStatus::NotSynchronized;
    return g;
}

}  // namespace cfsync
