#pragma once

// =============================================================================
// cfsync - analysis pipeline and SyncReport
// =============================================================================
// trajectory -> complex frequency -> verdicts -> metrics -> report.
// The report echoes every configuration value it was produced with; absent
// quantities serialize as null.
// =============================================================================

#include "cfsync/case_io.hpp"
#include "cfsync/cf_estimator.hpp"
#include "cfsync/common.hpp"
#include "cfsync/disturbance_metrics.hpp"
#include "cfsync/dynamics.hpp"
#include "cfsync/grid_model.hpp"
#include "cfsync/sync_detector.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfsync {

using ojson = nlohmann::ordered_json;

struct AnalysisConfig {
    EstimatorConfig estimator;
    SyncConfig sync;
    MetricsConfig metrics;
};

struct SyncReport {
    std::string case_name;
    AnalysisConfig config;
    std::vector<int> bus_ids;
    std::vector<NodeVerdict> nodes;
    std::vector<SubnetVerdict> subnets;
    GlobalVerdict global;
    std::vector<NodeMetrics> node_metrics;
    std::vector<SubnetMetrics> subnet_metrics;
    DisturbanceRegion region;
};

/// Reorders the trajectory buses to the case order; both must hold the same ids.
[[nodiscard]] inline Trajectory align_to_case(const Trajectory& tr, const NetworkCase& c) {
    const auto ids = c.bus_ids();
    if (tr.bus_ids.size() != ids.size()) {
        fail_input("trajectory has " + std::to_string(tr.bus_ids.size()) + " buses, case has " +
                   std::to_string(ids.size()));
    }
    Trajectory out = tr;
    for (std::size_t b = 0; b < ids.size(); ++b) {
        auto it = std::find(tr.bus_ids.begin(), tr.bus_ids.end(), ids[b]);
        if (it == tr.bus_ids.end()) fail_input("bus " + std::to_string(ids[b]) + " is missing from the trajectory");
        const auto src = static_cast<std::size_t>(it - tr.bus_ids.begin());
        out.bus_ids[b] = ids[b];
        out.v[b] = tr.v[src];
        out.theta[b] = tr.theta[src];
    }
    out.f_nominal = c.f_nominal;
    return out;
}

/// Runs the full pipeline on a trajectory already aligned with `c`.
[[nodiscard]] inline SyncReport analyze(const Trajectory& tr, const NetworkCase& c, const AnalysisConfig& cfg) {
    if (tr.times.size() < 3) fail_input("trajectory needs at least 3 samples");
    validate_sync_config(cfg.sync);
    if (tr.times.back() < cfg.sync.t_end - detail::time_slack(tr.times)) {
        fail_config("t_end " + format_number(cfg.sync.t_end) + " s exceeds the trajectory end " +
                    format_number(tr.times.back()) + " s");
    }
    if (cfg.sync.window >= tr.times.back() - tr.times.front()) {
        fail_config("window " + format_number(cfg.sync.window) + " s is not shorter than the trajectory span " +
                    format_number(tr.times.back() - tr.times.front()) + " s");
    }
    const auto cf = estimate_complex_frequency(tr, cfg.estimator);

    SyncReport r;
    r.case_name = c.name;
    r.config = cfg;
    r.bus_ids = cf.bus_ids;
    std::vector<ComplexFrequencySample> targets;
    for (std::size_t b = 0; b < cf.bus_count(); ++b) {
        r.nodes.push_back(node_verdict(cf.view(b), cfg.sync, cf.bus_ids[b]));
        r.node_metrics.push_back(node_metrics(cf.view(b), r.nodes.back(), cfg.sync, cfg.metrics));
        targets.push_back(r.nodes.back().coarse);
    }
    for (const auto& [name, members] : c.subnets) {
        std::vector<NodeVerdict> nv;
        std::vector<NodeMetrics> nm;
        for (int id : members) {
            const auto b = c.bus_index(id);
            nv.push_back(r.nodes[b]);
            nm.push_back(r.node_metrics[b]);
        }
        r.subnets.push_back(subnet_verdict(name, nv, cfg.sync));
        r.subnet_metrics.push_back(subnet_metrics(name, nm, nv, cfg.metrics.tol_subnet));
    }
    r.global = global_verdict(r.subnets, r.nodes, cfg.sync);
    r.region = disturbance_region(cf, targets, cfg.sync, cfg.metrics.n_convention);
    return r;
}

// =============================================================================
// JSON
// =============================================================================

namespace detail {

[[nodiscard]] inline ojson opt(const std::optional<double>& x) {
    return x && std::isfinite(*x) ? ojson(*x) : ojson(nullptr);
}

[[nodiscard]] inline ojson sample_json(const ComplexFrequencySample& s) { return {{"eps", s.eps}, {"omega", s.omega}}; }

[[nodiscard]] inline ojson damping_json(const std::optional<DampingFit>& f) {
    if (!f) return nullptr;
    ojson j;
    j["sigma"] = f->fully_damped() ? ojson(nullptr) : ojson(f->sigma);
    j["fully_damped"] = f->fully_damped();
    j["amplitude"] = f->amplitude;
    j["r_squared"] = f->r_squared;
    j["method"] = to_string(f->method);
    j["points"] = f->points;
    return j;
}

}  // namespace detail

[[nodiscard]] inline const char* to_string(OmegaConvention c) {
    return c == OmegaConvention::Absolute ? "absolute" : "per_unit_deviation";
}
[[nodiscard]] inline const char* to_string(LimitMode m) { return m == LimitMode::AtEnd ? "at_end" : "window_mean"; }
[[nodiscard]] inline const char* to_string(OvershootEnd e) {
    return e == OvershootEnd::NodeConvergence ? "node_convergence" : "t_end";
}

[[nodiscard]] inline ojson config_json(const AnalysisConfig& c) {
    ojson j;
    j["estimator"] = {{"smoothing_window", c.estimator.smoothing_window},
                      {"omega_convention", to_string(c.estimator.omega_convention)},
                      {"scheme", "central-3pt"}};
    j["sync"] = {{"t_end", c.sync.t_end},         {"window", c.sync.window},
                 {"t_coarse", c.sync.coarse_start()}, {"tol_eps", c.sync.tol_eps},
                 {"tol_omega", c.sync.tol_omega}, {"tol_node", c.sync.tol_node},
                 {"tol_eq", c.sync.tol_eq},       {"t_event", c.sync.t_event},
                 {"limit_mode", to_string(c.sync.limit_mode)}};
    j["metrics"] = {{"overshoot_end", to_string(c.metrics.overshoot_end)},
                    {"min_r_squared", c.metrics.min_r_squared},
                    {"tol_subnet", c.metrics.tol_subnet},
                    {"n_convention", to_string(c.metrics.n_convention)}};
    return j;
}

[[nodiscard]] inline OmegaConvention parse_omega_convention(const std::string& s) {
    if (s == "absolute") return OmegaConvention::Absolute;
    if (s == "per_unit_deviation") return OmegaConvention::PerUnitDeviation;
    fail_config("omega convention must be absolute or per_unit_deviation, got '" + s + "'");
}
[[nodiscard]] inline LimitMode parse_limit_mode(const std::string& s) {
    if (s == "at_end") return LimitMode::AtEnd;
    if (s == "window_mean") return LimitMode::WindowMean;
    fail_config("limit mode must be at_end or window_mean, got '" + s + "'");
}
[[nodiscard]] inline OvershootEnd parse_overshoot_end(const std::string& s) {
    if (s == "node_convergence") return OvershootEnd::NodeConvergence;
    if (s == "t_end") return OvershootEnd::TEnd;
    fail_config("overshoot end must be node_convergence or t_end, got '" + s + "'");
}
[[nodiscard]] inline NConvention parse_n_convention(const std::string& s) {
    if (s == "paper_literal") return NConvention::PaperLiteral;
    if (s == "total_buses") return NConvention::TotalBuses;
    fail_config("n convention must be paper_literal or total_buses, got '" + s + "'");
}

/// Inverse of config_json; every field is required.
[[nodiscard]] inline AnalysisConfig config_from_json(const ojson& j) {
    try {
        AnalysisConfig c;
        const auto& e = j.at("estimator");
        c.estimator.smoothing_window = e.at("smoothing_window").get<int>();
        c.estimator.omega_convention = parse_omega_convention(e.at("omega_convention").get<std::string>());
        const auto& s = j.at("sync");
        c.sync.t_end = s.at("t_end").get<double>();
        c.sync.window = s.at("window").get<double>();
        c.sync.t_coarse = s.at("t_coarse").get<double>();
        c.sync.tol_eps = s.at("tol_eps").get<double>();
        c.sync.tol_omega = s.at("tol_omega").get<double>();
        c.sync.tol_node = s.at("tol_node").get<double>();
        c.sync.tol_eq = s.at("tol_eq").get<double>();
        c.sync.t_event = s.at("t_event").get<double>();
        c.sync.limit_mode = parse_limit_mode(s.at("limit_mode").get<std::string>());
        const auto& m = j.at("metrics");
        c.metrics.overshoot_end = parse_overshoot_end(m.at("overshoot_end").get<std::string>());
        c.metrics.min_r_squared = m.at("min_r_squared").get<double>();
        c.metrics.tol_subnet = m.at("tol_subnet").get<double>();
        c.metrics.n_convention = parse_n_convention(m.at("n_convention").get<std::string>());
        return c;
    } catch (const ojson::exception& ex) {
        fail_input(std::string("analysis config: ") + ex.what());
    }
}

[[nodiscard]] inline ojson report_json(const SyncReport& r) {
    using detail::opt;
    using detail::sample_json;
    ojson j;
    j["tool"] = "cfsync";
    j["version"] = kVersion;
    j["case"] = r.case_name;
    j["config"] = config_json(r.config);
    j["nodes"] = ojson::array();
    for (const auto& n : r.nodes) {
        j["nodes"].push_back({{"bus", n.bus},
                              {"converged", n.converged},
                              {"t_eps", opt(n.t_eps)},
                              {"t_omega", opt(n.t_omega)},
                              {"t_end_k", opt(n.t_end_k)},
                              {"limit", sample_json(n.limit)},
                              {"coarse", sample_json(n.coarse)},
                              {"fluctuation", n.fluctuation}});
    }
    j["subnets"] = ojson::array();
    for (const auto& s : r.subnets) {
        ojson sj{{"subnet", s.subnet}, {"members", s.members}, {"internally_synced", s.internally_synced},
                 {"spread", opt(s.spread)}};
        sj["limit"] = s.limit ? sample_json(*s.limit) : ojson(nullptr);
        sj["synced_with_global"] = s.synced_with_global ? ojson(*s.synced_with_global) : ojson(nullptr);
        j["subnets"].push_back(sj);
    }
    ojson g{{"status", to_string(r.global.status)}, {"all_converged", r.global.all_converged}};
    g["limit"] = r.global.limit ? sample_json(*r.global.limit) : ojson(nullptr);
    g["max_pairwise"] = opt(r.global.max_pairwise);
    j["global"] = g;
    j["node_metrics"] = ojson::array();
    for (const auto& m : r.node_metrics) {
        j["node_metrics"].push_back({{"bus", m.bus},
                                     {"t_eps", opt(m.t_eps)},
                                     {"t_omega", opt(m.t_omega)},
                                     {"delta_tau", opt(m.delta_tau)},
                                     {"s_eps", opt(m.s_eps)},
                                     {"s_omega", opt(m.s_omega)},
                                     {"overshoot_eps", m.overshoot_eps},
                                     {"overshoot_omega", m.overshoot_omega},
                                     {"damping_eps", detail::damping_json(m.damping_eps)},
                                     {"damping_omega", detail::damping_json(m.damping_omega)},
                                     {"poorly_damped_eps", m.poorly_damped_eps},
                                     {"poorly_damped_omega", m.poorly_damped_omega}});
    }
    j["subnet_metrics"] = ojson::array();
    for (const auto& s : r.subnet_metrics) {
        j["subnet_metrics"].push_back({{"subnet", s.subnet},
                                       {"members", s.members},
                                       {"t_eps_max", opt(s.t_eps_max)},
                                       {"t_omega_max", opt(s.t_omega_max)},
                                       {"lag", opt(s.lag)},
                                       {"limit_diff", s.limit_diff},
                                       {"locally_synced", s.locally_synced}});
    }
    j["disturbance_region"] = {{"disturbed_eps", r.region.disturbed_eps},
                               {"disturbed_omega", r.region.disturbed_omega},
                               {"s_inf", r.region.s_inf},
                               {"r_inf", r.region.r_inf},
                               {"d_inf", r.region.d_inf},
                               {"n", r.region.n},
                               {"n_convention", to_string(r.region.n_convention)}};
    return j;
}

}  // namespace cfsync
