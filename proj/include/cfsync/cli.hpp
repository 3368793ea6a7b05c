#pragma once

// =============================================================================
// cfsync - command implementations
// =============================================================================
// Each command takes a resolved option struct, writes its files and returns a
// process exit code. Errors surface as cfsync::Error; run_guarded maps them.
// Output directory precedence: --out, then $CFSYNC_OUTPUT_DIR, then ".".
// =============================================================================

#include "cfsync/analysis.hpp"
#include "cfsync/case_io.hpp"
#include "cfsync/common.hpp"
#include "cfsync/dynamics.hpp"
#include "cfsync/generalized_inertia.hpp"
#include "cfsync/trajectory_io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cfsync {

namespace fs = std::filesystem;

inline constexpr const char* kOutputDirEnv = "CFSYNC_OUTPUT_DIR";

[[nodiscard]] inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        fail_numerical("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

[[nodiscard]] inline fs::path resolve_output_dir(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return ".";
}

/// "dir/wscc9.trajectory.csv" -> "wscc9"; other names lose only their extension.
[[nodiscard]] inline std::string output_stem(const std::string& path) {
    std::string name = fs::path(path).filename().string();
    for (const char* suffix : {".trajectory.csv", ".report.json", ".csv", ".json"}) {
        const std::string s(suffix);
        if (name.size() > s.size() && name.ends_with(s)) return name.substr(0, name.size() - s.size());
    }
    return name;
}

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail_input("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_input("cannot write " + path.string());
    out << content;
    if (!out) fail_input("write failed for " + path.string());
}

[[nodiscard]] inline ojson parse_json_file(const std::string& path) {
    const auto text = read_text_file(path);
    try {
        return ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        fail_input(path + ": " + e.what());
    }
}

/// Runs `f`, printing any error to `err` and returning its exit code.
[[nodiscard]] inline int run_guarded(const std::function<int()>& f, std::ostream& err = std::cerr) {
    try {
        return f();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

// =============================================================================
// Analysis flags
// =============================================================================

/// Unset fields fall back to defaults derived from the trajectory.
struct AnalysisFlags {
    std::optional<double> t_end;
    std::optional<double> window;
    std::optional<double> t_coarse;
    std::optional<double> tol_eps;
    std::optional<double> tol_omega;
    std::optional<double> tol_node;
    std::optional<double> tol_eq;
    std::optional<double> t_event;
    std::optional<std::string> limit_mode;
    std::optional<int> smoothing_window;
    std::optional<std::string> omega_convention;
    std::optional<std::string> overshoot_end;
    std::optional<double> min_r_squared;
    std::optional<double> tol_subnet;
    std::optional<std::string> n_convention;
};

/// t_end defaults to the last sample, t_event to the first recorded event (else 0).
[[nodiscard]] inline AnalysisConfig resolve_analysis(const AnalysisFlags& f, const Trajectory& tr) {
    AnalysisConfig c;
    c.sync.t_end = f.t_end.value_or(tr.times.empty() ? 0.0 : tr.times.back());
    c.sync.t_event = f.t_event.value_or(tr.event_times.empty() ? 0.0 : tr.event_times.front());
    if (f.window) c.sync.window = *f.window;
    if (f.t_coarse) c.sync.t_coarse = *f.t_coarse;
    if (f.tol_eps) c.sync.tol_eps = *f.tol_eps;
    if (f.tol_omega) c.sync.tol_omega = *f.tol_omega;
    if (f.tol_node) c.sync.tol_node = *f.tol_node;
    if (f.tol_eq) c.sync.tol_eq = *f.tol_eq;
    if (f.limit_mode) c.sync.limit_mode = parse_limit_mode(*f.limit_mode);
    if (f.smoothing_window) c.estimator.smoothing_window = *f.smoothing_window;
    if (f.omega_convention) c.estimator.omega_convention = parse_omega_convention(*f.omega_convention);
    if (f.overshoot_end) c.metrics.overshoot_end = parse_overshoot_end(*f.overshoot_end);
    if (f.min_r_squared) c.metrics.min_r_squared = *f.min_r_squared;
    if (f.tol_subnet) c.metrics.tol_subnet = *f.tol_subnet;
    if (f.n_convention) c.metrics.n_convention = parse_n_convention(*f.n_convention);
    if (c.estimator.smoothing_window < 1 || c.estimator.smoothing_window % 2 == 0) {
        fail_config("smoothing window must be a positive odd sample count");
    }
    if (!c.sync.t_coarse) c.sync.t_coarse = c.sync.coarse_start();
    return c;
}

[[nodiscard]] inline std::string summary_line(const SyncReport& r) {
    std::size_t conv = 0;
    for (const auto& n : r.nodes) conv += n.converged ? 1 : 0;
    std::ostringstream ss;
    ss << "global: " << to_string(r.global.status) << " (" << conv << "/" << r.nodes.size() << " nodes converged)";
    return ss.str();
}

// =============================================================================
// simulate
// =============================================================================

[[nodiscard]] inline const char* to_string(Integrator i) { return i == Integrator::Rk4 ? "rk4" : "trapezoidal"; }

[[nodiscard]] inline Integrator parse_integrator(const std::string& s) {
    if (s == "rk4") return Integrator::Rk4;
    if (s == "trapezoidal") return Integrator::Trapezoidal;
    fail_config("integrator must be rk4 or trapezoidal, got '" + s + "'");
}

[[nodiscard]] inline ojson sim_config_json(const SimConfig& s) {
    return {{"t_end", s.t_end}, {"dt", s.dt}, {"integrator", to_string(s.integrator)}, {"record_every", s.record_every}};
}

[[nodiscard]] inline SimConfig sim_config_from_json(const ojson& j) {
    try {
        SimConfig s;
        s.t_end = j.at("t_end").get<double>();
        s.dt = j.at("dt").get<double>();
        s.integrator = parse_integrator(j.at("integrator").get<std::string>());
        s.record_every = j.at("record_every").get<int>();
        return s;
    } catch (const ojson::exception& e) {
        fail_input(std::string("sim config: ") + e.what());
    }
}

struct SimulateOptions {
    std::string case_path;
    SimConfig sim;
    std::optional<std::string> out_dir;
    std::optional<std::string> name;  // output stem; defaults to the case file stem
    bool analyze = false;
    AnalysisFlags analysis;
};

struct SimulateOutputs {
    fs::path trajectory;
    fs::path generators;
    fs::path manifest;
    std::optional<fs::path> report;
};

namespace detail {

[[nodiscard]] inline SimulateOutputs simulate_with(const std::string& case_path, const std::string& case_text,
                                                   const SimConfig& sim, const fs::path& dir, const std::string& stem,
                                                   const std::optional<AnalysisConfig>& analysis_fixed,
                                                   const std::optional<AnalysisFlags>& analysis_flags,
                                                   std::ostream& out) {
    NetworkCase c;
    try {
        c = parse_case(case_text);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Input) fail_input(case_path + ": " + e.what());
        throw;
    }
    const auto tr = simulate(c, sim);
    for (const auto& w : tr.warnings) out << "warning: " << w << "\n";

    std::ostringstream traj_csv, gen_csv;
    write_trajectory_csv(traj_csv, tr);
    write_generator_csv(gen_csv, tr);

    SimulateOutputs o;
    o.trajectory = dir / (stem + ".trajectory.csv");
    o.generators = dir / (stem + ".generators.csv");
    o.manifest = dir / (stem + ".manifest.json");
    write_file(o.trajectory, traj_csv.str());
    write_file(o.generators, gen_csv.str());

    ojson outputs{{"trajectory", o.trajectory.filename().string()}, {"generators", o.generators.filename().string()}};
    ojson hashes{{"trajectory", sha256_hex(traj_csv.str())}, {"generators", sha256_hex(gen_csv.str())}};
    ojson analysis_json = nullptr;
    if (analysis_fixed || analysis_flags) {
        const auto cfg = analysis_fixed ? *analysis_fixed : resolve_analysis(*analysis_flags, tr);
        const auto report = analyze(tr, c, cfg);
        const auto text = report_json(report).dump(2) + "\n";
        o.report = dir / (stem + ".report.json");
        write_file(*o.report, text);
        outputs["report"] = o.report->filename().string();
        hashes["report"] = sha256_hex(text);
        analysis_json = config_json(cfg);
        out << summary_line(report) << "\n";
    }

    ojson m;
    m["tool"] = "cfsync";
    m["version"] = kVersion;
    m["case_path"] = case_path;
    m["case_sha256"] = sha256_hex(case_text);
    m["sim_config"] = sim_config_json(sim);
    m["analysis_config"] = analysis_json;
    m["outputs"] = outputs;
    m["output_sha256"] = hashes;
    write_file(o.manifest, m.dump(2) + "\n");
    out << "wrote " << o.trajectory.string() << " (" << tr.sample_count() << " samples, " << tr.bus_count()
        << " buses)\n";
    return o;
}

}  // namespace detail

inline SimulateOutputs cmd_simulate(const SimulateOptions& opt, std::ostream& out = std::cout) {
    const auto text = read_text_file(opt.case_path);
    const auto stem = opt.name.value_or(output_stem(opt.case_path));
    std::optional<AnalysisFlags> flags;
    if (opt.analyze) flags = opt.analysis;
    return detail::simulate_with(opt.case_path, text, opt.sim, resolve_output_dir(opt.out_dir), stem, std::nullopt,
                                 flags, out);
}

/// Re-runs a manifest. The case file must still hash to the recorded value.
inline SimulateOutputs cmd_replay(const std::string& manifest_path, const std::optional<std::string>& out_dir,
                                  std::ostream& out = std::cout) {
    const auto m = parse_json_file(manifest_path);
    std::string case_path, recorded_hash, trajectory_name;
    try {
        case_path = m.at("case_path").get<std::string>();
        recorded_hash = m.at("case_sha256").get<std::string>();
        trajectory_name = m.at("outputs").at("trajectory").get<std::string>();
    } catch (const ojson::exception& e) {
        fail_input(manifest_path + ": " + e.what());
    }
    fs::path resolved = case_path;
    if (!fs::exists(resolved) && resolved.is_relative()) {
        resolved = fs::path(manifest_path).parent_path() / case_path;
    }
    const auto text = read_text_file(resolved.string());
    if (sha256_hex(text) != recorded_hash) {
        fail_input(resolved.string() + ": content hash differs from the manifest");
    }
    const auto sim = sim_config_from_json(m.at("sim_config"));
    std::optional<AnalysisConfig> analysis;
    if (m.contains("analysis_config") && !m.at("analysis_config").is_null()) {
        analysis = config_from_json(m.at("analysis_config"));
    }
    return detail::simulate_with(case_path, text, sim, resolve_output_dir(out_dir), output_stem(trajectory_name),
                                 analysis, std::nullopt, out);
}

// =============================================================================
// analyze
// =============================================================================

struct AnalyzeOptions {
    std::string trajectory_path;
    std::string case_path;
    AnalysisFlags flags;
    std::optional<std::string> out_path;  // report file
    std::optional<std::string> out_dir;
};

inline fs::path cmd_analyze(const AnalyzeOptions& opt, std::ostream& out = std::cout) {
    const auto c = load_case(opt.case_path);
    const auto tr = align_to_case(load_trajectory(opt.trajectory_path), c);
    const auto cfg = resolve_analysis(opt.flags, tr);
    const auto report = analyze(tr, c, cfg);
    const fs::path path = opt.out_path ? fs::path(*opt.out_path)
                                       : resolve_output_dir(opt.out_dir) /
                                             (output_stem(opt.trajectory_path) + ".report.json");
    write_file(path, report_json(report).dump(2) + "\n");
    out << summary_line(report) << "\n" << "wrote " << path.string() << "\n";
    return path;
}

// =============================================================================
// inertia
// =============================================================================

struct InertiaOptions {
    std::string trajectory_path;
    std::string case_path;
    std::optional<std::string> generators_path;  // defaults to <stem>.generators.csv beside the trajectory
    std::optional<double> window_start;          // defaults to the first event time
    std::optional<double> window_length;         // defaults to 0.3 s
    int smoothing_window = 1;
    std::vector<double> sweep;                   // H_v values; empty means no sweep
    CapacitorBusModel capacitor;
    double sweep_t_end = 5.0;
    double sweep_dt = 1e-3;
    std::optional<std::string> out_dir;
};

inline constexpr double kDefaultInertiaWindow = 0.3;

[[nodiscard]] inline std::string sweep_column(double h) { return "eps_hv_" + format_number(h); }

[[nodiscard]] inline std::string sweep_csv(const CapacitorSweep& sw) {
    std::ostringstream os;
    os << "t";
    for (const auto& r : sw.runs) os << "," << sweep_column(r.h_v);
    os << "\n";
    for (std::size_t i = 0; i < sw.times.size(); ++i) {
        os << format_double(sw.times[i]);
        for (const auto& r : sw.runs) os << "," << format_double(r.eps[i]);
        os << "\n";
    }
    return os.str();
}

/// Runs the capacitor sweep and refits each H_v over the whole horizon.
[[nodiscard]] inline ojson sweep_json(const CapacitorSweep& sw, const CapacitorBusModel& m, double t_end, double dt) {
    ojson j{{"c_eq", m.c_eq}, {"s_base", m.s_base}, {"v0", m.v0}, {"q_step", m.q_step}, {"t_step", m.t_step},
            {"q_load_coeff", m.q_load_coeff}, {"t_end", t_end}, {"dt", dt}, {"runs", ojson::array()}};
    for (const auto& r : sw.runs) {
        const auto fit = estimate_voltage_inertia(sw.times, r.eps, r.dq, m.t_step, t_end);
        double peak = 0.0;
        for (double e : r.eps) peak = std::max(peak, std::abs(e));
        const auto k0 = static_cast<std::size_t>(snap_to_grid(m.t_step, dt));
        j["runs"].push_back({{"h_v", r.h_v},
                             {"h_v_fit", fit.value},
                             {"fit_residual", fit.residual},
                             {"initial_eps", r.eps[k0]},
                             {"peak_abs_eps", peak}});
    }
    return j;
}

struct InertiaOutputs {
    fs::path json;
    fs::path zeta;
    std::optional<fs::path> sweep;
};

inline InertiaOutputs cmd_inertia(const InertiaOptions& opt, std::ostream& out = std::cout) {
    const auto c = load_case(opt.case_path);
    auto tr = align_to_case(load_trajectory(opt.trajectory_path), c);
    std::string gen_path;
    if (opt.generators_path) {
        gen_path = *opt.generators_path;
    } else {
        const fs::path p(opt.trajectory_path);
        gen_path = (p.parent_path() / (output_stem(opt.trajectory_path) + ".generators.csv")).string();
    }
    load_generator_series(gen_path, tr);
    if (tr.gen_buses.size() != c.generators.size()) fail_input(gen_path + ": generator count differs from the case");
    for (std::size_t g = 0; g < c.generators.size(); ++g) {
        if (tr.gen_buses[g] != c.generators[g].bus) fail_input(gen_path + ": generator order differs from the case");
    }
    if (opt.smoothing_window < 1 || opt.smoothing_window % 2 == 0) {
        fail_config("smoothing window must be a positive odd sample count");
    }

    InertiaConfig ic;
    const bool start_default = !opt.window_start;
    const bool length_default = !opt.window_length;
    ic.window_start = opt.window_start.value_or(tr.event_times.empty() ? tr.times.front() : tr.event_times.front());
    ic.window_end = ic.window_start + opt.window_length.value_or(kDefaultInertiaWindow);
    ic.smoothing_window = opt.smoothing_window;
    if (ic.window_end > tr.times.back() + detail::time_slack(tr.times)) {
        fail_config("inertia window ends after the trajectory");
    }

    const auto cf = estimate_complex_frequency(tr, {});
    const auto est = estimate_generator_inertia(tr, c, cf, ic);

    const fs::path dir = resolve_output_dir(opt.out_dir);
    const std::string stem = output_stem(opt.trajectory_path);
    InertiaOutputs o;
    o.json = dir / (stem + ".inertia.json");
    o.zeta = dir / (stem + ".zeta.csv");

    std::ostringstream zs;
    zs << "t";
    for (const auto& e : est) {
        const auto bus = e.bus_or_region.substr(4);
        zs << ",zeta_re_" << bus << ",zeta_im_" << bus << ",dq_" << bus << ",dp_" << bus;
    }
    zs << "\n";
    const std::size_t rows = est.empty() ? 0 : est.front().times.size();
    for (std::size_t i = 0; i < rows; ++i) {
        zs << format_double(est.front().times[i]);
        for (const auto& e : est) {
            zs << "," << format_double(e.zeta_series[i].real()) << "," << format_double(e.zeta_series[i].imag()) << ","
               << format_double(e.imbalance[i].real()) << "," << format_double(e.imbalance[i].imag());
        }
        zs << "\n";
    }
    write_file(o.zeta, zs.str());

    ojson j;
    j["tool"] = "cfsync";
    j["version"] = kVersion;
    j["case"] = c.name;
    j["config"] = {{"window_start", ic.window_start},
                   {"window_end", ic.window_end},
                   {"window_start_defaulted", start_default},
                   {"window_length_defaulted", length_default},
                   {"smoothing_window", ic.smoothing_window},
                   {"m_definition", "M = 2H/omega_s, system base; fitted from p_m - p_e = M d(omega)/dt"},
                   {"h_v_definition", "H_v fitted from dQ = H_v eps, dQ = (q_e(before window) - q_e) / 2"},
                   {"omega_s", c.omega_s()}};
    j["generators"] = ojson::array();
    for (const auto& e : est) {
        j["generators"].push_back({{"bus_or_region", e.bus_or_region},
                                   {"m", e.m},
                                   {"m_case", e.m_case},
                                   {"m_relative_error", e.m / e.m_case - 1.0},
                                   {"residual_p", e.residual_p},
                                   {"h_v", detail::opt(e.h_v)},
                                   {"residual_q", detail::opt(e.residual_q)}});
    }
    j["zeta_csv"] = o.zeta.filename().string();
    j["sweep"] = nullptr;
    if (!opt.sweep.empty()) {
        const auto sw = simulate_capacitor_bus(opt.capacitor, opt.sweep, opt.sweep_t_end, opt.sweep_dt);
        o.sweep = dir / (stem + ".sweep.csv");
        write_file(*o.sweep, sweep_csv(sw));
        j["sweep"] = sweep_json(sw, opt.capacitor, opt.sweep_t_end, opt.sweep_dt);
        j["sweep"]["csv"] = o.sweep->filename().string();
    }
    write_file(o.json, j.dump(2) + "\n");
    for (const auto& e : est) {
        out << e.bus_or_region << ": M=" << format_number(e.m) << " (case " << format_number(e.m_case) << ")";
        if (e.h_v) out << " H_v=" << format_number(*e.h_v);
        out << "\n";
    }
    out << "wrote " << o.json.string() << "\n";
    return o;
}

// =============================================================================
// plotdata
// =============================================================================

inline const std::vector<std::string>& plot_kinds() {
    static const std::vector<std::string> kinds{"eps", "omega", "spread", "damping", "sweep"};
    return kinds;
}

struct PlotdataOptions {
    std::string report_path;
    std::string trajectory_path;
    std::vector<std::string> kinds;  // empty means all
    std::vector<double> sweep{1.0, 2.0, 4.0};
    CapacitorBusModel capacitor;
    double sweep_t_end = 5.0;
    double sweep_dt = 1e-3;
    std::optional<std::string> out_dir;
};

namespace detail {

[[nodiscard]] inline std::string wide_csv(const ComplexFrequencySeries& cf, bool eps) {
    std::ostringstream os;
    os << "t";
    for (int id : cf.bus_ids) os << (eps ? ",eps_" : ",omega_") << id;
    os << "\n";
    for (std::size_t i = 0; i < cf.times.size(); ++i) {
        os << format_double(cf.times[i]);
        for (std::size_t b = 0; b < cf.bus_count(); ++b) os << "," << format_double(eps ? cf.eps[b][i] : cf.omega[b][i]);
        os << "\n";
    }
    return os.str();
}

}  // namespace detail

inline std::vector<fs::path> cmd_plotdata(const PlotdataOptions& opt, std::ostream& out = std::cout) {
    std::vector<std::string> kinds = opt.kinds.empty() ? plot_kinds() : opt.kinds;
    for (const auto& k : kinds) {
        if (std::find(plot_kinds().begin(), plot_kinds().end(), k) == plot_kinds().end()) {
            std::string valid;
            for (const auto& v : plot_kinds()) valid += (valid.empty() ? "" : ", ") + v;
            fail_input("unknown figure kind '" + k + "'; valid kinds: " + valid);
        }
    }
    const auto report = parse_json_file(opt.report_path);
    AnalysisConfig cfg;
    std::vector<int> report_buses;
    try {
        cfg = config_from_json(report.at("config"));
        for (const auto& n : report.at("nodes")) report_buses.push_back(n.at("bus").get<int>());
    } catch (const ojson::exception& e) {
        fail_input(opt.report_path + ": " + e.what());
    }
    const auto raw = load_trajectory(opt.trajectory_path);
    {
        auto a = report_buses, b = raw.bus_ids;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) fail_input("report and trajectory describe different buses");
        if (raw.times.empty() || raw.times.back() < cfg.sync.t_end - detail::time_slack(raw.times)) {
            fail_input("trajectory ends before the report's t_end");
        }
    }
    const auto cf = estimate_complex_frequency(raw, cfg.estimator);
    auto bus_pos = [&](int id) {
        return static_cast<std::size_t>(std::find(cf.bus_ids.begin(), cf.bus_ids.end(), id) - cf.bus_ids.begin());
    };

    const fs::path dir = resolve_output_dir(opt.out_dir);
    const std::string stem = output_stem(opt.trajectory_path);
    std::vector<fs::path> written;
    auto emit = [&](const std::string& kind, const std::string& text) {
        const auto p = dir / (stem + ".plot_" + kind + ".csv");
        write_file(p, text);
        written.push_back(p);
        out << "wrote " << p.string() << "\n";
    };

    for (const auto& kind : kinds) {
        if (kind == "eps" || kind == "omega") {
            emit(kind, detail::wide_csv(cf, kind == "eps"));
        } else if (kind == "spread") {
            std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
            for (const auto& s : report.at("subnets")) {
                std::vector<std::size_t> idx;
                for (const auto& m : s.at("members")) idx.push_back(bus_pos(m.get<int>()));
                groups.emplace_back(s.at("subnet").get<std::string>(), idx);
            }
            std::vector<std::size_t> all(cf.bus_count());
            for (std::size_t b = 0; b < all.size(); ++b) all[b] = b;
            groups.emplace_back("all", all);
            std::ostringstream os;
            os << "t";
            for (const auto& g : groups) os << ",spread_" << g.first;
            os << "\n";
            for (std::size_t i = 0; i < cf.times.size(); ++i) {
                os << format_double(cf.times[i]);
                for (const auto& g : groups) {
                    double best = 0.0;
                    for (std::size_t a = 0; a < g.second.size(); ++a) {
                        for (std::size_t b = a + 1; b < g.second.size(); ++b) {
                            best = std::max(best, distance(cf.view(g.second[a]).at(i), cf.view(g.second[b]).at(i)));
                        }
                    }
                    os << "," << format_double(best);
                }
                os << "\n";
            }
            emit(kind, os.str());
        } else if (kind == "damping") {
            std::ostringstream os;
            os << "bus,component,t,deviation,envelope\n";
            const double slack = detail::time_slack(cf.times);
            const auto& nodes = report.at("nodes");
            const auto& metrics = report.at("node_metrics");
            for (std::size_t n = 0; n < nodes.size(); ++n) {
                const int id = nodes[n].at("bus").get<int>();
                const auto b = bus_pos(id);
                for (const char* comp : {"eps", "omega"}) {
                    const double target = nodes[n].at("coarse").at(comp).get<double>();
                    const auto& fit = metrics[n].at(std::string("damping_") + comp);
                    const bool has_env = !fit.is_null() && !fit.at("sigma").is_null();
                    const auto& x = std::string(comp) == "eps" ? cf.eps[b] : cf.omega[b];
                    for (std::size_t i = 0; i < cf.times.size(); ++i) {
                        const double t = cf.times[i];
                        if (t < cfg.sync.t_event - slack || t > cfg.sync.t_end + slack) continue;
                        os << id << "," << comp << "," << format_double(t) << ","
                           << format_double(std::abs(x[i] - target)) << ",";
                        if (has_env) {
                            os << format_double(fit.at("amplitude").get<double>() *
                                                std::exp(-fit.at("sigma").get<double>() * t));
                        }
                        os << "\n";
                    }
                }
            }
            emit(kind, os.str());
        } else if (kind == "sweep") {
            emit(kind, sweep_csv(simulate_capacitor_bus(opt.capacitor, opt.sweep, opt.sweep_t_end, opt.sweep_dt)));
        }
    }
    return written;
}

}  // namespace cfsync
