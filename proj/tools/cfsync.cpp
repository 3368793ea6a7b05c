// cfsync command-line tool: simulate, analyze, inertia, plotdata.

#include "cfsync/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

void add_analysis_flags(CLI::App* cmd, cfsync::AnalysisFlags& f) {
    cmd->add_option("--sync-t-end", f.t_end, "Analysis horizon T_end, s (default: last sample)");
    cmd->add_option("--window", f.window, "Trailing convergence window, s (default 1)");
    cmd->add_option("--t-coarse", f.t_coarse, "Start of the coarse-limit segment, s (default T_end - 2)");
    cmd->add_option("--tol-eps", f.tol_eps, "Convergence tolerance on eps, 1/s (default 1e-4)");
    cmd->add_option("--tol-omega", f.tol_omega, "Convergence tolerance on omega, rad/s (default 1e-3)");
    cmd->add_option("--tol-node", f.tol_node, "Node fluctuation tolerance (default 1e-3)");
    cmd->add_option("--tol-eq", f.tol_eq, "Limit equality tolerance (default 1e-3)");
    cmd->add_option("--t-event", f.t_event, "Disturbance instant, s (default: first recorded event)");
    cmd->add_option("--limit-mode", f.limit_mode, "Quasi-limit: at_end or window_mean");
    cmd->add_option("--smoothing", f.smoothing_window, "Moving-average width in samples, odd (default 5)");
    cmd->add_option("--omega-convention", f.omega_convention, "absolute or per_unit_deviation");
    cmd->add_option("--overshoot-end", f.overshoot_end, "node_convergence or t_end");
    cmd->add_option("--min-r2", f.min_r_squared, "R^2 below which a damping fit is flagged (default 0.8)");
    cmd->add_option("--tol-subnet", f.tol_subnet, "Subnet limit-difference tolerance (default 1e-3)");
    cmd->add_option("--n-convention", f.n_convention, "paper_literal or total_buses (default)");
}

void add_capacitor_flags(CLI::App* cmd, cfsync::CapacitorBusModel& m, double& t_end, double& dt) {
    cmd->add_option("--c-eq", m.c_eq, "Equivalent capacitance, pu")->capture_default_str();
    cmd->add_option("--q-step", m.q_step, "Reactive supply step, pu")->capture_default_str();
    cmd->add_option("--q-step-time", m.t_step, "Step instant, s")->capture_default_str();
    cmd->add_option("--sweep-t-end", t_end, "Sweep horizon, s")->capture_default_str();
    cmd->add_option("--sweep-dt", dt, "Sweep step, s")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex-frequency synchronization analysis for power-system transients"};
    app.set_version_flag("--version", cfsync::kVersion);
    app.require_subcommand(1);

    cfsync::SimulateOptions sim;
    std::string integrator = "rk4";
    std::optional<std::string> replay;
    auto* c_sim = app.add_subcommand("simulate", "Run a time-domain simulation and write trajectory CSVs");
    c_sim->add_option("--case", sim.case_path, "Case JSON file");
    c_sim->add_option("--t-end", sim.sim.t_end, "Simulation horizon, s")->capture_default_str();
    c_sim->add_option("--dt", sim.sim.dt, "Integration step, s")->capture_default_str();
    c_sim->add_option("--integrator", integrator, "rk4 or trapezoidal")->capture_default_str();
    c_sim->add_option("--record-every", sim.sim.record_every, "Record every n-th step")->capture_default_str();
    c_sim->add_option("--name", sim.name, "Output file stem (default: case file stem)");
    c_sim->add_option("--out", sim.out_dir, "Output directory (default: $CFSYNC_OUTPUT_DIR or .)");
    c_sim->add_flag("--analyze", sim.analyze, "Also write the synchronization report");
    c_sim->add_option("--replay", replay, "Re-run the simulation recorded in a manifest");
    add_analysis_flags(c_sim, sim.analysis);

    cfsync::AnalyzeOptions an;
    auto* c_an = app.add_subcommand("analyze", "Estimate complex frequency and write the synchronization report");
    c_an->add_option("--trajectory", an.trajectory_path, "Trajectory CSV")->required();
    c_an->add_option("--case", an.case_path, "Case JSON file")->required();
    c_an->add_option("--report", an.out_path, "Report path (default: <out>/<stem>.report.json)");
    c_an->add_option("--out", an.out_dir, "Output directory (default: $CFSYNC_OUTPUT_DIR or .)");
    add_analysis_flags(c_an, an.flags);

    cfsync::InertiaOptions in;
    auto* c_in = app.add_subcommand("inertia", "Fit frequency and voltage inertia; optional capacitor-model sweep");
    c_in->add_option("--trajectory", in.trajectory_path, "Trajectory CSV")->required();
    c_in->add_option("--case", in.case_path, "Case JSON file")->required();
    c_in->add_option("--generators", in.generators_path, "Generator CSV (default: beside the trajectory)");
    c_in->add_option("--window-start", in.window_start, "Fit window start, s (default: first event)");
    c_in->add_option("--window-length", in.window_length, "Fit window length, s (default 0.3)");
    c_in->add_option("--smoothing", in.smoothing_window, "Moving-average width for d(omega)/dt")->capture_default_str();
    c_in->add_option("--sweep", in.sweep, "Comma-separated H_v values for the capacitor sweep")->delimiter(',');
    c_in->add_option("--out", in.out_dir, "Output directory (default: $CFSYNC_OUTPUT_DIR or .)");
    add_capacitor_flags(c_in, in.capacitor, in.sweep_t_end, in.sweep_dt);

    cfsync::PlotdataOptions pd;
    auto* c_pd = app.add_subcommand("plotdata", "Write tidy CSVs for plotting");
    c_pd->add_option("--report", pd.report_path, "Report JSON")->required();
    c_pd->add_option("--trajectory", pd.trajectory_path, "Trajectory CSV")->required();
    c_pd->add_option("--kind", pd.kinds, "Figure kinds: eps, omega, spread, damping, sweep (default: all)")
        ->delimiter(',');
    c_pd->add_option("--sweep", pd.sweep, "H_v values for the sweep kind")->delimiter(',');
    c_pd->add_option("--out", pd.out_dir, "Output directory (default: $CFSYNC_OUTPUT_DIR or .)");
    add_capacitor_flags(c_pd, pd.capacitor, pd.sweep_t_end, pd.sweep_dt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cfsync::exit_code(cfsync::ErrorKind::Input);
    }

    return cfsync::run_guarded([&]() -> int {
        if (c_sim->parsed()) {
            if (replay) {
                (void)cfsync::cmd_replay(*replay, sim.out_dir);
                return 0;
            }
            if (sim.case_path.empty()) cfsync::fail_input("simulate needs --case or --replay");
            sim.sim.integrator = cfsync::parse_integrator(integrator);
            (void)cfsync::cmd_simulate(sim);
        } else if (c_an->parsed()) {
            (void)cfsync::cmd_analyze(an);
        } else if (c_in->parsed()) {
            (void)cfsync::cmd_inertia(in);
        } else if (c_pd->parsed()) {
            (void)cfsync::cmd_plotdata(pd);
        }
        return 0;
    });
}
