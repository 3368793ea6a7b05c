// Load-shed scenario on the bundled 9-bus case: simulate, analyze, print verdicts.
//
//   load_shed_example data/wscc9.json

#include "cfsync/cfsync.hpp"

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : "data/wscc9.json";
    try {
        const auto c = cfsync::load_case(path);
        cfsync::SimConfig sim;
        sim.t_end = 20.0;
        const auto tr = cfsync::simulate(c, sim);

        cfsync::AnalysisConfig cfg;
        cfg.sync.t_end = sim.t_end;
        cfg.sync.t_event = tr.event_times.empty() ? 0.0 : tr.event_times.front();
        const auto r = cfsync::analyze(tr, c, cfg);

        std::printf("%-4s %-9s %-10s %-10s %-12s %s\n", "bus", "converged", "t_eps", "t_omega", "eps_inf", "omega_inf");
        for (const auto& n : r.nodes) {
            std::printf("%-4d %-9s %-10.3f %-10.3f %-12.3e %.6f\n", n.bus, n.converged ? "yes" : "no",
                        n.t_eps.value_or(-1.0), n.t_omega.value_or(-1.0), n.limit.eps, n.limit.omega);
        }
        for (const auto& s : r.subnet_metrics) {
            std::printf("subnet %s: lag t_eps_max - t_omega_max = %.3f s\n", s.subnet.c_str(), s.lag.value_or(0.0));
        }
        std::printf("global: %s\n", cfsync::to_string(r.global.status));
        return r.global.status == cfsync::GlobalStatus::Synchronized ? 0 : 1;
    } catch (const cfsync::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return cfsync::exit_code(e.kind());
    }
}
