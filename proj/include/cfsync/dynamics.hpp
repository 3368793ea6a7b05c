#pragma once

// =============================================================================
// cfsync - fixed-step transient simulation
// =============================================================================
// Classical machines (constant EMF behind x'd) with an optional first-order
// exciter and droop governor, coupled to a constant-impedance network that is
// solved algebraically at every integrator stage. All phasors live in the
// synchronous reference frame, so an undisturbed system has constant angles.
// =============================================================================

#include "cfsync/common.hpp"
#include "cfsync/grid_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfsync {

enum class Integrator { Rk4, Trapezoidal };

struct SimConfig {
    double t_end = 10.0;
    double dt = 1e-3;
    Integrator integrator = Integrator::Rk4;
    int record_every = 1;
};

inline void validate_sim_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0 && cfg.dt <= 0.02)) fail_config("dt out of range (0, 0.02] s");
    if (!(cfg.t_end > 0.0)) fail_config("t_end must be positive");
    if (cfg.record_every < 1) fail_config("record_every must be at least 1");
}

struct GeneratorState {
    double delta = 0.0;  // rad, relative to the synchronous frame
    double omega = 0.0;  // rad/s, absolute
    double e_q = 1.0;    // pu
    double p_m = 0.0;    // pu on s_base
};

struct Trajectory {
    std::vector<int> bus_ids;
    std::vector<int> gen_buses;
    double f_nominal = 60.0;
    std::vector<double> times;
    std::vector<std::vector<double>> v;      // [bus][sample]
    std::vector<std::vector<double>> theta;  // [bus][sample], wrapped to (-pi, pi]
    std::vector<std::vector<GeneratorState>> gen_states;  // [gen][sample]
    std::vector<std::vector<double>> p_e;    // [gen][sample]
    std::vector<std::vector<double>> q_e;    // [gen][sample]
    std::vector<double> event_times;
    double max_residual = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t sample_count() const { return times.size(); }
    [[nodiscard]] std::size_t bus_count() const { return bus_ids.size(); }
    [[nodiscard]] double omega_s() const { return 2.0 * std::numbers::pi * f_nominal; }
};

/// Algebraic network solution for one generator state.
struct NetworkSnapshot {
    Eigen::VectorXcd v;            // bus voltages
    std::vector<double> p_e;       // per generator
    std::vector<double> q_e;
    std::vector<double> v_term;    // terminal magnitude per generator
    double residual = 0.0;         // ||Y_aug v - i||_inf
};

struct StepResult {
    std::vector<GeneratorState> state;
    NetworkSnapshot network;
};

/// Generator parameters converted to the system base.
struct MachineModel {
    int bus_id = 0;
    std::size_t bus = 0;
    double h_sys = 1.0;  // H * s_machine / s_base
    double d_sys = 0.0;
    double xdp_sys = 0.1;

    struct Governor {
        double gain = 20.0;  // s_machine / (s_base * R_gov)
        double t_gov = 0.5;
        double p_ref = 0.0;
    };
    struct Exciter {
        double k_ex = 0.0;
        double t_ex = 0.1;
        double v_ref = 1.0;
        double e_ref = 1.0;
    };
    std::optional<Governor> governor;
    std::optional<Exciter> exciter;

    /// Swing-equation inertia 2H/omega_s on the system base.
    [[nodiscard]] double m(double omega_s) const { return 2.0 * h_sys / omega_s; }
};

class DynamicModel {
public:
    struct Initial;

    /// Builds machine internal states from a converged power flow.
    static Initial initialize(const NetworkCase& c, const PowerFlowSolution& pf);

    [[nodiscard]] const NetworkCase& network_case() const { return case_; }
    [[nodiscard]] const NetworkState& network() const { return net_; }
    [[nodiscard]] const std::vector<MachineModel>& machines() const { return machines_; }
    [[nodiscard]] double omega_s() const { return omega_s_; }

    [[nodiscard]] NetworkSnapshot solve_network(std::span<const GeneratorState> x) const {
        const auto n = static_cast<Eigen::Index>(case_.buses.size());
        Eigen::VectorXcd cur = Eigen::VectorXcd::Zero(n);
        for (std::size_t g = 0; g < machines_.size(); ++g) {
            const auto& mm = machines_[g];
            cur(static_cast<Eigen::Index>(mm.bus)) += std::polar(x[g].e_q, x[g].delta) / Complex(0.0, mm.xdp_sys);
        }
        NetworkSnapshot s;
        s.v = lu_.solve(cur);
        s.residual = (y_aug_ * s.v - cur).cwiseAbs().maxCoeff();
        s.p_e.resize(machines_.size());
        s.q_e.resize(machines_.size());
        s.v_term.resize(machines_.size());
        for (std::size_t g = 0; g < machines_.size(); ++g) {
            const auto& mm = machines_[g];
            const Complex vt = s.v(static_cast<Eigen::Index>(mm.bus));
            const Complex e = std::polar(x[g].e_q, x[g].delta);
            const Complex ig = (e - vt) / Complex(0.0, mm.xdp_sys);
            // Power delivered through x'd equals terminal power (lossless reactance).
            const Complex se = e * std::conj(ig);
            const Complex st = vt * std::conj(ig);
            s.p_e[g] = se.real();
            s.q_e[g] = st.imag();
            s.v_term[g] = std::abs(vt);
        }
        return s;
    }

    [[nodiscard]] std::vector<GeneratorState> derivatives(std::span<const GeneratorState> x,
                                                          const NetworkSnapshot& net) const {
        std::vector<GeneratorState> dx(x.size(), GeneratorState{0.0, 0.0, 0.0, 0.0});
        for (std::size_t g = 0; g < machines_.size(); ++g) {
            const auto& mm = machines_[g];
            const double dw = x[g].omega - omega_s_;
            dx[g].delta = dw;
            dx[g].omega = omega_s_ / (2.0 * mm.h_sys) * (x[g].p_m - net.p_e[g] - mm.d_sys * dw / omega_s_);
            if (mm.exciter) {
                const auto& ex = *mm.exciter;
                dx[g].e_q = (ex.k_ex * (ex.v_ref - net.v_term[g]) - (x[g].e_q - ex.e_ref)) / ex.t_ex;
            }
            if (mm.governor) {
                const auto& gv = *mm.governor;
                dx[g].p_m = (gv.p_ref - gv.gain * dw / omega_s_ - x[g].p_m) / gv.t_gov;
            }
        }
        return dx;
    }

    [[nodiscard]] std::vector<GeneratorState> derivatives(std::span<const GeneratorState> x) const {
        return derivatives(x, solve_network(x));
    }

    /// Advances one step and returns the new state with its network solution.
    [[nodiscard]] StepResult step(std::span<const GeneratorState> x, double dt, Integrator integ) const {
        StepResult r;
        r.state = integ == Integrator::Rk4 ? step_rk4(x, dt) : step_trapezoidal(x, dt);
        for (const auto& s : r.state) {
            if (!std::isfinite(s.delta) || !std::isfinite(s.omega) || !std::isfinite(s.e_q) || !std::isfinite(s.p_m)) {
                fail_numerical("non-finite generator state");
            }
        }
        r.network = solve_network(r.state);
        return r;
    }

    void apply(const Event& e) {
        net_ = cfsync::apply_event(case_, std::move(net_), e);
        factorize();
    }

private:
    NetworkCase case_;
    NetworkState net_;
    std::vector<MachineModel> machines_;
    double omega_s_ = 0.0;
    Eigen::MatrixXcd y_aug_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;

    void factorize() {
        y_aug_ = net_.ybus.entries;
        for (std::size_t i = 0; i < case_.buses.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            y_aug_(k, k) += net_.load_admittance[i] + net_.shunt_admittance[i];
        }
        for (const auto& mm : machines_) {
            const auto k = static_cast<Eigen::Index>(mm.bus);
            y_aug_(k, k) += 1.0 / Complex(0.0, mm.xdp_sys);
        }
        lu_.compute(y_aug_);
        const double rc = lu_.rcond();
        if (!(rc > 1e-14)) fail_numerical("augmented network matrix is singular");
    }

    static void axpy(std::vector<GeneratorState>& out, std::span<const GeneratorState> x,
                     const std::vector<GeneratorState>& k, double h) {
        out.resize(x.size());
        for (std::size_t g = 0; g < x.size(); ++g) {
            out[g].delta = x[g].delta + h * k[g].delta;
            out[g].omega = x[g].omega + h * k[g].omega;
            out[g].e_q = x[g].e_q + h * k[g].e_q;
            out[g].p_m = x[g].p_m + h * k[g].p_m;
        }
    }

    [[nodiscard]] std::vector<GeneratorState> step_rk4(std::span<const GeneratorState> x, double h) const {
        std::vector<GeneratorState> tmp;
        const auto k1 = derivatives(x);
        axpy(tmp, x, k1, 0.5 * h);
        const auto k2 = derivatives(tmp);
        axpy(tmp, x, k2, 0.5 * h);
        const auto k3 = derivatives(tmp);
        axpy(tmp, x, k3, h);
        const auto k4 = derivatives(tmp);
        std::vector<GeneratorState> out(x.size());
        for (std::size_t g = 0; g < x.size(); ++g) {
            out[g].delta = x[g].delta + h / 6.0 * (k1[g].delta + 2.0 * k2[g].delta + 2.0 * k3[g].delta + k4[g].delta);
            out[g].omega = x[g].omega + h / 6.0 * (k1[g].omega + 2.0 * k2[g].omega + 2.0 * k3[g].omega + k4[g].omega);
            out[g].e_q = x[g].e_q + h / 6.0 * (k1[g].e_q + 2.0 * k2[g].e_q + 2.0 * k3[g].e_q + k4[g].e_q);
            out[g].p_m = x[g].p_m + h / 6.0 * (k1[g].p_m + 2.0 * k2[g].p_m + 2.0 * k3[g].p_m + k4[g].p_m);
        }
        return out;
    }

    static Eigen::VectorXd flatten(std::span<const GeneratorState> x) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(4 * x.size()));
        for (std::size_t g = 0; g < x.size(); ++g) {
            const auto b = static_cast<Eigen::Index>(4 * g);
            v(b) = x[g].delta;
            v(b + 1) = x[g].omega;
            v(b + 2) = x[g].e_q;
            v(b + 3) = x[g].p_m;
        }
        return v;
    }

    static std::vector<GeneratorState> unflatten(const Eigen::VectorXd& v) {
        std::vector<GeneratorState> x(static_cast<std::size_t>(v.size() / 4));
        for (std::size_t g = 0; g < x.size(); ++g) {
            const auto b = static_cast<Eigen::Index>(4 * g);
            x[g] = {v(b), v(b + 1), v(b + 2), v(b + 3)};
        }
        return x;
    }

    /// Implicit trapezoidal rule, Newton iterations with a finite-difference
    /// Jacobian of the stage residual evaluated at the start of the step.
    [[nodiscard]] std::vector<GeneratorState> step_trapezoidal(std::span<const GeneratorState> x, double h) const {
        const Eigen::VectorXd x0 = flatten(x);
        const Eigen::VectorXd f0 = flatten(derivatives(x));
        const auto n = x0.size();
        auto f = [&](const Eigen::VectorXd& z) { return flatten(derivatives(unflatten(z))); };

        Eigen::MatrixXd jac(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd z = x0;
            const double eps = 1e-7 * std::max(1.0, std::abs(x0(j)));
            z(j) += eps;
            jac.col(j) = -0.5 * h * (f(z) - f0) / eps;
            jac(j, j) += 1.0;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);

        Eigen::VectorXd z = x0 + h * f0;
        for (int it = 0; it < 50; ++it) {
            const Eigen::VectorXd res = z - x0 - 0.5 * h * (f0 + f(z));
            const Eigen::VectorXd dz = lu.solve(res);
            z -= dz;
            double scale = 1.0 + z.cwiseAbs().maxCoeff();
            if (dz.cwiseAbs().maxCoeff() <= 1e-14 * scale) return unflatten(z);
        }
        fail_numerical("trapezoidal corrector did not converge");
    }
};

struct DynamicModel::Initial {
    DynamicModel model;
    std::vector<GeneratorState> state;
    NetworkSnapshot network;
};

inline DynamicModel::Initial DynamicModel::initialize(const NetworkCase& c, const PowerFlowSolution& pf) {
    if (!(pf.max_mismatch <= 1e-6) || pf.v.size() != c.buses.size()) {
        fail_numerical("unconverged initialization: power-flow mismatch " + std::to_string(pf.max_mismatch) + " pu");
    }
    DynamicModel m;
    m.case_ = c;
    m.omega_s_ = c.omega_s();
    m.net_ = make_network_state(c, pf);

    std::vector<double> load_p(c.buses.size(), 0.0), load_q(c.buses.size(), 0.0);
    for (const auto& l : c.loads) {
        load_p[c.bus_index(l.bus)] += l.p;
        load_q[c.bus_index(l.bus)] += l.q;
    }

    std::vector<GeneratorState> x;
    std::vector<Complex> s_gen;
    for (const auto& g : c.generators) {
        MachineModel mm;
        mm.bus_id = g.bus;
        mm.bus = c.bus_index(g.bus);
        const double ratio = g.s_machine / c.s_base;
        mm.h_sys = g.h * ratio;
        mm.d_sys = g.d * ratio;
        mm.xdp_sys = g.xdp / ratio;

        const auto i = mm.bus;
        const Complex sg(pf.p_inj[i] + load_p[i], pf.q_inj[i] + load_q[i]);
        const Complex vt = std::polar(pf.v[i], pf.theta[i]);
        const Complex ig = std::conj(sg / vt);
        const Complex e = vt + Complex(0.0, mm.xdp_sys) * ig;
        x.push_back({std::arg(e), m.omega_s_, std::abs(e), sg.real()});
        s_gen.push_back(sg);
        if (g.governor) mm.governor = MachineModel::Governor{ratio / g.governor->r_gov, g.governor->t_gov, 0.0};
        if (g.exciter) mm.exciter = MachineModel::Exciter{g.exciter->k_ex, g.exciter->t_ex, 0.0, std::abs(e)};
        m.machines_.push_back(mm);
    }
    m.factorize();

    auto snap = m.solve_network(x);
    if (snap.residual >= 1e-10) fail_numerical("initial network residual too large");
    for (std::size_t g = 0; g < x.size(); ++g) {
        if (std::abs(snap.p_e[g] - s_gen[g].real()) > 1e-6) {
            fail_numerical("generator at bus " + std::to_string(m.machines_[g].bus_id) +
                           ": terminal power inconsistent with power flow");
        }
        // Exact electrical balance at t = 0 so the undisturbed system is a fixed point.
        x[g].p_m = snap.p_e[g];
        auto& mm = m.machines_[g];
        if (mm.governor) mm.governor->p_ref = snap.p_e[g];
        if (mm.exciter) {
            const auto& spec = c.generators[g].exciter;
            mm.exciter->v_ref = spec->v_ref ? *spec->v_ref : snap.v_term[g];
        }
    }
    return Initial{std::move(m), std::move(x), std::move(snap)};
}

/// Index of the first grid instant k*dt at or after `t`.
[[nodiscard]] inline long long snap_to_grid(double t, double dt) {
    return static_cast<long long>(std::ceil(t / dt - 1e-9));
}

inline Trajectory simulate(const NetworkCase& c, const SimConfig& cfg) {
    validate_sim_config(cfg);
    const auto pf = solve_power_flow(c);
    auto init = DynamicModel::initialize(c, pf);
    auto& model = init.model;

    const long long n_steps = std::llround(cfg.t_end / cfg.dt);
    std::vector<Event> events = c.events;
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });

    Trajectory tr;
    tr.bus_ids = c.bus_ids();
    for (const auto& g : c.generators) tr.gen_buses.push_back(g.bus);
    tr.f_nominal = c.f_nominal;
    const std::size_t nb = c.buses.size();
    const std::size_t ng = c.generators.size();
    tr.v.assign(nb, {});
    tr.theta.assign(nb, {});
    tr.gen_states.assign(ng, {});
    tr.p_e.assign(ng, {});
    tr.q_e.assign(ng, {});
    const auto n_rec = static_cast<std::size_t>(n_steps / cfg.record_every + 1);
    tr.times.reserve(n_rec);
    for (auto& s : tr.v) s.reserve(n_rec);
    for (auto& s : tr.theta) s.reserve(n_rec);

    std::vector<long long> event_step;
    for (const auto& e : events) {
        const long long k = snap_to_grid(e.time, cfg.dt);
        event_step.push_back(k);
        if (k > n_steps) {
            tr.warnings.push_back("event at t=" + std::to_string(e.time) + " s lies beyond t_end and was ignored");
        }
    }

    std::vector<GeneratorState> x = std::move(init.state);
    NetworkSnapshot net = std::move(init.network);
    std::size_t next_event = 0;
    for (long long k = 0; k <= n_steps; ++k) {
        bool changed = false;
        while (next_event < events.size() && event_step[next_event] <= k) {
            model.apply(events[next_event]);
            tr.event_times.push_back(static_cast<double>(k) * cfg.dt);
            ++next_event;
            changed = true;
        }
        if (changed) net = model.solve_network(x);

        if (k % cfg.record_every == 0) {
            tr.times.push_back(static_cast<double>(k) * cfg.dt);
            for (std::size_t i = 0; i < nb; ++i) {
                const Complex u = net.v(static_cast<Eigen::Index>(i));
                const double mag = std::abs(u);
                if (!(mag > 0.0)) {
                    fail_numerical("voltage collapse at bus " + std::to_string(tr.bus_ids[i]) +
                                   ", t=" + std::to_string(tr.times.back()) + " s");
                }
                tr.v[i].push_back(mag);
                tr.theta[i].push_back(wrap_angle(std::arg(u)));
            }
            for (std::size_t g = 0; g < ng; ++g) {
                tr.gen_states[g].push_back(x[g]);
                tr.p_e[g].push_back(net.p_e[g]);
                tr.q_e[g].push_back(net.q_e[g]);
            }
            tr.max_residual = std::max(tr.max_residual, net.residual);
        }
        if (k == n_steps) break;
        auto r = model.step(x, cfg.dt, cfg.integrator);
        x = std::move(r.state);
        net = std::move(r.network);
    }
    return tr;
}

}  // namespace cfsync
