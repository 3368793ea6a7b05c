#pragma once

// =============================================================================
// cfsync - static network model
// =============================================================================
// Per-unit case description, bus admittance assembly, Newton-Raphson power
// flow in polar coordinates, and event application on the algebraic network.
// =============================================================================

#include "cfsync/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace cfsync {

enum class BusKind { Slack, PV, PQ };

struct BusSpec {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double base_kv = 1.0;
    double v_set = 1.0;  // used for slack and pv buses
    std::string subnet;

    friend bool operator==(const BusSpec&, const BusSpec&) = default;
};

struct LineSpec {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_sh = 0.0;  // total line charging
    double tap = 1.0;   // off-nominal ratio on the from side
    bool in_service = true;

    friend bool operator==(const LineSpec&, const LineSpec&) = default;
};

struct GovernorSpec {
    double r_gov = 0.05;
    double t_gov = 0.5;

    friend bool operator==(const GovernorSpec&, const GovernorSpec&) = default;
};

struct ExciterSpec {
    double k_ex = 0.0;
    double t_ex = 0.1;
    /// Terminal voltage reference; when absent the initial terminal voltage is used.
    std::optional<double> v_ref;

    friend bool operator==(const ExciterSpec&, const ExciterSpec&) = default;
};

struct GeneratorSpec {
    int bus = 0;
    double p_set = 0.0;      // scheduled active output, system base (ignored at the slack)
    double h = 1.0;          // inertia constant, seconds on s_machine
    double d = 0.0;          // damping, pu torque per pu speed on s_machine
    double xdp = 0.1;        // transient reactance, pu on s_machine
    double s_machine = 100.0;
    std::optional<GovernorSpec> governor;
    std::optional<ExciterSpec> exciter;

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct LoadSpec {
    int bus = 0;
    double p = 0.0;
    double q = 0.0;

    friend bool operator==(const LoadSpec&, const LoadSpec&) = default;
};

enum class EventKind { LoadScale, LineTrip, QInjectionStep };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::LoadScale;
    int bus = 0;          // load_scale, q_injection_step
    double p_factor = 1.0;
    double q_factor = 1.0;
    int from = 0;         // line_trip
    int to = 0;
    double dq = 0.0;      // q_injection_step, pu on s_base
    std::string description;

    friend bool operator==(const Event&, const Event&) = default;
};

struct NetworkCase {
    std::string name;
    double s_base = 100.0;
    double f_nominal = 60.0;
    std::vector<BusSpec> buses;
    std::vector<LineSpec> lines;
    std::vector<GeneratorSpec> generators;
    std::vector<LoadSpec> loads;
    std::vector<Event> events;
    std::map<std::string, std::vector<int>> subnets;

    [[nodiscard]] double omega_s() const { return 2.0 * std::numbers::pi * f_nominal; }

    [[nodiscard]] std::size_t bus_count() const { return buses.size(); }

    /// Position of a bus id in `buses`, or nullopt.
    [[nodiscard]] std::optional<std::size_t> find_bus(int id) const {
        for (std::size_t i = 0; i < buses.size(); ++i) {
            if (buses[i].id == id) return i;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t bus_index(int id) const {
        auto i = find_bus(id);
        if (!i) fail_input("unknown bus " + std::to_string(id));
        return *i;
    }

    [[nodiscard]] std::vector<int> bus_ids() const {
        std::vector<int> ids;
        ids.reserve(buses.size());
        for (const auto& b : buses) ids.push_back(b.id);
        return ids;
    }

    friend bool operator==(const NetworkCase&, const NetworkCase&) = default;
};

struct AdmittanceMatrix {
    Eigen::MatrixXcd entries;

    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
    [[nodiscard]] Complex operator()(std::size_t i, std::size_t j) const {
        return entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

struct PowerFlowSolution {
    std::vector<double> v;
    std::vector<double> theta;
    std::vector<double> p_inj;
    std::vector<double> q_inj;
    int iterations = 0;
    double max_mismatch = 0.0;
};

// =============================================================================
// Validation
// =============================================================================

/// Fills `subnets` from bus tags when absent and checks referential integrity.
inline void validate_case(NetworkCase& c) {
    if (!(c.s_base > 0.0)) fail_input("s_base must be positive");
    if (!(c.f_nominal > 0.0)) fail_input("f_nominal must be positive");
    if (c.buses.empty()) fail_input("case has no buses");

    std::set<int> ids;
    int slack_count = 0;
    for (const auto& b : c.buses) {
        if (!ids.insert(b.id).second) fail_input("duplicate bus id " + std::to_string(b.id));
        if (b.kind == BusKind::Slack) ++slack_count;
        if (b.kind != BusKind::PQ && !(b.v_set > 0.0)) {
            fail_input("bus " + std::to_string(b.id) + ": v_set must be positive");
        }
    }
    if (slack_count == 0) fail_input("no slack bus");
    if (slack_count > 1) fail_input("more than one slack bus");

    auto need_bus = [&](int id, const std::string& what) {
        if (!ids.contains(id)) fail_input(what + " references unknown bus " + std::to_string(id));
    };
    for (const auto& l : c.lines) {
        need_bus(l.from, "line");
        need_bus(l.to, "line");
        if (l.from == l.to) fail_input("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " connects a bus to itself");
        if (l.r == 0.0 && l.x == 0.0) fail_input("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " has zero impedance");
        if (!(l.tap > 0.0)) fail_input("line tap must be positive");
    }
    std::set<int> gen_buses;
    for (const auto& g : c.generators) {
        need_bus(g.bus, "generator");
        if (!gen_buses.insert(g.bus).second) fail_input("more than one generator at bus " + std::to_string(g.bus));
        if (!(g.h > 0.0)) fail_input("generator at bus " + std::to_string(g.bus) + ": H must be positive");
        if (g.d < 0.0) fail_input("generator at bus " + std::to_string(g.bus) + ": D must be non-negative");
        if (!(g.xdp > 0.0)) fail_input("generator at bus " + std::to_string(g.bus) + ": xdp must be positive");
        if (!(g.s_machine > 0.0)) fail_input("generator at bus " + std::to_string(g.bus) + ": s_machine must be positive");
        if (g.governor && !(g.governor->r_gov > 0.0 && g.governor->t_gov > 0.0)) {
            fail_input("generator at bus " + std::to_string(g.bus) + ": governor R_gov and T_gov must be positive");
        }
        if (g.exciter && !(g.exciter->t_ex > 0.0)) {
            fail_input("generator at bus " + std::to_string(g.bus) + ": exciter T_ex must be positive");
        }
    }
    for (const auto& b : c.buses) {
        if (b.kind != BusKind::PQ && !gen_buses.contains(b.id)) {
            fail_input("bus " + std::to_string(b.id) + " is slack/pv but has no generator");
        }
    }
    for (const auto& l : c.loads) need_bus(l.bus, "load");
    for (const auto& e : c.events) {
        if (e.time < 0.0) fail_input("event time must be non-negative");
        if (e.kind == EventKind::LineTrip) {
            bool found = std::any_of(c.lines.begin(), c.lines.end(), [&](const LineSpec& l) {
                return (l.from == e.from && l.to == e.to) || (l.from == e.to && l.to == e.from);
            });
            if (!found) fail_input("event references unknown line " + std::to_string(e.from) + "-" + std::to_string(e.to));
        } else {
            need_bus(e.bus, "event");
        }
    }

    if (c.subnets.empty()) {
        for (const auto& b : c.buses) {
            if (!b.subnet.empty()) c.subnets[b.subnet].push_back(b.id);
        }
    }
    std::set<int> covered;
    for (const auto& [name, members] : c.subnets) {
        if (members.empty()) fail_input("subnet " + name + " is empty");
        for (int id : members) {
            need_bus(id, "subnet " + name);
            if (!covered.insert(id).second) fail_input("bus " + std::to_string(id) + " belongs to more than one subnet");
        }
    }
    if (!c.subnets.empty() && covered.size() != c.buses.size()) {
        fail_input("subnets do not cover all buses");
    }
}

// =============================================================================
// Admittance assembly
// =============================================================================

/// Adds (sign = +1) or removes (sign = -1) one branch's pi-model contribution.
inline void stamp_line(Eigen::MatrixXcd& y, const NetworkCase& c, const LineSpec& l, double sign) {
    const auto i = static_cast<Eigen::Index>(c.bus_index(l.from));
    const auto j = static_cast<Eigen::Index>(c.bus_index(l.to));
    const Complex ys = 1.0 / Complex(l.r, l.x);
    const Complex ysh(0.0, 0.5 * l.b_sh);
    const double t = l.tap;
    y(i, i) += sign * (ys + ysh) / (t * t);
    y(j, j) += sign * (ys + ysh);
    y(i, j) -= sign * ys / t;
    y(j, i) -= sign * ys / t;
}

/// Bus admittance matrix. `in_service_override[k]`, when given, replaces the
/// status of line k.
inline AdmittanceMatrix build_ybus(const NetworkCase& c,
                                   const std::optional<std::vector<bool>>& in_service_override = std::nullopt) {
    std::set<int> ids;
    for (const auto& b : c.buses) {
        if (!ids.insert(b.id).second) fail_input("duplicate bus id " + std::to_string(b.id));
    }
    if (in_service_override && in_service_override->size() != c.lines.size()) {
        fail_input("line-status override has wrong length");
    }
    const auto n = static_cast<Eigen::Index>(c.buses.size());
    AdmittanceMatrix y{Eigen::MatrixXcd::Zero(n, n)};
    for (std::size_t k = 0; k < c.lines.size(); ++k) {
        const auto& l = c.lines[k];
        if (!ids.contains(l.from) || !ids.contains(l.to)) {
            fail_input("line " + std::to_string(l.from) + "-" + std::to_string(l.to) + " has a missing endpoint");
        }
        const bool on = in_service_override ? (*in_service_override)[k] : l.in_service;
        if (on) stamp_line(y.entries, c, l, 1.0);
    }
    return y;
}

// =============================================================================
// Power flow
// =============================================================================

namespace detail {

/// Bus indices unreachable from the slack over in-service lines.
inline std::vector<std::size_t> isolated_buses(const NetworkCase& c) {
    const std::size_t n = c.buses.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& l : c.lines) {
        if (!l.in_service) continue;
        auto i = c.bus_index(l.from);
        auto j = c.bus_index(l.to);
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> q;
    for (std::size_t i = 0; i < n; ++i) {
        if (c.buses[i].kind == BusKind::Slack) {
            seen[i] = true;
            q.push(i);
        }
    }
    while (!q.empty()) {
        auto i = q.front();
        q.pop();
        for (auto j : adj[i]) {
            if (!seen[j]) {
                seen[j] = true;
                q.push(j);
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) out.push_back(i);
    }
    return out;
}

inline void injections(const Eigen::MatrixXcd& y, const std::vector<double>& v,
                       const std::vector<double>& th, std::vector<double>& p, std::vector<double>& q) {
    const auto n = static_cast<Eigen::Index>(v.size());
    Eigen::VectorXcd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = std::polar(v[static_cast<std::size_t>(i)], th[static_cast<std::size_t>(i)]);
    Eigen::VectorXcd cur = y * u;
    p.assign(v.size(), 0.0);
    q.assign(v.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Complex s = u(i) * std::conj(cur(i));
        p[static_cast<std::size_t>(i)] = s.real();
        q[static_cast<std::size_t>(i)] = s.imag();
    }
}

}  // namespace detail

/// Scheduled net injections (generation minus load) per bus.
inline void scheduled_injections(const NetworkCase& c, std::vector<double>& p, std::vector<double>& q) {
    p.assign(c.buses.size(), 0.0);
    q.assign(c.buses.size(), 0.0);
    for (const auto& g : c.generators) p[c.bus_index(g.bus)] += g.p_set;
    for (const auto& l : c.loads) {
        p[c.bus_index(l.bus)] -= l.p;
        q[c.bus_index(l.bus)] -= l.q;
    }
}

/// Newton-Raphson power flow from a flat start. `iterations` counts mismatch
/// evaluations, so an already balanced network reports 1.
inline PowerFlowSolution solve_power_flow(const NetworkCase& c, double tol = 1e-8, int max_iter = 20) {
    const std::size_t n = c.buses.size();
    if (n == 0) fail_input("case has no buses");
    if (std::none_of(c.buses.begin(), c.buses.end(), [](const BusSpec& b) { return b.kind == BusKind::Slack; })) {
        fail_input("no slack bus");
    }
    if (auto iso = detail::isolated_buses(c); !iso.empty()) {
        fail_input("bus " + std::to_string(c.buses[iso.front()].id) + " is disconnected from the slack bus");
    }

    const Eigen::MatrixXcd y = build_ybus(c).entries;
    std::vector<double> p_spec, q_spec;
    scheduled_injections(c, p_spec, q_spec);

    std::vector<double> v(n, 1.0), th(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (c.buses[i].kind != BusKind::PQ) v[i] = c.buses[i].v_set;
    }

    // Unknown ordering: angles of non-slack buses, then magnitudes of pq buses.
    std::vector<std::size_t> ang_idx, mag_idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (c.buses[i].kind != BusKind::Slack) ang_idx.push_back(i);
        if (c.buses[i].kind == BusKind::PQ) mag_idx.push_back(i);
    }
    const auto na = static_cast<Eigen::Index>(ang_idx.size());
    const auto nm = static_cast<Eigen::Index>(mag_idx.size());

    PowerFlowSolution sol;
    std::vector<double> p, q;
    for (int it = 1; it <= max_iter; ++it) {
        detail::injections(y, v, th, p, q);
        Eigen::VectorXd mis(na + nm);
        for (Eigen::Index a = 0; a < na; ++a) mis(a) = p_spec[ang_idx[a]] - p[ang_idx[a]];
        for (Eigen::Index m = 0; m < nm; ++m) mis(na + m) = q_spec[mag_idx[m]] - q[mag_idx[m]];
        const double worst = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = it;
        sol.max_mismatch = worst;
        if (!std::isfinite(worst)) fail_numerical("power flow diverged (non-finite mismatch)");
        if (worst < tol) {
            sol.v = v;
            sol.theta = th;
            sol.p_inj = p;
            sol.q_inj = q;
            return sol;
        }

        // Polar Jacobian; magnitude columns are scaled by V (dX/d(ln V)).
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nm, na + nm);
        auto g = [&](std::size_t i, std::size_t k) { return y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)).real(); };
        auto b = [&](std::size_t i, std::size_t k) { return y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)).imag(); };
        auto dp_dth = [&](std::size_t i, std::size_t k) {
            if (i == k) return -q[i] - b(i, i) * v[i] * v[i];
            double t = th[i] - th[k];
            return v[i] * v[k] * (g(i, k) * std::sin(t) - b(i, k) * std::cos(t));
        };
        auto dq_dth = [&](std::size_t i, std::size_t k) {
            if (i == k) return p[i] - g(i, i) * v[i] * v[i];
            double t = th[i] - th[k];
            return -v[i] * v[k] * (g(i, k) * std::cos(t) + b(i, k) * std::sin(t));
        };
        auto dp_dlnv = [&](std::size_t i, std::size_t k) {
            if (i == k) return p[i] + g(i, i) * v[i] * v[i];
            double t = th[i] - th[k];
            return v[i] * v[k] * (g(i, k) * std::cos(t) + b(i, k) * std::sin(t));
        };
        auto dq_dlnv = [&](std::size_t i, std::size_t k) {
            if (i == k) return q[i] - b(i, i) * v[i] * v[i];
            double t = th[i] - th[k];
            return v[i] * v[k] * (g(i, k) * std::sin(t) - b(i, k) * std::cos(t));
        };
        for (Eigen::Index r = 0; r < na; ++r) {
            for (Eigen::Index s = 0; s < na; ++s) jac(r, s) = dp_dth(ang_idx[r], ang_idx[s]);
            for (Eigen::Index s = 0; s < nm; ++s) jac(r, na + s) = dp_dlnv(ang_idx[r], mag_idx[s]);
        }
        for (Eigen::Index r = 0; r < nm; ++r) {
            for (Eigen::Index s = 0; s < na; ++s) jac(na + r, s) = dq_dth(mag_idx[r], ang_idx[s]);
            for (Eigen::Index s = 0; s < nm; ++s) jac(na + r, na + s) = dq_dlnv(mag_idx[r], mag_idx[s]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) fail_numerical("power flow Jacobian is singular");
        Eigen::VectorXd dx = lu.solve(mis);
        for (Eigen::Index a = 0; a < na; ++a) th[ang_idx[a]] += dx(a);
        for (Eigen::Index m = 0; m < nm; ++m) v[mag_idx[m]] *= 1.0 + dx(na + m);
    }
    fail_numerical("power flow did not converge in " + std::to_string(max_iter) +
                   " iterations (max mismatch " + std::to_string(sol.max_mismatch) + " pu)");
}

// =============================================================================
// Network state and events
// =============================================================================

/// Mutable algebraic network seen by the dynamic simulation.
struct NetworkState {
    AdmittanceMatrix ybus;
    std::vector<Complex> load_admittance;   // per bus, constant impedance
    std::vector<Complex> shunt_admittance;  // per bus, from q_injection_step events
    std::vector<bool> line_in_service;
};

/// Constant-impedance equivalents y = (p - jq)/v^2 at the operating point.
inline std::vector<Complex> load_admittances(const NetworkCase& c, const PowerFlowSolution& pf) {
    std::vector<Complex> y(c.buses.size(), Complex{});
    for (const auto& l : c.loads) {
        auto i = c.bus_index(l.bus);
        y[i] += Complex(l.p, -l.q) / (pf.v[i] * pf.v[i]);
    }
    return y;
}

inline NetworkState make_network_state(const NetworkCase& c, const PowerFlowSolution& pf) {
    NetworkState s;
    s.ybus = build_ybus(c);
    s.load_admittance = load_admittances(c, pf);
    s.shunt_admittance.assign(c.buses.size(), Complex{});
    s.line_in_service.reserve(c.lines.size());
    for (const auto& l : c.lines) s.line_in_service.push_back(l.in_service);
    return s;
}

/// Applies one event to the network. Line trips subtract the branch stamp
/// from Y in place rather than reassembling.
inline NetworkState apply_event(const NetworkCase& c, NetworkState s, const Event& e) {
    switch (e.kind) {
        case EventKind::LoadScale: {
            auto i = c.find_bus(e.bus);
            if (!i) fail_input("unknown bus " + std::to_string(e.bus));
            Complex& y = s.load_admittance[*i];
            y = Complex(y.real() * e.p_factor, y.imag() * e.q_factor);
            break;
        }
        case EventKind::LineTrip: {
            bool done = false;
            for (std::size_t k = 0; k < c.lines.size() && !done; ++k) {
                const auto& l = c.lines[k];
                bool match = (l.from == e.from && l.to == e.to) || (l.from == e.to && l.to == e.from);
                if (match && s.line_in_service[k]) {
                    stamp_line(s.ybus.entries, c, l, -1.0);
                    s.line_in_service[k] = false;
                    done = true;
                }
            }
            if (!done) fail_input("unknown or already tripped line " + std::to_string(e.from) + "-" + std::to_string(e.to));
            break;
        }
        case EventKind::QInjectionStep: {
            auto i = c.find_bus(e.bus);
            if (!i) fail_input("unknown bus " + std::to_string(e.bus));
            // Shunt susceptance b injects b*v^2 of reactive power.
            s.shunt_admittance[*i] += Complex(0.0, e.dq);
            break;
        }
    }
    return s;
}

}  // namespace cfsync
