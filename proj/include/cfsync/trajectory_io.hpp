#pragma once

// =============================================================================
// cfsync - CSV time series
// =============================================================================
// Trajectory file:
//   # cfsync trajectory v1
//   # frame: synchronous
//   # f_nominal: 60
//   # events: 2 [more times, space separated]
//   t,v_1,theta_1,...,v_n,theta_n
//   one row per sample, %.17g decimals
// Generator file (written next to it):
//   # cfsync generators v1
//   t,delta_<bus>,omega_<bus>,e_q_<bus>,p_m_<bus>,p_e_<bus>,q_e_<bus>,...
// =============================================================================

#include "cfsync/common.hpp"
#include "cfsync/dynamics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace cfsync {

/// Shortest text that round-trips is not required; 17 significant digits is.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

[[nodiscard]] inline double parse_double(std::string_view s, const std::string& where) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail_input(where + ": cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

[[nodiscard]] inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto p = line.find(sep, start);
        if (p == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "# cfsync trajectory v1\n";
    os << "# frame: synchronous\n";
    os << "# f_nominal: " << format_double(tr.f_nominal) << "\n";
    os << "# events:";
    for (double t : tr.event_times) os << ' ' << format_double(t);
    os << "\n";
    os << "t";
    for (int id : tr.bus_ids) os << ",v_" << id << ",theta_" << id;
    os << "\n";
    std::string row;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        row = format_double(tr.times[k]);
        for (std::size_t b = 0; b < tr.bus_ids.size(); ++b) {
            row += ',';
            row += format_double(tr.v[b][k]);
            row += ',';
            row += format_double(tr.theta[b][k]);
        }
        row += '\n';
        os << row;
    }
}

inline void write_generator_csv(std::ostream& os, const Trajectory& tr) {
    os << "# cfsync generators v1\n";
    os << "t";
    for (int bus : tr.gen_buses) {
        os << ",delta_" << bus << ",omega_" << bus << ",e_q_" << bus << ",p_m_" << bus << ",p_e_" << bus << ",q_e_"
           << bus;
    }
    os << "\n";
    std::string row;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        row = format_double(tr.times[k]);
        for (std::size_t g = 0; g < tr.gen_buses.size(); ++g) {
            const auto& s = tr.gen_states[g][k];
            for (double x : {s.delta, s.omega, s.e_q, s.p_m, tr.p_e[g][k], tr.q_e[g][k]}) {
                row += ',';
                row += format_double(x);
            }
        }
        row += '\n';
        os << row;
    }
}

[[nodiscard]] inline Trajectory parse_trajectory_csv(std::istream& in, const std::string& name = "trajectory") {
    Trajectory tr;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        const std::string where = name + ":" + std::to_string(line_no);
        if (sv.front() == '#') {
            sv.remove_prefix(1);
            sv = detail::trim(sv);
            if (sv.starts_with("events:")) {
                std::istringstream ss{std::string(sv.substr(7))};
                std::string tok;
                while (ss >> tok) tr.event_times.push_back(detail::parse_double(tok, where));
            } else if (sv.starts_with("f_nominal:")) {
                tr.f_nominal = detail::parse_double(sv.substr(10), where);
            }
            continue;
        }
        if (!have_header) {
            const auto cols = detail::split(sv, ',');
            if (cols.empty() || detail::trim(cols[0]) != "t" || cols.size() % 2 != 1) {
                fail_input(where + ": expected header t,v_<id>,theta_<id>,...");
            }
            for (std::size_t c = 1; c < cols.size(); c += 2) {
                const auto vcol = detail::trim(cols[c]);
                const auto tcol = detail::trim(cols[c + 1]);
                if (!vcol.starts_with("v_") || !tcol.starts_with("theta_") || vcol.substr(2) != tcol.substr(6)) {
                    fail_input(where + ": column pair " + std::string(vcol) + "," + std::string(tcol) + " is malformed");
                }
                tr.bus_ids.push_back(static_cast<int>(detail::parse_double(vcol.substr(2), where)));
            }
            tr.v.assign(tr.bus_ids.size(), {});
            tr.theta.assign(tr.bus_ids.size(), {});
            have_header = true;
            continue;
        }
        const auto cols = detail::split(sv, ',');
        if (cols.size() != 1 + 2 * tr.bus_ids.size()) fail_input(where + ": wrong number of columns");
        const double t = detail::parse_double(cols[0], where);
        if (!tr.times.empty() && !(t > tr.times.back())) fail_input(where + ": times must be strictly increasing");
        tr.times.push_back(t);
        for (std::size_t b = 0; b < tr.bus_ids.size(); ++b) {
            tr.v[b].push_back(detail::parse_double(cols[1 + 2 * b], where));
            tr.theta[b].push_back(detail::parse_double(cols[2 + 2 * b], where));
        }
    }
    if (!have_header) fail_input(name + ": missing header line");
    return tr;
}

/// Fills the generator series of `tr` from a generator CSV with the same time base.
inline void parse_generator_csv(std::istream& in, Trajectory& tr, const std::string& name = "generators") {
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const std::string where = name + ":" + std::to_string(line_no);
        const auto cols = detail::split(sv, ',');
        if (!have_header) {
            if (cols.empty() || detail::trim(cols[0]) != "t" || (cols.size() - 1) % 6 != 0) {
                fail_input(where + ": expected header t,delta_<bus>,omega_<bus>,e_q_<bus>,p_m_<bus>,p_e_<bus>,q_e_<bus>,...");
            }
            tr.gen_buses.clear();
            for (std::size_t c = 1; c < cols.size(); c += 6) {
                const auto d = detail::trim(cols[c]);
                if (!d.starts_with("delta_")) fail_input(where + ": malformed column " + std::string(d));
                tr.gen_buses.push_back(static_cast<int>(detail::parse_double(d.substr(6), where)));
            }
            const std::size_t ng = tr.gen_buses.size();
            tr.gen_states.assign(ng, {});
            tr.p_e.assign(ng, {});
            tr.q_e.assign(ng, {});
            have_header = true;
            continue;
        }
        if (cols.size() != 1 + 6 * tr.gen_buses.size()) fail_input(where + ": wrong number of columns");
        const double t = detail::parse_double(cols[0], where);
        if (row >= tr.times.size() || t != tr.times[row]) fail_input(where + ": time base differs from the trajectory");
        for (std::size_t g = 0; g < tr.gen_buses.size(); ++g) {
            double x[6];
            for (std::size_t c = 0; c < 6; ++c) x[c] = detail::parse_double(cols[1 + 6 * g + c], where);
            tr.gen_states[g].push_back({x[0], x[1], x[2], x[3]});
            tr.p_e[g].push_back(x[4]);
            tr.q_e[g].push_back(x[5]);
        }
        ++row;
    }
    if (!have_header) fail_input(name + ": missing header line");
    if (row != tr.times.size()) fail_input(name + ": row count differs from the trajectory");
}

[[nodiscard]] inline Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open " + path);
    return parse_trajectory_csv(in, path);
}

inline void load_generator_series(const std::string& path, Trajectory& tr) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open " + path);
    parse_generator_csv(in, tr, path);
}

}  // namespace cfsync
