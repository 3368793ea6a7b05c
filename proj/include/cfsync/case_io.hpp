#pragma once

// =============================================================================
// cfsync - JSON case files
// =============================================================================
// The document mirrors NetworkCase field for field; see docs/case_format.md.
// Field errors are reported with a JSON-pointer-like path.
// =============================================================================

#include "cfsync/common.hpp"
#include "cfsync/grid_model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace cfsync {

using json = nlohmann::json;

namespace detail {

[[nodiscard]] inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) fail_input(path + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail_input(path + "." + key + ": missing field");
    return *it;
}

[[nodiscard]] inline double get_number(const json& j, const std::string& key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_number()) fail_input(path + "." + key + ": expected a number");
    return v.get<double>();
}

[[nodiscard]] inline double get_number_or(const json& j, const std::string& key, const std::string& path,
                                          double fallback) {
    if (!j.contains(key)) return fallback;
    return get_number(j, key, path);
}

[[nodiscard]] inline int get_int(const json& j, const std::string& key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_number_integer()) fail_input(path + "." + key + ": expected an integer");
    return v.get<int>();
}

[[nodiscard]] inline std::string get_string_or(const json& j, const std::string& key, const std::string& path,
                                               const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_string()) fail_input(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

[[nodiscard]] inline const json& get_array(const json& j, const std::string& key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_array()) fail_input(path + "." + key + ": expected an array");
    return v;
}

[[nodiscard]] inline std::string item(const std::string& path, const std::string& key, std::size_t i) {
    return path + "." + key + "[" + std::to_string(i) + "]";
}

}  // namespace detail

[[nodiscard]] inline const char* to_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::PV: return "pv";
        case BusKind::PQ: return "pq";
    }
    return "pq";
}

[[nodiscard]] inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::LoadScale: return "load_scale";
        case EventKind::LineTrip: return "line_trip";
        case EventKind::QInjectionStep: return "q_injection_step";
    }
    return "load_scale";
}

[[nodiscard]] inline NetworkCase case_from_json(const json& j) {
    using namespace detail;
    const std::string root = "$";
    if (!j.is_object()) fail_input("$: expected an object");
    NetworkCase c;
    c.name = get_string_or(j, "name", root, "");
    c.s_base = get_number(j, "s_base", root);
    c.f_nominal = get_number_or(j, "f_nominal", root, 60.0);

    const auto& buses = get_array(j, "buses", root);
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const auto p = item(root, "buses", i);
        const auto& b = buses[i];
        BusSpec s;
        s.id = get_int(b, "id", p);
        const auto kind = get_string_or(b, "kind", p, "pq");
        if (kind == "slack") s.kind = BusKind::Slack;
        else if (kind == "pv") s.kind = BusKind::PV;
        else if (kind == "pq") s.kind = BusKind::PQ;
        else fail_input(p + ".kind: expected one of slack, pv, pq");
        s.base_kv = get_number_or(b, "base_kv", p, 1.0);
        s.v_set = get_number_or(b, "v_set", p, 1.0);
        s.subnet = get_string_or(b, "subnet", p, "");
        c.buses.push_back(s);
    }

    if (j.contains("lines")) {
        const auto& lines = get_array(j, "lines", root);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto p = item(root, "lines", i);
            const auto& l = lines[i];
            LineSpec s;
            s.from = get_int(l, "from", p);
            s.to = get_int(l, "to", p);
            s.r = get_number_or(l, "r", p, 0.0);
            s.x = get_number(l, "x", p);
            s.b_sh = get_number_or(l, "b_sh", p, 0.0);
            s.tap = get_number_or(l, "tap", p, 1.0);
            if (l.contains("in_service")) {
                if (!l.at("in_service").is_boolean()) fail_input(p + ".in_service: expected a boolean");
                s.in_service = l.at("in_service").get<bool>();
            }
            c.lines.push_back(s);
        }
    }

    if (j.contains("generators")) {
        const auto& gens = get_array(j, "generators", root);
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const auto p = item(root, "generators", i);
            const auto& g = gens[i];
            GeneratorSpec s;
            s.bus = get_int(g, "bus", p);
            s.p_set = get_number_or(g, "p_set", p, 0.0);
            s.h = get_number(g, "H", p);
            s.d = get_number_or(g, "D", p, 0.0);
            s.xdp = get_number(g, "xdp", p);
            s.s_machine = get_number_or(g, "s_machine", p, c.s_base);
            if (g.contains("governor") && !g.at("governor").is_null()) {
                const auto& gv = g.at("governor");
                s.governor = GovernorSpec{get_number(gv, "R_gov", p + ".governor"), get_number(gv, "T_gov", p + ".governor")};
            }
            if (g.contains("exciter") && !g.at("exciter").is_null()) {
                const auto& ex = g.at("exciter");
                ExciterSpec e;
                e.k_ex = get_number(ex, "K_ex", p + ".exciter");
                e.t_ex = get_number(ex, "T_ex", p + ".exciter");
                if (ex.contains("v_ref") && !ex.at("v_ref").is_null()) e.v_ref = get_number(ex, "v_ref", p + ".exciter");
                s.exciter = e;
            }
            c.generators.push_back(s);
        }
    }

    if (j.contains("loads")) {
        const auto& loads = get_array(j, "loads", root);
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const auto p = item(root, "loads", i);
            c.loads.push_back(LoadSpec{get_int(loads[i], "bus", p), get_number_or(loads[i], "p", p, 0.0),
                                       get_number_or(loads[i], "q", p, 0.0)});
        }
    }

    if (j.contains("events")) {
        const auto& events = get_array(j, "events", root);
        for (std::size_t i = 0; i < events.size(); ++i) {
            const auto p = item(root, "events", i);
            const auto& e = events[i];
            Event ev;
            ev.time = get_number(e, "time", p);
            const auto kind = get_string_or(e, "kind", p, "");
            ev.description = get_string_or(e, "description", p, "");
            if (kind == "load_scale") {
                ev.kind = EventKind::LoadScale;
                ev.bus = get_int(e, "bus", p);
                ev.p_factor = get_number(e, "p_factor", p);
                ev.q_factor = get_number_or(e, "q_factor", p, ev.p_factor);
            } else if (kind == "line_trip") {
                ev.kind = EventKind::LineTrip;
                ev.from = get_int(e, "from", p);
                ev.to = get_int(e, "to", p);
            } else if (kind == "q_injection_step") {
                ev.kind = EventKind::QInjectionStep;
                ev.bus = get_int(e, "bus", p);
                ev.dq = get_number(e, "dq", p);
            } else {
                fail_input(p + ".kind: expected one of load_scale, line_trip, q_injection_step");
            }
            c.events.push_back(ev);
        }
    }

    if (j.contains("subnets")) {
        const auto& sn = require(j, "subnets", root);
        if (!sn.is_object()) fail_input("$.subnets: expected an object");
        for (const auto& [name, members] : sn.items()) {
            if (!members.is_array()) fail_input("$.subnets." + name + ": expected an array of bus ids");
            auto& dst = c.subnets[name];
            for (const auto& m : members) {
                if (!m.is_number_integer()) fail_input("$.subnets." + name + ": expected integer bus ids");
                dst.push_back(m.get<int>());
            }
        }
    }
    validate_case(c);
    return c;
}

[[nodiscard]] inline json case_to_json(const NetworkCase& c) {
    json j;
    j["name"] = c.name;
    j["s_base"] = c.s_base;
    j["f_nominal"] = c.f_nominal;
    j["buses"] = json::array();
    for (const auto& b : c.buses) {
        j["buses"].push_back({{"id", b.id}, {"kind", to_string(b.kind)}, {"base_kv", b.base_kv},
                              {"v_set", b.v_set}, {"subnet", b.subnet}});
    }
    j["lines"] = json::array();
    for (const auto& l : c.lines) {
        j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}, {"b_sh", l.b_sh},
                              {"tap", l.tap}, {"in_service", l.in_service}});
    }
    j["generators"] = json::array();
    for (const auto& g : c.generators) {
        json gj{{"bus", g.bus}, {"p_set", g.p_set}, {"H", g.h}, {"D", g.d}, {"xdp", g.xdp}, {"s_machine", g.s_machine}};
        if (g.governor) gj["governor"] = {{"R_gov", g.governor->r_gov}, {"T_gov", g.governor->t_gov}};
        if (g.exciter) {
            gj["exciter"] = {{"K_ex", g.exciter->k_ex}, {"T_ex", g.exciter->t_ex}};
            if (g.exciter->v_ref) gj["exciter"]["v_ref"] = *g.exciter->v_ref;
        }
        j["generators"].push_back(gj);
    }
    j["loads"] = json::array();
    for (const auto& l : c.loads) j["loads"].push_back({{"bus", l.bus}, {"p", l.p}, {"q", l.q}});
    j["events"] = json::array();
    for (const auto& e : c.events) {
        json ej{{"time", e.time}, {"kind", to_string(e.kind)}, {"description", e.description}};
        switch (e.kind) {
            case EventKind::LoadScale:
                ej["bus"] = e.bus;
                ej["p_factor"] = e.p_factor;
                ej["q_factor"] = e.q_factor;
                break;
            case EventKind::LineTrip:
                ej["from"] = e.from;
                ej["to"] = e.to;
                break;
            case EventKind::QInjectionStep:
                ej["bus"] = e.bus;
                ej["dq"] = e.dq;
                break;
        }
        j["events"].push_back(ej);
    }
    j["subnets"] = json::object();
    for (const auto& [name, members] : c.subnets) j["subnets"][name] = members;
    return j;
}

/// Reads a file into memory; missing files are input errors.
[[nodiscard]] inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_input("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline NetworkCase parse_case(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail_input(e.what());
    }
    return case_from_json(j);
}

[[nodiscard]] inline NetworkCase load_case(const std::string& path) {
    try {
        return parse_case(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Input) fail_input(path + ": " + e.what());
        throw;
    }
}

}  // namespace cfsync
