#include "cavsim/network.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cavsim {

using nlohmann::json;

const Edge& NetworkGraph::edge(EdgeId id) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), id,
                               [](const Edge& e, EdgeId v) { return e.id < v; });
    if (it == edges.end() || it->id != id)
        throw std::out_of_range("unknown edge id " + std::to_string(id));
    return *it;
}

bool NetworkGraph::has_node(NodeId id) const {
    return std::binary_search(nodes.begin(), nodes.end(), id);
}

const std::vector<std::pair<EdgeId, NodeId>>& NetworkGraph::neighbors(NodeId node) const {
    auto it = adjacency.find(node);
    if (it == adjacency.end())
        throw std::out_of_range("unknown node id " + std::to_string(node));
    return it->second;
}

const ControlZoneSpec* Scenario::zone_at(NodeId node) const {
    auto it = std::lower_bound(zones.begin(), zones.end(), node,
                               [](const ControlZoneSpec& z, NodeId v) { return z.node < v; });
    if (it == zones.end() || it->node != node) return nullptr;
    return &*it;
}

ScenarioValidationError::ScenarioValidationError(std::vector<std::string> problems_)
    : std::runtime_error(problems_.empty() ? "invalid scenario" : problems_.front()),
      problems(std::move(problems_)) {}

namespace {

double require_number(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ScenarioParseError(ctx + ": missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

VehicleLimits parse_limits(const json& j, const VehicleLimits& defaults) {
    VehicleLimits lim = defaults;
    if (j.contains("u_min_mps2")) lim.u_min = j.at("u_min_mps2").get<double>();
    if (j.contains("u_max_mps2")) lim.u_max = j.at("u_max_mps2").get<double>();
    if (j.contains("v_min_mps")) lim.v_min = j.at("v_min_mps").get<double>();
    if (j.contains("v_max_mps")) lim.v_max = j.at("v_max_mps").get<double>();
    return lim;
}

// Free-flow reachability over the directed graph, used to validate demand.
bool reachable(const NetworkGraph& g, NodeId origin, NodeId destination) {
    std::set<NodeId> seen{origin};
    std::queue<NodeId> frontier;
    frontier.push(origin);
    while (!frontier.empty()) {
        NodeId u = frontier.front();
        frontier.pop();
        if (u == destination) return true;
        auto it = g.adjacency.find(u);
        if (it == g.adjacency.end()) continue; // dangling reference, reported elsewhere
        for (const auto& [e, v] : it->second)
            if (seen.insert(v).second) frontier.push(v);
    }
    return false;
}

void validate(const Scenario& s) {
    std::vector<std::string> problems;
    const auto& g = s.graph;

    std::set<NodeId> node_ids(g.nodes.begin(), g.nodes.end());
    if (node_ids.size() != g.nodes.size())
        problems.push_back("duplicate node ids in 'nodes'");

    std::set<EdgeId> edge_ids;
    for (const Edge& e : g.edges) {
        const std::string tag = "edge " + std::to_string(e.id);
        if (!edge_ids.insert(e.id).second)
            problems.push_back(tag + ": duplicate edge id");
        if (!node_ids.count(e.from))
            problems.push_back(tag + ": references unknown node " + std::to_string(e.from));
        if (!node_ids.count(e.to))
            problems.push_back(tag + ": references unknown node " + std::to_string(e.to));
        if (e.length <= 0.0) problems.push_back(tag + ": length_m must be > 0");
        if (e.free_flow_speed <= 0.0) problems.push_back(tag + ": vff_mps must be > 0");
        if (e.fd.q_c <= 0.0) problems.push_back(tag + ": fd.qc_vps must be > 0");
        if (!(e.fd.k_c > 0.0 && e.fd.k_c < e.fd.k_j))
            problems.push_back(tag + ": fd requires 0 < kc_vpm < kj_vpm");
    }

    for (const ControlZoneSpec& z : s.zones) {
        const std::string tag = "zone at node " + std::to_string(z.node);
        if (!node_ids.count(z.node))
            problems.push_back(tag + ": unknown node");
        if (z.zone_length <= 0.0) problems.push_back(tag + ": zone_length_m must be > 0");
        for (const ConflictPoint& c : z.conflicts) {
            for (EdgeId a : {c.approach_a, c.approach_b}) {
                if (!edge_ids.count(a)) {
                    problems.push_back(tag + ": conflict references unknown edge " +
                                       std::to_string(a));
                    continue;
                }
                if (g.edge(a).to != z.node)
                    problems.push_back(tag + ": edge " + std::to_string(a) +
                                       " is not an approach of this node");
            }
            for (double d : {c.dist_a, c.dist_b})
                if (!(d > 0.0 && d < z.zone_length))
                    problems.push_back(tag + ": conflict distance " + std::to_string(d) +
                                       " outside (0, zone_length)");
        }
    }

    int di = 0;
    for (const DemandEntry& d : s.demand) {
        const std::string tag = "demand[" + std::to_string(di++) + "]";
        if (d.origin == d.destination)
            problems.push_back(tag + ": origin equals destination");
        if (d.entry_time < 0.0) problems.push_back(tag + ": entry_time_s must be >= 0");
        if (!node_ids.count(d.origin) || !node_ids.count(d.destination)) {
            problems.push_back(tag + ": unknown origin or destination node");
            continue;
        }
        if (!reachable(g, d.origin, d.destination))
            problems.push_back(tag + ": destination " + std::to_string(d.destination) +
                               " unreachable from origin " + std::to_string(d.origin));
    }

    const auto& lim = s.coordination.limits;
    if (!(lim.u_min < 0.0 && lim.u_max > 0.0))
        problems.push_back("coordination: requires u_min < 0 < u_max");
    if (!(lim.v_min > 0.0 && lim.v_min <= lim.v_max))
        problems.push_back("coordination: requires 0 < v_min <= v_max");
    const auto& saf = s.coordination.safety;
    if (!(saf.gamma_s > 0.0 && saf.phi > 0.0 && saf.t_h > 0.0))
        problems.push_back("coordination: safety parameters must be > 0");
    if (s.routing.policy.T_thres <= 0.0)
        problems.push_back("routing: T_thres_s must be > 0");
    if (s.routing.policy.gamma_w < 0.0)
        problems.push_back("routing: gamma_w must be >= 0");
    if (s.sim.step <= 0.0) problems.push_back("sim: step_s must be > 0");
    if (s.sim.sensor_period < s.sim.step)
        problems.push_back("sim: sensor_period_s must be >= step_s");

    if (!problems.empty()) throw ScenarioValidationError(std::move(problems));
}

} // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ScenarioParseError(std::string("scenario parse error: ") + e.what());
    }

    Scenario s;
    try {
        for (const auto& jn : j.value("nodes", json::array()))
            s.graph.nodes.push_back(jn.is_object() ? jn.at("id").get<NodeId>()
                                                   : jn.get<NodeId>());
        std::sort(s.graph.nodes.begin(), s.graph.nodes.end());

        for (const auto& je : j.value("edges", json::array())) {
            Edge e;
            e.id = je.at("id").get<EdgeId>();
            const std::string ctx = "edge " + std::to_string(e.id);
            e.from = je.at("from").get<NodeId>();
            e.to = je.at("to").get<NodeId>();
            e.length = require_number(je, "length_m", ctx);
            e.free_flow_speed = require_number(je, "vff_mps", ctx);
            const auto& jf = je.at("fd");
            e.fd.q_c = require_number(jf, "qc_vps", ctx);
            e.fd.k_c = require_number(jf, "kc_vpm", ctx);
            e.fd.k_j = require_number(jf, "kj_vpm", ctx);
            s.graph.edges.push_back(e);
        }
        std::sort(s.graph.edges.begin(), s.graph.edges.end(),
                  [](const Edge& a, const Edge& b) { return a.id < b.id; });

        for (NodeId n : s.graph.nodes) s.graph.adjacency[n] = {};
        for (const Edge& e : s.graph.edges)
            if (s.graph.adjacency.count(e.from))
                s.graph.adjacency[e.from].emplace_back(e.id, e.to);
        for (auto& [n, adj] : s.graph.adjacency) std::sort(adj.begin(), adj.end());

        for (const auto& jz : j.value("zones", json::array())) {
            ControlZoneSpec z;
            z.node = jz.at("node").get<NodeId>();
            z.zone_length = require_number(jz, "zone_length_m",
                                           "zone at node " + std::to_string(z.node));
            for (const auto& jc : jz.value("conflicts", json::array())) {
                ConflictPoint c;
                c.approach_a = jc.at("approach_a").get<EdgeId>();
                c.approach_b = jc.at("approach_b").get<EdgeId>();
                c.dist_a = jc.at("dist_a_m").get<double>();
                c.dist_b = jc.at("dist_b_m").get<double>();
                z.conflicts.push_back(c);
            }
            s.zones.push_back(std::move(z));
        }
        std::sort(s.zones.begin(), s.zones.end(),
                  [](const ControlZoneSpec& a, const ControlZoneSpec& b) {
                      return a.node < b.node;
                  });

        if (j.contains("coordination")) {
            const auto& jc = j.at("coordination");
            s.coordination.limits = parse_limits(jc, s.coordination.limits);
            if (jc.contains("gamma_s_m")) s.coordination.safety.gamma_s = jc.at("gamma_s_m");
            if (jc.contains("phi_s")) s.coordination.safety.phi = jc.at("phi_s");
            if (jc.contains("t_h_s")) s.coordination.safety.t_h = jc.at("t_h_s");
            if (jc.contains("e_max_s")) s.coordination.uncertainty.e_max = jc.at("e_max_s");
            if (jc.contains("f_max_m")) s.coordination.uncertainty.f_max = jc.at("f_max_m");
            if (jc.contains("g_max_mps")) s.coordination.uncertainty.g_max = jc.at("g_max_mps");
            if (jc.contains("w_time")) s.coordination.solver.w_time = jc.at("w_time");
            if (jc.contains("dt_s")) s.coordination.solver.dt = jc.at("dt_s");
            if (jc.contains("sample_step_s")) s.coordination.solver.sample_step = jc.at("sample_step_s");
        }

        for (const auto& jd : j.value("demand", json::array())) {
            DemandEntry d;
            d.origin = jd.at("origin").get<NodeId>();
            d.destination = jd.at("destination").get<NodeId>();
            d.entry_time = jd.at("entry_time_s").get<double>();
            if (jd.contains("limits"))
                d.limits = parse_limits(jd.at("limits"), s.coordination.limits);
            s.demand.push_back(d);
        }
        std::stable_sort(s.demand.begin(), s.demand.end(),
                         [](const DemandEntry& a, const DemandEntry& b) {
                             return std::tie(a.entry_time, a.origin, a.destination) <
                                    std::tie(b.entry_time, b.origin, b.destination);
                         });

        if (j.contains("routing")) {
            const auto& jr = j.at("routing");
            if (jr.contains("w_base_mode")) {
                const std::string mode = jr.at("w_base_mode");
                if (mode == "free_flow")
                    s.routing.policy.w_base_mode = WBaseMode::FreeFlowTravelTime;
                else if (mode == "constant")
                    s.routing.policy.w_base_mode = WBaseMode::ConstantOne;
                else
                    throw ScenarioParseError("routing.w_base_mode must be 'free_flow' or 'constant'");
            }
            if (jr.contains("T_thres_s")) s.routing.policy.T_thres = jr.at("T_thres_s");
            if (jr.contains("gamma_w")) s.routing.policy.gamma_w = jr.at("gamma_w");
            if (jr.contains("replan_period_s")) s.routing.rd.replan_period = jr.at("replan_period_s");
            if (jr.contains("tc_change_threshold_s"))
                s.routing.rd.tc_change_threshold = jr.at("tc_change_threshold_s");
            if (jr.contains("rate_window_s")) s.routing.rd.rate_window = jr.at("rate_window_s");
        }

        if (j.contains("sim")) {
            const auto& js = j.at("sim");
            if (js.contains("step_s")) s.sim.step = js.at("step_s");
            if (js.contains("horizon_s")) s.sim.horizon = js.at("horizon_s");
            if (js.contains("sensor_period_s")) s.sim.sensor_period = js.at("sensor_period_s");
            if (js.contains("noise_eps_max")) s.sim.noise_eps_max = js.at("noise_eps_max");
            if (js.contains("seed")) s.sim.seed = js.at("seed").get<std::uint64_t>();
        }
    } catch (const json::exception& e) {
        throw ScenarioParseError(std::string("scenario parse error: ") + e.what());
    }

    validate(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
    json j;
    j["nodes"] = json::array();
    for (NodeId n : s.graph.nodes) j["nodes"].push_back(json{{"id", n}});
    j["edges"] = json::array();
    for (const Edge& e : s.graph.edges)
        j["edges"].push_back(json{{"id", e.id},
                                  {"from", e.from},
                                  {"to", e.to},
                                  {"length_m", e.length},
                                  {"vff_mps", e.free_flow_speed},
                                  {"fd", {{"qc_vps", e.fd.q_c},
                                          {"kc_vpm", e.fd.k_c},
                                          {"kj_vpm", e.fd.k_j}}}});
    j["zones"] = json::array();
    for (const ControlZoneSpec& z : s.zones) {
        json jz{{"node", z.node}, {"zone_length_m", z.zone_length}};
        jz["conflicts"] = json::array();
        for (const ConflictPoint& c : z.conflicts)
            jz["conflicts"].push_back(json{{"approach_a", c.approach_a},
                                           {"approach_b", c.approach_b},
                                           {"dist_a_m", c.dist_a},
                                           {"dist_b_m", c.dist_b}});
        j["zones"].push_back(std::move(jz));
    }
    j["demand"] = json::array();
    for (const DemandEntry& d : s.demand) {
        json jd{{"origin", d.origin},
                {"destination", d.destination},
                {"entry_time_s", d.entry_time}};
        if (d.limits)
            jd["limits"] = json{{"u_min_mps2", d.limits->u_min},
                                {"u_max_mps2", d.limits->u_max},
                                {"v_min_mps", d.limits->v_min},
                                {"v_max_mps", d.limits->v_max}};
        j["demand"].push_back(std::move(jd));
    }
    j["routing"] = json{
        {"w_base_mode",
         s.routing.policy.w_base_mode == WBaseMode::FreeFlowTravelTime ? "free_flow" : "constant"},
        {"T_thres_s", s.routing.policy.T_thres},
        {"gamma_w", s.routing.policy.gamma_w},
        {"replan_period_s", s.routing.rd.replan_period},
        {"tc_change_threshold_s", s.routing.rd.tc_change_threshold},
        {"rate_window_s", s.routing.rd.rate_window}};
    j["coordination"] = json{{"u_min_mps2", s.coordination.limits.u_min},
                             {"u_max_mps2", s.coordination.limits.u_max},
                             {"v_min_mps", s.coordination.limits.v_min},
                             {"v_max_mps", s.coordination.limits.v_max},
                             {"gamma_s_m", s.coordination.safety.gamma_s},
                             {"phi_s", s.coordination.safety.phi},
                             {"t_h_s", s.coordination.safety.t_h},
                             {"e_max_s", s.coordination.uncertainty.e_max},
                             {"f_max_m", s.coordination.uncertainty.f_max},
                             {"g_max_mps", s.coordination.uncertainty.g_max},
                             {"w_time", s.coordination.solver.w_time},
                             {"dt_s", s.coordination.solver.dt},
                             {"sample_step_s", s.coordination.solver.sample_step}};
    j["sim"] = json{{"step_s", s.sim.step},
                    {"horizon_s", s.sim.horizon},
                    {"sensor_period_s", s.sim.sensor_period},
                    {"noise_eps_max", s.sim.noise_eps_max},
                    {"seed", s.sim.seed}};
    return j.dump(2);
}

std::string scenario_hash(const Scenario& s) {
    const std::string text = serialize_scenario(s);
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace cavsim
