#include "cavsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace cavsim {

using nlohmann::json;

std::string metrics_to_json(const MetricsReport& report) {
    json j;
    j["scenario_hash"] = report.scenario_hash;
    j["seed"] = report.seed;
    j["ttt"] = report.ttt;
    j["total_delay"] = report.total_delay;
    j["total_energy"] = report.total_energy;
    j["time_above_critical"] = report.time_above_critical;
    j["spawned"] = report.spawned;
    j["completed"] = report.completed;
    j["active"] = report.active;
    j["incomplete"] = report.incomplete;
    j["vehicles"] = json::array();
    for (const VehicleRecord& v : report.vehicles) {
        json jv{{"id", v.id},
                {"entry_time", v.entry_time},
                {"exit_time", v.exit_time},
                {"free_flow_tt", v.free_flow_tt},
                {"zone_energy", v.zone_energy},
                {"distance", v.distance},
                {"completed", v.completed},
                {"route", v.route_history}};
        j["vehicles"].push_back(std::move(jv));
    }
    return j.dump(2);
}

World::World(const Scenario& scenario, ControllerKind controller,
             const SimConfig& config, bool audit, bool dump_trajectories)
    : scenario_(scenario),
      controller_(controller),
      config_(config),
      audit_(audit),
      dump_traj_(dump_trajectories),
      rng_(config.seed),
      tightened_(tightened_constraints(scenario.coordination.safety,
                                       scenario.coordination.limits,
                                       scenario.coordination.uncertainty)) {
    for (const Edge& e : scenario_.graph.edges) {
        EdgeTrafficState st;
        st.edge = e.id;
        edge_states_[e.id] = st;
        edge_counts_[e.id] = 0;
        free_flow_tt_weights_[e.id] = e.free_flow_travel_time();
    }
    current_weights_ = free_flow_weights(scenario_.graph, scenario_.routing.policy);

    CavId next_id = 1;
    for (const DemandEntry& d : scenario_.demand) {
        Vehicle v;
        v.id = next_id++;
        v.demand = d;
        v.limits = d.limits.value_or(scenario_.coordination.limits);
        v.rec.id = v.id;
        vehicles_.push_back(std::move(v));
    }
}

double World::edge_density(EdgeId e) const {
    return edge_counts_.at(e) / scenario_.graph.edge(e).length;
}

double World::zone_boundary(const Edge& e, const ControlZoneSpec& zone) const {
    return std::max(0.0, e.length - zone.zone_length);
}

std::map<EdgeId, double> World::sense_densities() const {
    std::map<EdgeId, double> out;
    for (const auto& [e, n] : edge_counts_) out[e] = n / scenario_.graph.edge(e).length;
    return out;
}

Route World::route_for_entry(NodeId origin, NodeId destination) const {
    auto route = shortest_path(scenario_.graph, current_weights_, origin, destination);
    if (!route) throw std::logic_error("validated demand became unreachable");
    return *route;
}

void World::sense_and_control() {
    const double window = scenario_.routing.rd.rate_window;
    for (const Edge& e : scenario_.graph.edges) {
        const double k_true = edge_density(e.id);
        double k_meas = k_true;
        if (config_.noise_eps_max > 0.0) {
            std::uniform_real_distribution<double> noise(-config_.noise_eps_max,
                                                         config_.noise_eps_max);
            k_meas = std::clamp(k_true + noise(rng_), 0.0, e.fd.k_j);
        }
        EdgeTrafficState& st = edge_states_[e.id];
        st.k = k_meas;
        st.push_sample(t_, k_meas);
        st.rate = estimate_rate(st.history, window).value_or(0.0);

        edge_series_.push_back({t_, e.id, k_true, fd_flow(e.fd, std::min(k_true, e.fd.k_j))});
        if (k_true > e.fd.k_c) time_above_critical_ += config_.sensor_period;
    }

    if (controller_ != ControllerKind::Proposed) return;

    std::map<EdgeId, RatePrediction> predictions;
    for (const Edge& e : scenario_.graph.edges) {
        predictions[e.id] = predict_time_to_critical(edge_states_[e.id], e.fd);
        current_weights_[e.id] =
            dynamic_weight(scenario_.routing.policy, e, predictions[e.id]);
    }

    const RdConfig& rd = scenario_.routing.rd;
    bool trigger = false;
    if (rd.replan_period > 0.0 && t_ >= last_replan_ + rd.replan_period - 1e-9)
        trigger = true;
    if (rd.replan_period > 0.0 && !tc_at_last_plan_.empty()) {
        auto clamp_tc = [](double tc) { return std::min(tc, 1e9); };
        for (const auto& [eid, pred] : predictions) {
            auto it = tc_at_last_plan_.find(eid);
            if (it != tc_at_last_plan_.end() &&
                std::abs(clamp_tc(pred.t_c_remaining) - clamp_tc(it->second)) >
                    rd.tc_change_threshold) {
                trigger = true;
                break;
            }
        }
    }
    if (!trigger) return;

    std::vector<ActiveCav> active;
    std::vector<Vehicle*> by_id;
    for (Vehicle& v : vehicles_) {
        if (v.phase != Phase::OnLink && v.phase != Phase::Queued && v.phase != Phase::InZone)
            continue;
        const Edge& e = scenario_.graph.edge(v.current_edge());
        if (e.to == v.demand.destination) continue; // no alternative past this edge
        ActiveCav cav;
        cav.id = v.id;
        cav.at_node = e.to;
        cav.destination = v.demand.destination;
        cav.current_route.nodes.assign(v.route.nodes.begin() + v.route_idx + 1,
                                       v.route.nodes.end());
        cav.current_route.edges.assign(v.route.edges.begin() + v.route_idx + 1,
                                       v.route.edges.end());
        active.push_back(std::move(cav));
        by_id.push_back(&v);
    }

    ReplanResult result = replan_all(scenario_.graph, edge_states_,
                                     scenario_.routing.policy, active);
    for (std::size_t i = 0; i < by_id.size(); ++i) {
        Vehicle& v = *by_id[i];
        const Route& new_remainder = result.routes.at(v.id);
        if (new_remainder.empty()) continue;
        // Splice: committed current edge plus the fresh remainder.
        Route spliced;
        spliced.edges.push_back(v.current_edge());
        spliced.nodes.push_back(scenario_.graph.edge(v.current_edge()).from);
        for (NodeId n : new_remainder.nodes) spliced.nodes.push_back(n);
        for (EdgeId e : new_remainder.edges) spliced.edges.push_back(e);
        v.route = std::move(spliced);
        v.route_idx = 0;
    }
    for (CavId id : result.no_route)
        events_.push_back({t_, "no_route", "cav=" + std::to_string(id)});

    std::ostringstream detail;
    detail << "flagged=" << result.flagged.size()
           << ";route_changes=" << result.route_changes;
    events_.push_back({t_, "replan", detail.str()});

    tc_at_last_plan_.clear();
    for (const auto& [eid, pred] : result.predictions)
        tc_at_last_plan_[eid] = pred.t_c_remaining;
    last_replan_ = t_;
}

void World::spawn_due() {
    for (Vehicle& v : vehicles_) {
        if (v.phase != Phase::Pending || v.demand.entry_time > t_ + 1e-9) continue;
        // Entry is gated when the first edge sits at jam density.
        Route route = route_for_entry(v.demand.origin, v.demand.destination);
        const Edge& first = scenario_.graph.edge(route.edges.front());
        if ((edge_counts_[first.id] + 1) / first.length > first.fd.k_j + 1e-12) continue;

        v.route = std::move(route);
        v.route_idx = 0;
        v.pos = 0.0;
        v.phase = Phase::OnLink;
        v.rec.entry_time = t_;
        v.rec.route_history.push_back(first.id);
        auto ff = shortest_path(scenario_.graph, free_flow_tt_weights_, v.demand.origin,
                                v.demand.destination);
        v.rec.free_flow_tt = ff ? ff->planned_cost : 0.0;
        edge_counts_[first.id] += 1;
    }
}

std::vector<ZoneNeighbor> World::zone_neighbors(const ControlZoneSpec& zone,
                                                EdgeId approach) const {
    std::vector<ZoneNeighbor> out;
    auto it = zone_commitments_.find(zone.node);
    if (it == zone_commitments_.end()) return out;
    for (const ZoneCommitment& c : it->second) {
        ZoneNeighbor nb;
        nb.id = c.cav;
        nb.traj = c.traj;
        nb.same_approach = c.approach == approach;
        if (!nb.same_approach) {
            for (const ConflictPoint& cp : zone.conflicts) {
                if (cp.approach_a == approach && cp.approach_b == c.approach)
                    nb.conflicts.emplace_back(cp.dist_a, cp.dist_b);
                else if (cp.approach_b == approach && cp.approach_a == c.approach)
                    nb.conflicts.emplace_back(cp.dist_b, cp.dist_a);
            }
            if (nb.conflicts.empty()) continue; // disjoint paths, no coupling
        }
        out.push_back(std::move(nb));
    }
    return out;
}

bool World::try_enter_zone(Vehicle& veh, const ControlZoneSpec& zone, double t_entry) {
    const Edge& e = scenario_.graph.edge(veh.current_edge());
    const double v_link = fd_speed(e.fd, std::min(edge_density(e.id), e.fd.k_j));
    CavZoneState state;
    state.id = veh.id;
    state.p = 0.0;
    state.v = std::clamp(v_link, tightened_.limits.v_min, tightened_.limits.v_max);
    state.t0 = t_entry;

    const auto neighbors = zone_neighbors(zone, e.id);

    // Predecessor gap at the entry line; queue at the boundary otherwise.
    for (const ZoneNeighbor& nb : neighbors) {
        if (!nb.same_approach) continue;
        const double gap = nb.traj.position(t_entry) - state.p;
        if (gap < tightened_.safety.gamma_s + tightened_.safety.phi * state.v - 1e-9)
            return false;
    }

    const auto window = exit_time_window(state, tightened_.limits, zone.zone_length);
    const auto t_f = schedule_exit_time(state, window, neighbors, zone.zone_length,
                                        tightened_.safety, tightened_.limits,
                                        scenario_.coordination.solver);
    Trajectory traj;
    if (t_f) {
        traj = *unconstrained_trajectory(state, *t_f, zone.zone_length, tightened_.limits);
    } else {
        events_.push_back({t_entry, "none_schedule", "cav=" + std::to_string(veh.id)});
        // Imposed crossings: one headway behind each conflicting committed CAV.
        std::vector<ConflictCrossing> crossings;
        for (const ZoneNeighbor& nb : neighbors)
            for (const auto& [own_dist, their_dist] : nb.conflicts)
                if (auto t_n = nb.traj.time_at_position(their_dist))
                    crossings.push_back({own_dist, *t_n + tightened_.safety.t_h});
        FallbackResult fb;
        if (crossings.empty()) {
            fb.traj = unconstrained_trajectory_unchecked(state, window.t_hi,
                                                         zone.zone_length);
            fb.used_last_resort = true;
        } else {
            fb = constrained_fallback(state, crossings, zone.zone_length,
                                      tightened_.safety, tightened_.limits,
                                      scenario_.coordination.solver);
        }
        traj = fb.traj;
        std::string detail = "cav=" + std::to_string(veh.id);
        if (fb.used_last_resort) detail += ";last_resort";
        if (fb.projected) detail += ";projected";
        events_.push_back({t_entry, "fallback", detail});
    }

    zone_commitments_[zone.node].push_back({veh.id, e.id, traj});
    veh.zone_traj = std::move(traj);
    veh.phase = Phase::InZone;
    veh.pos = zone_boundary(e, zone);
    return true;
}

void World::cross_node(Vehicle& veh, double at_time) {
    const Edge& e = scenario_.graph.edge(veh.current_edge());
    const NodeId node = e.to;

    if (node == veh.demand.destination) {
        veh.phase = Phase::Done;
        veh.rec.exit_time = at_time;
        veh.rec.completed = true;
        edge_counts_[e.id] -= 1;
        return;
    }

    const EdgeId next = veh.route.edges[veh.route_idx + 1];
    const Edge& ne = scenario_.graph.edge(next);
    if ((edge_counts_[next] + 1) / ne.length > ne.fd.k_j + 1e-12) {
        // Downstream edge jammed: hold at the node, keep blocking this edge.
        veh.phase = Phase::Queued;
        veh.pos = e.length;
        return;
    }
    edge_counts_[e.id] -= 1;
    edge_counts_[next] += 1;
    veh.route_idx += 1;
    veh.pos = 0.0;
    veh.phase = Phase::OnLink;
    veh.rec.route_history.push_back(next);
}

void World::move_vehicles() {
    const double dt = config_.step;
    const double t_next = t_ + dt;

    // Zone vehicles follow their committed trajectories exactly.
    for (Vehicle& v : vehicles_) {
        if (v.phase != Phase::InZone) continue;
        const Edge& e = scenario_.graph.edge(v.current_edge());
        const ControlZoneSpec* zone = scenario_.zone_at(e.to);
        const double u = v.zone_traj.control(std::min(t_next, v.zone_traj.t_f()));
        v.rec.zone_energy += 0.5 * u * u * dt;
        if (dump_traj_)
            traj_rows_.push_back({v.id, t_next, v.zone_traj.position(t_next),
                                  v.zone_traj.speed(t_next), u});
        if (t_next >= v.zone_traj.t_f() - 1e-9) {
            auto& commits = zone_commitments_[e.to];
            std::erase_if(commits, [&](const ZoneCommitment& c) { return c.cav == v.id; });
            v.rec.distance += zone->zone_length - (v.pos - zone_boundary(e, *zone));
            cross_node(v, v.zone_traj.t_f());
        } else {
            const double new_edge_pos =
                zone_boundary(e, *zone) + v.zone_traj.position(t_next);
            v.rec.distance += new_edge_pos - v.pos;
            v.pos = new_edge_pos;
        }
    }

    // Link vehicles: fundamental-diagram speed, no overtaking. Membership is
    // snapshotted first so a vehicle crossing onto a later edge in the loop
    // does not move twice in one step.
    std::map<EdgeId, std::vector<Vehicle*>> on_edge_map;
    for (Vehicle& v : vehicles_)
        if (v.phase == Phase::OnLink || v.phase == Phase::Queued)
            on_edge_map[v.current_edge()].push_back(&v);

    for (const Edge& e : scenario_.graph.edges) {
        auto map_it = on_edge_map.find(e.id);
        if (map_it == on_edge_map.end()) continue;
        std::vector<Vehicle*>& on_edge = map_it->second;
        std::sort(on_edge.begin(), on_edge.end(), [](const Vehicle* a, const Vehicle* b) {
            if (a->pos != b->pos) return a->pos > b->pos;
            return a->id < b->id;
        });

        int in_zone = 0;
        for (const Vehicle& zv : vehicles_)
            if (zv.phase == Phase::InZone && zv.current_edge() == e.id) ++in_zone;

        const ControlZoneSpec* zone = scenario_.zone_at(e.to);
        double leader_pos = kInfiniteTime;

        for (std::size_t i = 0; i < on_edge.size(); ++i) {
            Vehicle* v = on_edge[i];
            // Speed from the density ahead of the vehicle: queues discharge
            // from the front instead of freezing the whole edge at jam.
            const double remaining = std::max(e.length - v->pos, 1.0);
            const double k_ahead =
                std::min((static_cast<double>(i) + in_zone) / remaining, e.fd.k_j);
            const double v_e = std::min(fd_speed(e.fd, k_ahead), e.free_flow_speed);
            double target = v->pos + v_e * dt;
            if (std::isfinite(leader_pos))
                target = std::min(target, leader_pos - tightened_.safety.gamma_s);
            target = std::max(target, v->pos); // queued leaders never push back

            if (zone != nullptr) {
                const double boundary = zone_boundary(e, *zone);
                if (target >= boundary - 1e-9 && v->pos <= boundary + 1e-9) {
                    v->rec.distance += boundary - v->pos;
                    v->pos = boundary;
                    if (try_enter_zone(*v, *zone, t_next)) {
                        leader_pos = boundary; // entry line still occupied this step
                        continue;
                    }
                    v->phase = Phase::Queued;
                    leader_pos = v->pos;
                    continue;
                }
            } else if (target >= e.length - 1e-9) {
                v->rec.distance += e.length - v->pos;
                v->pos = e.length;
                cross_node(*v, t_next);
                if (v->phase == Phase::Queued) leader_pos = v->pos;
                continue;
            }

            v->rec.distance += target - v->pos;
            v->pos = target;
            v->phase = Phase::OnLink;
            leader_pos = v->pos;
        }
    }
}

void World::audit_zones() const {
    for (const auto& [node, commits] : zone_commitments_) {
        const ControlZoneSpec* zone = scenario_.zone_at(node);
        for (const ZoneCommitment& c : commits) {
            if (t_ < c.traj.t0() || t_ > c.traj.t_f()) continue;
            const double v = c.traj.speed(t_);
            const double u = c.traj.control(t_);
            if (v < tightened_.limits.v_min - 1e-6 || v > tightened_.limits.v_max + 1e-6 ||
                u < tightened_.limits.u_min - 1e-6 || u > tightened_.limits.u_max + 1e-6)
                throw SafetyAuditError("speed/control bound violated by cav " +
                                       std::to_string(c.cav) + " at t=" + std::to_string(t_));
            for (const ZoneCommitment& other : commits) {
                if (other.cav == c.cav) continue;
                if (t_ < other.traj.t0() || t_ > other.traj.t_f()) continue;
                if (other.approach == c.approach) {
                    const double pc = c.traj.position(t_);
                    const double po = other.traj.position(t_);
                    if (po > pc &&
                        po - pc < tightened_.safety.gamma_s +
                                      tightened_.safety.phi * c.traj.speed(t_) - 1e-6)
                        throw SafetyAuditError(
                            "rear-end gap violated between cavs " + std::to_string(c.cav) +
                            " and " + std::to_string(other.cav) + " at t=" + std::to_string(t_));
                } else {
                    for (const ConflictPoint& cp : zone->conflicts) {
                        double dc, doth;
                        if (cp.approach_a == c.approach && cp.approach_b == other.approach) {
                            dc = cp.dist_a;
                            doth = cp.dist_b;
                        } else if (cp.approach_b == c.approach &&
                                   cp.approach_a == other.approach) {
                            dc = cp.dist_b;
                            doth = cp.dist_a;
                        } else {
                            continue;
                        }
                        const auto tc = c.traj.time_at_position(dc);
                        const auto to = other.traj.time_at_position(doth);
                        if (tc && to &&
                            std::abs(*tc - *to) < tightened_.safety.t_h - 1e-6)
                            throw SafetyAuditError(
                                "conflict headway violated between cavs " +
                                std::to_string(c.cav) + " and " + std::to_string(other.cav));
                    }
                }
            }
        }
    }
}

void World::step() {
    if (t_ >= next_sensor_ - 1e-9) {
        sense_and_control();
        next_sensor_ += config_.sensor_period;
    }
    spawn_due();
    move_vehicles();
    if (audit_) audit_zones();
    t_ += config_.step;
}

bool World::done() const {
    if (t_ >= config_.horizon) return true;
    for (const Vehicle& v : vehicles_)
        if (v.phase != Phase::Done) return false;
    return true;
}

MetricsReport World::report() const {
    MetricsReport r;
    r.scenario_hash = scenario_hash(scenario_);
    r.seed = config_.seed;
    for (const Vehicle& v : vehicles_) {
        if (v.phase == Phase::Pending) {
            ++r.incomplete;
            continue;
        }
        ++r.spawned;
        VehicleRecord rec = v.rec;
        if (v.phase == Phase::Done) {
            ++r.completed;
        } else {
            // still in the network: censor at the current time so gridlocked
            // runs pay for their queued vehicles
            rec.exit_time = t_;
            ++r.active;
            ++r.incomplete;
        }
        r.vehicles.push_back(rec);
        r.total_energy += rec.zone_energy;
        r.ttt += rec.travel_time();
        r.total_delay += rec.delay();
    }
    r.time_above_critical = time_above_critical_;
    r.edge_series = edge_series_;
    return r;
}

MetricsReport run(const Scenario& scenario, ControllerKind controller,
                  const SimConfig& config) {
    World world(scenario, controller, config);
    while (!world.done()) world.step();
    return world.report();
}

SimOutputs run_with_outputs(const Scenario& scenario, ControllerKind controller,
                            const SimConfig& config, bool audit,
                            bool dump_trajectories) {
    World world(scenario, controller, config, audit, dump_trajectories);
    while (!world.done()) world.step();

    SimOutputs out;
    out.metrics = world.report();

    std::ostringstream edges;
    edges << "t,edge,k,q\n";
    for (const EdgeFlowSample& s : out.metrics.edge_series)
        edges << s.t << "," << s.edge << "," << s.k << "," << s.q << "\n";
    out.edges_csv = edges.str();

    std::ostringstream events;
    events << "t,type,detail\n";
    for (const SimEvent& e : world.events())
        events << e.t << "," << e.type << "," << e.detail << "\n";
    out.events_csv = events.str();

    if (dump_trajectories) {
        std::ostringstream traj;
        traj << "cav,t,p,v,u\n";
        for (const TrajectoryRow& r : world.trajectory_rows())
            traj << r.cav << "," << r.t << "," << r.p << "," << r.v << "," << r.u << "\n";
        out.trajectories_csv = traj.str();
    }
    return out;
}

} // namespace cavsim
