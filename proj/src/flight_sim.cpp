#include "scart/flight_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "scart/bus.hpp"
#include "scart/error.hpp"

namespace scart {

namespace {

constexpr double kEarthRadius = 6378137.0;  // WGS-84 equatorial, m
constexpr double kHeadingMinSpeed = 0.3;    // m/s; below this the heading is held

const SensorId kLat{"latitude"};
const SensorId kLon{"longitude"};
const SensorId kAlt{"altitude"};

double wrap180(double deg) {
    deg = std::fmod(deg + 180.0, 360.0);
    if (deg < 0) deg += 360.0;
    return deg - 180.0;
}

std::string stamp(Timestamp ts) { return std::to_string(ts.micros); }

const std::set<std::string>& known_channels() {
    static const std::set<std::string> names{"latitude", "longitude", "altitude", "vx", "vy", "vz", "heading"};
    return names;
}

}  // namespace

double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

void MissionPlan::validate() const {
    if (waypoints.size() < 2) throw InvalidArgument("mission '" + name + "' needs at least 2 waypoints");
    if (!(acceptance_radius > 0.0)) throw InvalidArgument("mission '" + name + "': acceptance_radius must be > 0");
    if (!(cruise_speed > 0.0)) throw InvalidArgument("mission '" + name + "': cruise_speed must be > 0");
    if (std::abs(origin_lat) >= 89.0 || std::abs(origin_lon) > 180.0) {
        throw InvalidArgument("mission '" + name + "': origin out of range");
    }
    for (const auto& w : waypoints) {
        if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.z) || w.z < 0.0) {
            throw InvalidArgument("mission '" + name + "': waypoints must be finite with z >= 0");
        }
    }
}

MissionPlan MissionPlan::square(double side, double altitude) {
    MissionPlan plan;
    plan.name = "square" + format_double(side);
    plan.waypoints = {
        {0.0, 0.0, 0.0},       {0.0, 0.0, altitude},   {0.0, side, altitude}, {side, side, altitude},
        {side, 0.0, altitude}, {0.0, 0.0, altitude},   {0.0, 0.0, 0.0},
    };
    return plan;
}

std::vector<SensorChannel> SimConfig::default_sensors() {
    return {
        {"latitude", 10.0, 1e-6},  {"longitude", 10.0, 1e-6}, {"altitude", 10.0, 0.1}, {"vx", 50.0, 0.05},
        {"vy", 50.0, 0.05},        {"vz", 50.0, 0.05},        {"heading", 50.0, 0.5},
    };
}

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be > 0");
    const double cycle_us = dt * 1e6;
    if (std::abs(cycle_us - std::round(cycle_us)) > 1e-6) throw InvalidArgument("dt must be a whole number of microseconds");
    if (!(max_duration > 0.0)) throw InvalidArgument("max_duration must be > 0");
    if (sensors.empty()) throw InvalidArgument("at least one sensor channel is required");
    std::set<SensorId> seen;
    for (const auto& ch : sensors) {
        if (!known_channels().contains(ch.id.name())) {
            throw InvalidArgument("unsupported sensor channel '" + ch.id.name() + "'");
        }
        if (!seen.insert(ch.id).second) throw InvalidArgument("sensor '" + ch.id.name() + "' configured twice");
        if (!(ch.rate_hz > 0.0)) throw InvalidArgument("sensor '" + ch.id.name() + "': rate must be > 0");
        if (!(ch.noise_sigma >= 0.0) || !std::isfinite(ch.noise_sigma)) {
            throw InvalidArgument("sensor '" + ch.id.name() + "': noise sigma must be finite and >= 0");
        }
        const double period = 1.0 / (ch.rate_hz * dt);
        if (period < 1.0 - 1e-9 || std::abs(period - std::round(period)) > 1e-9 * period) {
            throw InvalidArgument("sensor '" + ch.id.name() + "': rate must divide the cycle rate evenly");
        }
    }
    for (double v : {wind_x, wind_y, approach_gain, cross_track_gain, yaw_rate, notice_jump, max_accel}) {
        if (!std::isfinite(v)) throw InvalidArgument("simulation parameters must be finite");
    }
    if (!(approach_gain > 0.0) || !(yaw_rate > 0.0)) throw InvalidArgument("approach_gain and yaw_rate must be > 0");
    if (cross_track_gain < 0.0) throw InvalidArgument("cross_track_gain must be >= 0");
    if (max_accel < 0.0) throw InvalidArgument("max_accel must be >= 0");
}

std::vector<SensorId> SimConfig::sensor_ids() const {
    std::vector<SensorId> ids;
    for (const auto& ch : sensors) ids.push_back(ch.id);
    return ids;
}

std::uint64_t SimConfig::period_cycles(const SensorChannel& channel) const {
    return static_cast<std::uint64_t>(std::llround(1.0 / (channel.rate_hz * dt)));
}

Timestamp SimConfig::cycle_time(std::uint64_t cycle) const {
    return Timestamp{cycle * static_cast<std::uint64_t>(std::llround(dt * 1e6))};
}

GeoFrame::GeoFrame(const MissionPlan& plan)
    : lat0(plan.origin_lat),
      lon0(plan.origin_lon),
      m_per_deg_lat(kEarthRadius * std::numbers::pi / 180.0),
      m_per_deg_lon(kEarthRadius * std::numbers::pi / 180.0 * std::cos(plan.origin_lat * std::numbers::pi / 180.0)) {}

VehicleState initial_state(const MissionPlan& plan) {
    VehicleState s;
    s.pos = plan.waypoints.front();
    s.waypoint_index = 1;
    return s;
}

VehicleState step(const VehicleState& state, const Setpoint& guidance, const MissionPlan& plan, const SimConfig& cfg) {
    VehicleState next = state;
    Vec3 cmd = guidance.velocity;
    const double speed = norm(cmd);
    if (speed > plan.cruise_speed) cmd = cmd * (plan.cruise_speed / speed);

    const Vec3 wind{cfg.wind_x, cfg.wind_y, 0.0};
    if (cfg.max_accel > 0.0) {
        const Vec3 air = state.vel - wind;
        const Vec3 change = cmd - air;
        const double limit = cfg.max_accel * cfg.dt;
        const double size = norm(change);
        cmd = size > limit ? air + change * (limit / size) : cmd;
    }
    Vec3 ground = cmd + wind;
    next.pos = state.pos + ground * cfg.dt;
    if (next.pos.z < 0.0) {
        next.pos.z = 0.0;
        ground.z = 0.0;
    }
    next.vel = ground;

    const double horizontal = std::hypot(ground.x, ground.y);
    if (horizontal > kHeadingMinSpeed) {
        const double course = std::atan2(ground.x, ground.y) * 180.0 / std::numbers::pi;
        const double turn = wrap180(course - state.heading);
        const double max_turn = cfg.yaw_rate * cfg.dt;
        next.heading = state.heading + std::clamp(turn, -max_turn, max_turn);
    }

    if (next.waypoint_index < plan.waypoints.size() &&
        norm(next.pos - plan.waypoints[next.waypoint_index]) <= plan.acceptance_radius) {
        ++next.waypoint_index;
    }
    ++next.cycle;
    return next;
}

std::vector<SensorSample> emit_sensors(const VehicleState& state, const MissionPlan& plan, const SimConfig& cfg,
                                       Rng& rng) {
    const GeoFrame geo(plan);
    const Timestamp ts = cfg.cycle_time(state.cycle);
    std::vector<SensorSample> out;
    for (const auto& ch : cfg.sensors) {
        if (state.cycle % cfg.period_cycles(ch) != 0) continue;
        const auto& name = ch.id.name();
        double truth = 0.0;
        if (name == "latitude") truth = geo.lat(state.pos.y);
        else if (name == "longitude") truth = geo.lon(state.pos.x);
        else if (name == "altitude") truth = state.pos.z;
        else if (name == "vx") truth = state.vel.x;
        else if (name == "vy") truth = state.vel.y;
        else if (name == "vz") truth = state.vel.z;
        else if (name == "heading") truth = state.heading;
        else throw InvalidArgument("unsupported sensor channel '" + name + "'");
        out.push_back({ch.id, ts, rng.gaussian(truth, ch.noise_sigma)});
    }
    return out;
}

Setpoint navigate(const std::map<SensorId, double>& latest, const MissionPlan& plan, std::size_t waypoint_index,
                  double approach_gain, double cross_track_gain) {
    auto find = [&](const SensorId& id) {
        auto it = latest.find(id);
        if (it == latest.end()) throw MissingSensor("navigator has no " + id.name() + " fix");
        return it->second;
    };
    const GeoFrame geo(plan);
    const Vec3 believed{geo.x(find(kLon)), geo.y(find(kLat)), find(kAlt)};
    if (waypoint_index >= plan.waypoints.size()) return Setpoint::hold();

    const Vec3 delta = plan.waypoints[waypoint_index] - believed;
    const double dist = norm(delta);
    if (dist == 0.0) return Setpoint::hold();
    const double speed = std::min(plan.cruise_speed, approach_gain * dist);
    Vec3 v = delta * (speed / dist);
    if (waypoint_index > 0 && cross_track_gain > 0.0) {
        const Vec3 leg = plan.waypoints[waypoint_index] - plan.waypoints[waypoint_index - 1];
        const double len = norm(leg);
        if (len > 0.0) {
            const Vec3 u = leg * (1.0 / len);
            const Vec3 off = believed - plan.waypoints[waypoint_index - 1];
            const double along = off.x * u.x + off.y * u.y + off.z * u.z;
            v = v - (off - u * along) * cross_track_gain;
            const double n = norm(v);
            if (n > plan.cruise_speed) v = v * (plan.cruise_speed / n);
        }
    }
    return Setpoint{v};
}

LabeledRun run_mission(const MissionPlan& plan, const SimConfig& cfg, const MissionOptions& options) {
    plan.validate();
    cfg.validate();
    const auto ids = cfg.sensor_ids();

    Bus bus;
    for (const auto& id : ids) {
        bus.register_topic(raw_topic(id));
        bus.register_topic(nav_topic(id));
        bus.bridge(raw_topic(id), nav_topic(id));
    }

    History sim_history;
    History nav_history;
    std::map<SensorId, double> latest;
    bool gps_updated = false;
    std::vector<Bus::Subscription> subs;
    for (const auto& id : ids) {
        subs.push_back(bus.subscribe(raw_topic(id), [&](const SensorSample& s) { sim_history.append(s); }));
        subs.push_back(bus.subscribe(nav_topic(id), [&](const SensorSample& s) {
            nav_history.append(s);
            latest[s.sensor] = s.value;
            if (s.sensor == kLat || s.sensor == kLon) gps_updated = true;
        }));
    }

    std::unique_ptr<AttackLayer> layer;
    if (options.scenario) layer = install(*options.scenario, bus, remap_all(ids), options.attack_seed);

    LabeledRun run;
    run.meta.run_id = options.run_id;
    run.meta.seed = cfg.seed;
    run.meta.mission = plan.name;
    if (options.scenario) {
        run.meta.mode = options.mode;
        run.meta.scenario = options.scenario->label;
    }

    Rng sensor_rng(cfg.seed);
    VehicleState state = initial_state(plan);
    const auto max_cycles = static_cast<std::uint64_t>(std::ceil(cfg.max_duration / cfg.dt));
    const GeoFrame geo(plan);
    std::optional<Vec3> last_fix;
    std::size_t reported_index = state.waypoint_index;

    for (;;) {
        const Timestamp ts = cfg.cycle_time(state.cycle);
        if (layer) layer->set_waypoints_reached(state.waypoint_index);
        gps_updated = false;
        for (const auto& s : emit_sensors(state, plan, cfg, sensor_rng)) bus.publish(raw_topic(s.sensor), s);
        run.truth.push_back({ts, state.pos.x, state.pos.y, state.pos.z});

        if (gps_updated && latest.contains(kLat) && latest.contains(kLon) && latest.contains(kAlt)) {
            const Vec3 fix{geo.x(latest[kLon]), geo.y(latest[kLat]), latest[kAlt]};
            if (last_fix && norm(fix - *last_fix) > cfg.notice_jump) {
                run.mission_log.push_back(stamp(ts) + " notice gps_jump " + format_double(norm(fix - *last_fix)));
            }
            last_fix = fix;
        }

        if (state.waypoint_index >= plan.waypoints.size()) {
            run.mission_log.push_back(stamp(ts) + " mission complete");
            run.outcome = RunOutcome::completed;
            break;
        }
        if (state.cycle >= max_cycles) {
            run.mission_log.push_back(stamp(ts) + " timeout at waypoint " + std::to_string(state.waypoint_index));
            run.outcome = RunOutcome::timeout;
            break;
        }

        Setpoint guidance = Setpoint::hold();
        if (last_fix) {
            // Warm-up is a position hold over the takeoff point.
            const std::size_t target = ts < cfg.warmup ? 0 : state.waypoint_index;
            guidance = navigate(latest, plan, target, cfg.approach_gain, cfg.cross_track_gain);
        }
        state = step(state, guidance, plan, cfg);
        while (reported_index < state.waypoint_index) {
            run.mission_log.push_back(stamp(cfg.cycle_time(state.cycle)) + " waypoint " + std::to_string(reported_index) +
                                      " reached");
            ++reported_index;
        }
    }

    std::optional<AttackWindow> window;
    if (layer) {
        auto result = layer->finalize();
        window = result.window;
        for (const auto& e : layer->engine().events()) run.engine_log.push_back(stamp(e.ts) + " " + e.text);
        if (window) {
            run.engine_log.push_back("window " + stamp(window->start) + " " + stamp(window->end));
        } else {
            run.engine_log.push_back("window none");
        }
    }

    std::vector<SensorColumn> columns;
    for (const auto& ch : cfg.sensors) columns.push_back({ch.id, ch.rate_hz});
    auto assembled = assemble(nav_history, sim_history, window, run.meta, std::move(columns));
    assembled.truth = std::move(run.truth);
    assembled.mission_log = std::move(run.mission_log);
    assembled.engine_log = std::move(run.engine_log);
    assembled.outcome = run.outcome;
    return assembled;
}

}  // namespace scart
