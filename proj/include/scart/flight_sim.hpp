#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scart/core.hpp"
#include "scart/dataset.hpp"
#include "scart/rng.hpp"
#include "scart/scenario.hpp"

namespace scart {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(Vec3 a, double k) { return {a.x * k, a.y * k, a.z * k}; }
double norm(Vec3 v);

// Local tangent frame: x east, y north, z up, meters.
struct MissionPlan {
    std::string name = "square30";
    std::vector<Vec3> waypoints;  // first is takeoff point, last is landing point
    double origin_lat = 47.397404;
    double origin_lon = 8.545335;
    double cruise_speed = 2.0;       // m/s
    double acceptance_radius = 0.5;  // m

    // Throws InvalidArgument.
    void validate() const;

    // Square with `side` meter legs at `altitude`, flown clockwise from the
    // takeoff point: north, east, south, west, then landing.
    static MissionPlan square(double side = 30.0, double altitude = 5.0);

    bool operator==(const MissionPlan&) const = default;
};

struct VehicleState {
    Vec3 pos;
    Vec3 vel;                    // ground velocity, m/s
    double heading = 0.0;        // degrees clockwise from north, continuous (not wrapped)
    std::size_t waypoint_index = 0;  // waypoint being pursued; == size() when done
    std::uint64_t cycle = 0;

    bool operator==(const VehicleState&) const = default;
};

struct SensorChannel {
    SensorId id;
    double rate_hz = 0.0;
    double noise_sigma = 0.0;  // native units

    bool operator==(const SensorChannel&) const = default;
};

struct SimConfig {
    double dt = 0.01;  // s
    std::vector<SensorChannel> sensors = default_sensors();
    std::uint64_t seed = 0;
    double wind_x = 0.0;  // m/s
    double wind_y = 0.0;
    double max_duration = 300.0;  // s; exceeded => timeout
    Timestamp warmup = kDefaultWarmup;
    double approach_gain = 1.0;   // 1/s; setpoint speed = min(cruise, gain * distance)
    double cross_track_gain = 1.0;  // 1/s; pull toward the current leg
    double yaw_rate = 30.0;       // deg/s
    double max_accel = 1.0;       // m/s^2 toward the velocity setpoint; 0 tracks it instantly
    double notice_jump = 3.0;     // m; navigator raises a notice on larger GPS jumps

    // Throws InvalidArgument (dt <= 0, a rate that does not divide the cycle rate, ...).
    void validate() const;

    std::vector<SensorId> sensor_ids() const;
    // Cycles between two samples of a channel.
    std::uint64_t period_cycles(const SensorChannel& channel) const;
    Timestamp cycle_time(std::uint64_t cycle) const;

    static std::vector<SensorChannel> default_sensors();

    bool operator==(const SimConfig&) const = default;
};

struct Setpoint {
    Vec3 velocity;

    static Setpoint hold() { return {}; }
    bool operator==(const Setpoint&) const = default;
};

// Equirectangular conversion about the plan's origin.
struct GeoFrame {
    double lat0;
    double lon0;
    double m_per_deg_lat;
    double m_per_deg_lon;

    explicit GeoFrame(const MissionPlan& plan);
    double lat(double y) const { return lat0 + y / m_per_deg_lat; }
    double lon(double x) const { return lon0 + x / m_per_deg_lon; }
    double y(double lat) const { return (lat - lat0) * m_per_deg_lat; }
    double x(double lon) const { return (lon - lon0) * m_per_deg_lon; }
};

VehicleState initial_state(const MissionPlan& plan);

// One plant cycle of the velocity-controlled point mass.
VehicleState step(const VehicleState& state, const Setpoint& guidance, const MissionPlan& plan, const SimConfig& cfg);

// Samples due at state.cycle, in channel order, with gaussian noise.
std::vector<SensorSample> emit_sensors(const VehicleState& state, const MissionPlan& plan, const SimConfig& cfg,
                                       Rng& rng);

// Velocity setpoint toward the current waypoint from the believed position,
// pulled back onto the leg by cross_track_gain times the lateral offset and
// capped at cruise speed. Throws MissingSensor without a latitude/longitude/altitude fix.
Setpoint navigate(const std::map<SensorId, double>& latest, const MissionPlan& plan, std::size_t waypoint_index,
                  double approach_gain = 1.0, double cross_track_gain = 0.0);

struct MissionOptions {
    std::optional<Scenario> scenario;
    std::uint64_t attack_seed = 0;
    std::string run_id = "run";
    RunMode mode = RunMode::simulation_attack;  // used when a scenario is present
};

// Flies the plan closed-loop: simulator -> (attack layer) -> navigator.
// A run that exceeds cfg.max_duration returns with outcome timeout.
LabeledRun run_mission(const MissionPlan& plan, const SimConfig& cfg, const MissionOptions& options = {});

}  // namespace scart
