#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scart/attack.hpp"
#include "scart/bus.hpp"
#include "scart/core.hpp"
#include "scart/rng.hpp"

namespace scart {

// Holds once run time reaches threshold.
struct TimeElapsed {
    Timestamp threshold;
    bool operator==(const TimeElapsed&) const = default;
};

enum class Comparison { less, less_equal, greater, greater_equal, approx_equal };

// Compares the latest recorded value of a listened sensor with a threshold.
struct SensorPredicate {
    SensorId sensor;
    Comparison cmp = Comparison::greater;
    double threshold = 0.0;
    double epsilon = 0.0;  // tolerance for approx_equal
    bool operator==(const SensorPredicate&) const = default;
};

// Holds once mission waypoint `index` has been reached.
struct WaypointReached {
    std::size_t index = 0;
    bool operator==(const WaypointReached&) const = default;
};

using Condition = std::variant<TimeElapsed, SensorPredicate, WaypointReached>;

inline constexpr std::size_t kConditionKinds = std::variant_size_v<Condition>;
inline constexpr std::array<std::string_view, kConditionKinds> kConditionNames{"TimeElapsed", "SensorPredicate",
                                                                               "WaypointReached"};

std::string describe(const Condition& c);
std::string_view to_string(Comparison cmp);
Comparison comparison_from_string(std::string_view text);

struct Scenario {
    std::string label;
    std::vector<SensorId> listeners;
    std::vector<Condition> start_conditions;  // all must hold
    std::vector<Condition> end_conditions;    // any one ends the attack
    AttackChain actions;
    Timestamp warmup = kDefaultWarmup;        // no activation before this

    // Sensors the layer must intercept: listeners plus every action target.
    std::vector<SensorId> intercepted_sensors() const;

    // Throws InvalidArgument on a broken invariant.
    void validate() const;

    bool operator==(const Scenario&) const = default;
};

enum class Phase { armed, active, finished };

std::string_view to_string(Phase phase);

struct AttackWindow {
    Timestamp start;
    Timestamp end;

    bool contains(Timestamp ts) const noexcept { return start <= ts && ts <= end; }
    bool operator==(const AttackWindow&) const = default;
};

struct EngineState {
    Phase phase = Phase::armed;
    Timestamp window_start;
    std::optional<Timestamp> window_end;
    History history;
    std::size_t waypoints_reached = 0;
};

struct EngineEvent {
    Timestamp ts;
    std::string text;
};

// True iff every condition holds at `now`; true for an empty list.
bool eval_all(const std::vector<Condition>& conditions, const EngineState& state, Timestamp now);
// True iff at least one condition holds at `now`; false for an empty list.
bool eval_any(const std::vector<Condition>& conditions, const EngineState& state, Timestamp now);
bool eval(const Condition& c, const EngineState& state, Timestamp now);

struct EngineResult {
    History history;
    std::optional<AttackWindow> window;
};

// Vanilla policy: wait for all start conditions, apply the action chain,
// stop at the first end condition. One window per run.
class ScenarioEngine {
public:
    ScenarioEngine(Scenario scenario, std::uint64_t attack_seed);

    // Records s and returns what should be forwarded in its place.
    std::vector<SensorSample> on_sample(const SensorSample& s);

    void set_waypoints_reached(std::size_t n) { state_.waypoints_reached = n; }

    const EngineState& state() const noexcept { return state_; }
    const Scenario& scenario() const noexcept { return scenario_; }
    const std::vector<EngineEvent>& events() const noexcept { return events_; }
    std::size_t activations() const noexcept { return activations_; }

    // Closes a still-open window at the last observed timestamp.
    EngineResult finalize() const;

private:
    Scenario scenario_;
    EngineState state_;
    Rng rng_;
    std::vector<EngineEvent> events_;
    std::optional<Timestamp> last_ts_;
    std::size_t activations_ = 0;
};

// The man-in-the-middle layer: owns the remap and the engine, republishes
// to the navigator side.
class AttackLayer {
public:
    AttackLayer(const AttackLayer&) = delete;
    AttackLayer& operator=(const AttackLayer&) = delete;

    ScenarioEngine& engine() noexcept { return engine_; }
    const ScenarioEngine& engine() const noexcept { return engine_; }

    void set_waypoints_reached(std::size_t n) { engine_.set_waypoints_reached(n); }
    EngineResult finalize() const { return engine_.finalize(); }

private:
    friend std::unique_ptr<AttackLayer> install(Scenario, Bus&, const RemapTable&, std::uint64_t);
    AttackLayer(Scenario scenario, std::uint64_t attack_seed) : engine_(std::move(scenario), attack_seed) {}

    ScenarioEngine engine_;
    std::vector<Bus::Subscription> subscriptions_;
};

// Installs the remap and subscribes the engine to the intercepted raw topics.
// Throws UnknownSensor, RemapConflict (including a second install on one bus).
std::unique_ptr<AttackLayer> install(Scenario scenario, Bus& bus, const RemapTable& remap, std::uint64_t attack_seed);

// Pass-through layer: the remap without a scenario (MITM idle).
class PassThroughLayer {
public:
    PassThroughLayer(Bus& bus, const RemapTable& remap);

private:
    std::vector<Bus::Subscription> subscriptions_;
};

}  // namespace scart
