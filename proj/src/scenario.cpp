#include "scart/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "scart/error.hpp"

namespace scart {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool compare(double value, Comparison cmp, double threshold, double epsilon) {
    switch (cmp) {
        case Comparison::less: return value < threshold;
        case Comparison::less_equal: return value <= threshold;
        case Comparison::greater: return value > threshold;
        case Comparison::greater_equal: return value >= threshold;
        case Comparison::approx_equal: return std::abs(value - threshold) <= epsilon;
    }
    return false;
}

}  // namespace

std::string_view to_string(Comparison cmp) {
    switch (cmp) {
        case Comparison::less: return "<";
        case Comparison::less_equal: return "<=";
        case Comparison::greater: return ">";
        case Comparison::greater_equal: return ">=";
        case Comparison::approx_equal: return "==";
    }
    return "?";
}

Comparison comparison_from_string(std::string_view text) {
    if (text == "<") return Comparison::less;
    if (text == "<=") return Comparison::less_equal;
    if (text == ">") return Comparison::greater;
    if (text == ">=") return Comparison::greater_equal;
    if (text == "==" || text == "=") return Comparison::approx_equal;
    throw InvalidArgument("unknown comparison '" + std::string(text) + "'");
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::armed: return "armed";
        case Phase::active: return "active";
        case Phase::finished: return "finished";
    }
    return "?";
}

std::string describe(const Condition& c) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const TimeElapsed& t) { os << "TimeElapsed(" << t.threshold.micros << "us)"; },
                   [&](const SensorPredicate& p) {
                       os << "SensorPredicate(" << p.sensor.name() << ' ' << to_string(p.cmp) << ' ' << p.threshold;
                       if (p.cmp == Comparison::approx_equal) os << " +/- " << p.epsilon;
                       os << ')';
                   },
                   [&](const WaypointReached& w) { os << "WaypointReached(" << w.index << ')'; },
               },
               c);
    return os.str();
}

std::vector<SensorId> Scenario::intercepted_sensors() const {
    std::set<SensorId> ids(listeners.begin(), listeners.end());
    for (const auto& step : actions.steps) ids.insert(step.targets.begin(), step.targets.end());
    return {ids.begin(), ids.end()};
}

void Scenario::validate() const {
    if (listeners.empty()) throw InvalidArgument("scenario '" + label + "': listeners must not be empty");
    std::set<SensorId> seen;
    for (const auto& id : listeners) {
        if (!seen.insert(id).second) {
            throw InvalidArgument("scenario '" + label + "': listener '" + id.name() + "' listed twice");
        }
    }
    auto check = [&](const std::vector<Condition>& conditions) {
        for (const auto& c : conditions) {
            if (const auto* p = std::get_if<SensorPredicate>(&c)) {
                if (!seen.contains(p->sensor)) {
                    throw InvalidArgument("scenario '" + label + "': predicate sensor '" + p->sensor.name() +
                                          "' is not a listener");
                }
                if (!std::isfinite(p->threshold) || !std::isfinite(p->epsilon) || p->epsilon < 0.0) {
                    throw InvalidArgument("scenario '" + label + "': predicate on '" + p->sensor.name() +
                                          "' needs a finite threshold and epsilon >= 0");
                }
            }
        }
    };
    check(start_conditions);
    check(end_conditions);
    actions.validate();
}

bool eval(const Condition& c, const EngineState& state, Timestamp now) {
    return std::visit(overloaded{
                          [&](const TimeElapsed& t) { return now >= t.threshold; },
                          [&](const SensorPredicate& p) {
                              auto latest = state.history.latest(p.sensor);
                              return latest && compare(latest->value, p.cmp, p.threshold, p.epsilon);
                          },
                          [&](const WaypointReached& w) { return state.waypoints_reached > w.index; },
                      },
                      c);
}

bool eval_all(const std::vector<Condition>& conditions, const EngineState& state, Timestamp now) {
    return std::all_of(conditions.begin(), conditions.end(), [&](const auto& c) { return eval(c, state, now); });
}

bool eval_any(const std::vector<Condition>& conditions, const EngineState& state, Timestamp now) {
    return std::any_of(conditions.begin(), conditions.end(), [&](const auto& c) { return eval(c, state, now); });
}

ScenarioEngine::ScenarioEngine(Scenario scenario, std::uint64_t attack_seed)
    : scenario_(std::move(scenario)), rng_(attack_seed) {
    scenario_.validate();
}

std::vector<SensorSample> ScenarioEngine::on_sample(const SensorSample& s) {
    state_.history.append(s);
    last_ts_ = s.ts;

    if (state_.phase == Phase::armed && s.ts >= scenario_.warmup &&
        eval_all(scenario_.start_conditions, state_, s.ts)) {
        state_.phase = Phase::active;
        state_.window_start = s.ts;
        ++activations_;
        events_.push_back({s.ts, "activate " + scenario_.label});
    }

    if (state_.phase != Phase::active) return {s};

    if (eval_any(scenario_.end_conditions, state_, s.ts)) {
        state_.phase = Phase::finished;
        state_.window_end = s.ts;
        events_.push_back({s.ts, "finish " + scenario_.label});
        return {s};
    }

    auto series = state_.history.series(s.sensor);
    auto out = apply_chain(scenario_.actions, s, series.first(series.size() - 1), rng_);
    if (!out) return {};
    return {*out};
}

EngineResult ScenarioEngine::finalize() const {
    EngineResult result{state_.history, std::nullopt};
    if (state_.phase == Phase::active) {
        result.window = AttackWindow{state_.window_start, last_ts_.value_or(state_.window_start)};
    } else if (state_.phase == Phase::finished) {
        result.window = AttackWindow{state_.window_start, *state_.window_end};
    }
    return result;
}

std::unique_ptr<AttackLayer> install(Scenario scenario, Bus& bus, const RemapTable& remap, std::uint64_t attack_seed) {
    scenario.validate();
    for (const auto& id : scenario.listeners) {
        if (!bus.has_topic(raw_topic(id))) throw UnknownSensor("listener '" + id.name() + "' has no topic on the bus");
    }
    auto covered = [&](const SensorId& id) {
        return std::any_of(remap.entries.begin(), remap.entries.end(),
                           [&](const RemapEntry& e) { return e.from == raw_topic(id); });
    };
    for (const auto& step : scenario.actions.steps) {
        for (const auto& id : step.targets) {
            if (!bus.has_topic(raw_topic(id))) {
                throw UnknownSensor("action target '" + id.name() + "' has no topic on the bus");
            }
            if (!covered(id)) throw UnknownSensor("action target '" + id.name() + "' is not covered by the remap");
        }
    }
    bus.install_remap(remap);

    const auto intercepted = scenario.intercepted_sensors();
    std::unique_ptr<AttackLayer> layer(new AttackLayer(std::move(scenario), attack_seed));
    auto* engine = &layer->engine_;
    auto* bus_ptr = &bus;

    std::set<Topic> remapped;
    for (const auto& e : remap.entries) {
        remapped.insert(e.from);
        const bool wanted = std::any_of(intercepted.begin(), intercepted.end(),
                                        [&](const SensorId& id) { return raw_topic(id) == e.from; });
        const Topic to = e.to;
        if (wanted) {
            layer->subscriptions_.push_back(bus.subscribe(e.from, [engine, bus_ptr, to](const SensorSample& s) {
                for (const auto& out : engine->on_sample(s)) bus_ptr->publish(to, out);
            }));
        } else {
            layer->subscriptions_.push_back(
                bus.subscribe(e.from, [bus_ptr, to](const SensorSample& s) { bus_ptr->publish(to, s); }));
        }
    }
    // Listeners outside the remap are observed only; their bridge still delivers.
    for (const auto& id : layer->engine_.scenario().listeners) {
        if (remapped.contains(raw_topic(id))) continue;
        layer->subscriptions_.push_back(
            bus.subscribe(raw_topic(id), [engine](const SensorSample& s) { (void)engine->on_sample(s); }));
    }
    return layer;
}

PassThroughLayer::PassThroughLayer(Bus& bus, const RemapTable& remap) {
    bus.install_remap(remap);
    auto* bus_ptr = &bus;
    for (const auto& e : remap.entries) {
        const Topic to = e.to;
        subscriptions_.push_back(
            bus.subscribe(e.from, [bus_ptr, to](const SensorSample& s) { bus_ptr->publish(to, s); }));
    }
}

}  // namespace scart
