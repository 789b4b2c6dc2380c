#include "scart/matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "scart/error.hpp"

namespace scart {

namespace {

std::uint32_t full_mask(std::size_t bits) { return (1u << bits) - 1; }

bool subset_of(std::uint32_t mask, std::uint32_t allowed) { return (mask & ~allowed) == 0; }

std::vector<Condition> conditions_for(std::uint32_t mask, const std::array<Condition, kConditionKinds>& table) {
    std::vector<Condition> out;
    for (std::size_t k = 0; k < kConditionKinds; ++k) {
        if (mask & (1u << k)) out.push_back(table[k]);
    }
    return out;
}

// "<ts> waypoint <k> reached" lines of the mission log, as (ts, k + 1).
std::vector<std::pair<Timestamp, std::size_t>> waypoint_progress(const LabeledRun& run) {
    std::vector<std::pair<Timestamp, std::size_t>> out;
    for (const auto& line : run.mission_log) {
        unsigned long long ts = 0;
        unsigned long long k = 0;
        char tail[16] = {};
        if (std::sscanf(line.c_str(), "%llu waypoint %llu %15s", &ts, &k, tail) == 3 && std::string(tail) == "reached") {
            out.emplace_back(Timestamp{ts}, static_cast<std::size_t>(k) + 1);
        }
    }
    return out;
}

}  // namespace

MatrixDefaults MatrixDefaults::standard() {
    const std::vector<SensorId> gps{"latitude", "longitude"};
    constexpr double lat0 = 47.397404;  // default mission origin

    MatrixDefaults d;
    d.manipulations = {
        Manipulation{Duplicate{}, gps},
        Manipulation{RandomChange{lat0 - 1e-4, lat0 + 1e-4}, {SensorId("latitude")}},
        Manipulation{DisconnectSensor{}, gps},
        Manipulation{AvgSensors{10}, gps},
        Manipulation{AddWhiteNoise{1e-5}, gps},
    };
    d.start_conditions = {
        Condition{TimeElapsed{Timestamp::from_seconds(15.0)}},
        Condition{SensorPredicate{SensorId("altitude"), Comparison::greater, 4.0, 0.0}},
        Condition{WaypointReached{2}},
    };
    d.end_conditions = {
        Condition{TimeElapsed{Timestamp::from_seconds(35.0)}},
        Condition{SensorPredicate{SensorId("altitude"), Comparison::less, 1.0, 0.0}},
        Condition{WaypointReached{4}},
    };
    d.listeners = {"latitude", "longitude", "altitude"};
    return d;
}

void MatrixDefaults::validate() const {
    for (std::size_t k = 0; k < kManipulationKinds; ++k) {
        if (manipulations[k].kind_index() != k) {
            throw InvalidArgument("matrix defaults: manipulation slot " + std::to_string(k) + " must be " +
                                  std::string(kManipulationNames[k]));
        }
        manipulations[k].validate();
    }
    for (std::size_t k = 0; k < kConditionKinds; ++k) {
        if (start_conditions[k].index() != k || end_conditions[k].index() != k) {
            throw InvalidArgument("matrix defaults: condition slot " + std::to_string(k) + " must be " +
                                  std::string(kConditionNames[k]));
        }
    }
    if (!subset_of(manipulation_mask, full_mask(kManipulationKinds)) || !subset_of(condition_mask, full_mask(kConditionKinds))) {
        throw InvalidArgument("matrix defaults: kind mask out of range");
    }
}

std::string spec_label(std::uint32_t chain_mask, std::uint32_t start_mask, std::uint32_t end_mask) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%02u_s%u_e%u", chain_mask, start_mask, end_mask);
    return buf;
}

std::vector<AttackSpec> enumerate_matrix(const MatrixDefaults& defaults) {
    defaults.validate();
    std::vector<AttackSpec> specs;
    for (std::uint32_t chain = 0; chain <= full_mask(kManipulationKinds); ++chain) {
        if (!subset_of(chain, defaults.manipulation_mask)) continue;
        for (std::uint32_t start = 0; start <= full_mask(kConditionKinds); ++start) {
            if (!subset_of(start, defaults.condition_mask)) continue;
            for (std::uint32_t end = 0; end <= full_mask(kConditionKinds); ++end) {
                if (!subset_of(end, defaults.condition_mask)) continue;
                specs.push_back({chain, start, end, spec_label(chain, start, end)});
            }
        }
    }
    return specs;
}

AttackChain chain_for(std::uint32_t chain_mask, const MatrixDefaults& defaults) {
    AttackChain chain;
    for (std::size_t k = 0; k < kManipulationKinds; ++k) {
        if (chain_mask & (1u << k)) chain.steps.push_back(defaults.manipulations[k]);
    }
    return chain;
}

Scenario to_scenario(const AttackSpec& spec, const MatrixDefaults& defaults) {
    Scenario s;
    s.label = spec.label;
    s.start_conditions = conditions_for(spec.start_mask, defaults.start_conditions);
    s.end_conditions = conditions_for(spec.end_mask, defaults.end_conditions);
    s.actions = chain_for(spec.chain_mask, defaults);
    s.warmup = defaults.warmup;

    std::set<SensorId> seen;
    auto add = [&](const SensorId& id) {
        if (seen.insert(id).second) s.listeners.push_back(id);
    };
    for (const auto& id : defaults.listeners) add(id);
    for (const auto& list : {s.start_conditions, s.end_conditions}) {
        for (const auto& c : list) {
            if (const auto* p = std::get_if<SensorPredicate>(&c)) add(p->sensor);
        }
    }
    s.validate();
    return s;
}

LabeledRun apply_offline(const AttackChain& chain, const LabeledRun& run, const AttackWindow& window, Rng& rng) {
    if (run.meta.mode != RunMode::baseline || run.window) {
        throw AlreadyAttacked("run '" + run.meta.run_id + "' already carries an attack");
    }
    if (window.end < window.start || run.rows.empty() || window.end > run.last_timestamp()) {
        throw WindowOutOfRange("window [" + std::to_string(window.start.micros) + ", " +
                               std::to_string(window.end.micros) + "] is outside run '" + run.meta.run_id + "'");
    }
    chain.validate();

    const auto columns = run.sensor_ids();
    History attacked;
    History observed;
    for (const auto& s : ordered_samples(run.nav, columns)) {
        if (window.contains(s.ts)) {
            if (auto out = apply_chain(chain, s, observed.series(s.sensor), rng)) attacked.append(*out);
        } else {
            attacked.append(s);
        }
        observed.append(s);
    }

    LabeledRun out = run;
    out.meta.mode = RunMode::csv_attack;
    out.window = window;
    out.nav = std::move(attacked);
    out.rows = merge_rows(out.nav, columns, out.window);
    out.engine_log.push_back("csv window " + std::to_string(window.start.micros) + " " +
                             std::to_string(window.end.micros));
    return out;
}

std::optional<AttackWindow> replay_window(const Scenario& scenario, const LabeledRun& run) {
    ScenarioEngine engine(scenario, 0);
    const auto progress = waypoint_progress(run);
    const auto intercepted = scenario.intercepted_sensors();
    const std::set<SensorId> wanted(intercepted.begin(), intercepted.end());

    std::size_t reached = 1;  // the takeoff point counts as reached at start
    std::size_t next_progress = 0;
    for (const auto& s : ordered_samples(run.nav, run.sensor_ids())) {
        while (next_progress < progress.size() && progress[next_progress].first <= s.ts) {
            reached = std::max(reached, progress[next_progress].second);
            ++next_progress;
        }
        engine.set_waypoints_reached(reached);
        if (wanted.contains(s.sensor)) (void)engine.on_sample(s);
    }
    return engine.finalize().window;
}

LabeledRun csv_attack(const Scenario& scenario, const LabeledRun& baseline, std::uint64_t attack_seed) {
    auto window = replay_window(scenario, baseline);
    if (!window) {
        LabeledRun out = baseline;
        if (out.window || out.meta.mode != RunMode::baseline) {
            throw AlreadyAttacked("run '" + baseline.meta.run_id + "' already carries an attack");
        }
        out.meta.mode = RunMode::csv_attack;
        out.meta.scenario = scenario.label;
        out.engine_log.push_back("csv window none");
        return out;
    }
    Rng rng(attack_seed);
    auto out = apply_offline(scenario.actions, baseline, *window, rng);
    out.meta.scenario = scenario.label;
    return out;
}

}  // namespace scart
