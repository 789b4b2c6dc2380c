#include "scart/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "scart/error.hpp"

namespace scart::config {

namespace {

// Parsing context: source name for error messages.
class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    YAML::Node load(const std::string& text) const {
        try {
            auto root = YAML::Load(text);
            if (!root.IsMap()) throw ParseError(source_, 1, "expected a mapping at top level");
            return root;
        } catch (const YAML::Exception& e) {
            throw ParseError(source_, static_cast<std::size_t>(e.mark.line + 1), e.msg);
        }
    }

    [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
        const auto mark = node.Mark();
        throw ParseError(source_, mark.is_null() ? 0 : static_cast<std::size_t>(mark.line + 1), msg);
    }

    void check_keys(const YAML::Node& node, std::initializer_list<std::string_view> allowed) const {
        if (!node.IsMap()) fail(node, "expected a mapping");
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                fail(kv.first, "unknown key '" + key + "'");
            }
        }
    }

    YAML::Node require(const YAML::Node& node, const std::string& key) const {
        auto child = node[key];
        if (!child) fail(node, "missing key '" + key + "'");
        return child;
    }

    template <class T>
    T as(const YAML::Node& node, const char* what) const {
        try {
            if (!node.IsScalar()) fail(node, std::string("expected a scalar for ") + what);
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, std::string("bad value for ") + what + ": '" + node.Scalar() + "'");
        }
    }

    template <class T>
    T get(const YAML::Node& node, const std::string& key) const {
        return as<T>(require(node, key), key.c_str());
    }

    template <class T>
    T get_or(const YAML::Node& node, const std::string& key, T fallback) const {
        auto child = node[key];
        return child ? as<T>(child, key.c_str()) : fallback;
    }

    SensorId sensor(const YAML::Node& node) const {
        try {
            return SensorId(as<std::string>(node, "sensor"));
        } catch (const InvalidArgument& e) {
            fail(node, e.what());
        }
    }

    std::vector<SensorId> sensors(const YAML::Node& node, const char* what) const {
        if (!node.IsSequence()) fail(node, std::string("expected a list for ") + what);
        std::vector<SensorId> out;
        for (const auto& item : node) out.push_back(sensor(item));
        return out;
    }

    Condition condition(const YAML::Node& node) const {
        const auto type = get<std::string>(node, "type");
        if (type == "TimeElapsed") {
            check_keys(node, {"type", "at_us"});
            return TimeElapsed{Timestamp{get<std::uint64_t>(node, "at_us")}};
        }
        if (type == "SensorPredicate") {
            check_keys(node, {"type", "sensor", "op", "value", "epsilon"});
            SensorPredicate p;
            p.sensor = sensor(require(node, "sensor"));
            try {
                p.cmp = comparison_from_string(get<std::string>(node, "op"));
            } catch (const InvalidArgument& e) {
                fail(node["op"], e.what());
            }
            p.threshold = get<double>(node, "value");
            p.epsilon = get_or<double>(node, "epsilon", 0.0);
            return p;
        }
        if (type == "WaypointReached") {
            check_keys(node, {"type", "index"});
            return WaypointReached{get<std::size_t>(node, "index")};
        }
        fail(node["type"], "unknown condition type '" + type + "'");
    }

    std::vector<Condition> conditions(const YAML::Node& node, const char* what) const {
        if (!node) return {};
        if (!node.IsSequence()) fail(node, std::string("expected a list for ") + what);
        std::vector<Condition> out;
        for (const auto& item : node) out.push_back(condition(item));
        return out;
    }

    Manipulation manipulation(const YAML::Node& node) const {
        const auto type = get<std::string>(node, "type");
        Manipulation m;
        if (type == "Duplicate") {
            check_keys(node, {"type", "targets"});
            m.kind = Duplicate{};
        } else if (type == "RandomChange") {
            check_keys(node, {"type", "targets", "lo", "hi"});
            m.kind = RandomChange{get<double>(node, "lo"), get<double>(node, "hi")};
        } else if (type == "DisconnectSensor") {
            check_keys(node, {"type", "targets"});
            m.kind = DisconnectSensor{};
        } else if (type == "AvgSensors") {
            check_keys(node, {"type", "targets", "window_n"});
            m.kind = AvgSensors{get_or<std::size_t>(node, "window_n", 10)};
        } else if (type == "AddWhiteNoise") {
            check_keys(node, {"type", "targets", "sigma"});
            m.kind = AddWhiteNoise{get<double>(node, "sigma")};
        } else {
            fail(node["type"], "unknown action type '" + type + "'");
        }
        m.targets = sensors(require(node, "targets"), "targets");
        try {
            m.validate();
        } catch (const InvalidArgument& e) {
            fail(node, e.what());
        }
        return m;
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

std::string num(double v) { return format_double(v); }

std::string sensor_list(const std::vector<SensorId>& ids) {
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += ids[i].name();
    }
    return out + "]";
}

std::string condition_yaml(const Condition& c) {
    if (const auto* t = std::get_if<TimeElapsed>(&c)) {
        return "{type: TimeElapsed, at_us: " + std::to_string(t->threshold.micros) + "}";
    }
    if (const auto* p = std::get_if<SensorPredicate>(&c)) {
        std::string out = "{type: SensorPredicate, sensor: " + p->sensor.name() + ", op: \"" +
                          std::string(to_string(p->cmp)) + "\", value: " + num(p->threshold);
        if (p->cmp == Comparison::approx_equal) out += ", epsilon: " + num(p->epsilon);
        return out + "}";
    }
    const auto& w = std::get<WaypointReached>(c);
    return "{type: WaypointReached, index: " + std::to_string(w.index) + "}";
}

std::string manipulation_yaml(const Manipulation& m) {
    std::string out = "{type: " + std::string(m.name());
    if (const auto* r = std::get_if<RandomChange>(&m.kind)) out += ", lo: " + num(r->lo) + ", hi: " + num(r->hi);
    if (const auto* a = std::get_if<AvgSensors>(&m.kind)) out += ", window_n: " + std::to_string(a->window_n);
    if (const auto* n = std::get_if<AddWhiteNoise>(&m.kind)) out += ", sigma: " + num(n->sigma);
    return out + ", targets: " + sensor_list(m.targets) + "}";
}

template <class T, class F>
std::string block_list(const std::string& key, const std::vector<T>& items, F&& render) {
    if (items.empty()) return key + ": []\n";
    std::string out = key + ":\n";
    for (const auto& item : items) out += "  - " + render(item) + "\n";
    return out;
}

std::vector<SensorId> scenario_sensors(const Reader& r, const YAML::Node& node) {
    return r.sensors(node, "listeners");
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    Reader r(source);
    auto root = r.load(text);
    r.check_keys(root, {"label", "warmup_us", "listeners", "start_conditions", "end_conditions", "actions", "matrix"});
    Scenario s;
    s.label = r.get<std::string>(root, "label");
    s.warmup = Timestamp{r.get_or<std::uint64_t>(root, "warmup_us", kDefaultWarmup.micros)};
    s.listeners = scenario_sensors(r, r.require(root, "listeners"));
    s.start_conditions = r.conditions(root["start_conditions"], "start_conditions");
    s.end_conditions = r.conditions(root["end_conditions"], "end_conditions");
    auto actions = root["actions"];
    if (actions) {
        if (!actions.IsSequence()) r.fail(actions, "expected a list for actions");
        for (const auto& item : actions) s.actions.steps.push_back(r.manipulation(item));
    }
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        r.fail(root, e.what());
    }
    return s;
}

std::string dump_scenario(const Scenario& s) {
    std::string out = "label: " + s.label + "\n";
    out += "warmup_us: " + std::to_string(s.warmup.micros) + "\n";
    out += "listeners: " + sensor_list(s.listeners) + "\n";
    out += block_list("start_conditions", s.start_conditions, condition_yaml);
    out += block_list("end_conditions", s.end_conditions, condition_yaml);
    out += block_list("actions", s.actions.steps, manipulation_yaml);
    return out;
}

MissionPlan parse_mission(const std::string& text, const std::string& source) {
    Reader r(source);
    auto root = r.load(text);
    r.check_keys(root, {"name", "origin", "cruise_speed", "acceptance_radius", "waypoints"});
    MissionPlan plan;
    plan.name = r.get_or<std::string>(root, "name", "mission");
    if (auto origin = root["origin"]) {
        r.check_keys(origin, {"lat", "lon"});
        plan.origin_lat = r.get<double>(origin, "lat");
        plan.origin_lon = r.get<double>(origin, "lon");
    }
    plan.cruise_speed = r.get_or<double>(root, "cruise_speed", plan.cruise_speed);
    plan.acceptance_radius = r.get_or<double>(root, "acceptance_radius", plan.acceptance_radius);
    auto wps = r.require(root, "waypoints");
    if (!wps.IsSequence()) r.fail(wps, "expected a list of [x, y, z] waypoints");
    for (const auto& wp : wps) {
        if (!wp.IsSequence() || wp.size() != 3) r.fail(wp, "waypoint must be [x, y, z]");
        plan.waypoints.push_back({r.as<double>(wp[0], "x"), r.as<double>(wp[1], "y"), r.as<double>(wp[2], "z")});
    }
    try {
        plan.validate();
    } catch (const InvalidArgument& e) {
        r.fail(root, e.what());
    }
    return plan;
}

std::string dump_mission(const MissionPlan& plan) {
    std::string out = "name: " + plan.name + "\n";
    out += "origin: {lat: " + num(plan.origin_lat) + ", lon: " + num(plan.origin_lon) + "}\n";
    out += "cruise_speed: " + num(plan.cruise_speed) + "\n";
    out += "acceptance_radius: " + num(plan.acceptance_radius) + "\n";
    out += block_list("waypoints", plan.waypoints,
                      [](const Vec3& w) { return "[" + num(w.x) + ", " + num(w.y) + ", " + num(w.z) + "]"; });
    return out;
}

SimConfig parse_sim_config(const std::string& text, SimConfig base, const std::string& source) {
    Reader r(source);
    auto root = r.load(text);
    r.check_keys(root, {"dt", "wind", "max_duration", "warmup_us", "approach_gain", "cross_track_gain", "yaw_rate", "notice_jump",
                        "max_accel", "sensors"});
    base.dt = r.get_or<double>(root, "dt", base.dt);
    if (auto wind = root["wind"]) {
        if (!wind.IsSequence() || wind.size() != 2) r.fail(wind, "wind must be [wx, wy]");
        base.wind_x = r.as<double>(wind[0], "wind x");
        base.wind_y = r.as<double>(wind[1], "wind y");
    }
    base.max_duration = r.get_or<double>(root, "max_duration", base.max_duration);
    base.warmup = Timestamp{r.get_or<std::uint64_t>(root, "warmup_us", base.warmup.micros)};
    base.approach_gain = r.get_or<double>(root, "approach_gain", base.approach_gain);
    base.cross_track_gain = r.get_or<double>(root, "cross_track_gain", base.cross_track_gain);
    base.yaw_rate = r.get_or<double>(root, "yaw_rate", base.yaw_rate);
    base.notice_jump = r.get_or<double>(root, "notice_jump", base.notice_jump);
    base.max_accel = r.get_or<double>(root, "max_accel", base.max_accel);
    if (auto sensors = root["sensors"]) {
        if (!sensors.IsSequence()) r.fail(sensors, "expected a list of sensor channels");
        base.sensors.clear();
        for (const auto& ch : sensors) {
            r.check_keys(ch, {"name", "rate_hz", "noise"});
            base.sensors.push_back({r.sensor(r.require(ch, "name")), r.get<double>(ch, "rate_hz"),
                                    r.get_or<double>(ch, "noise", 0.0)});
        }
    }
    try {
        base.validate();
    } catch (const InvalidArgument& e) {
        r.fail(root, e.what());
    }
    return base;
}

std::string dump_sim_config(const SimConfig& cfg) {
    std::string out = "dt: " + num(cfg.dt) + "\n";
    out += "wind: [" + num(cfg.wind_x) + ", " + num(cfg.wind_y) + "]\n";
    out += "max_duration: " + num(cfg.max_duration) + "\n";
    out += "warmup_us: " + std::to_string(cfg.warmup.micros) + "\n";
    out += "approach_gain: " + num(cfg.approach_gain) + "\n";
    out += "cross_track_gain: " + num(cfg.cross_track_gain) + "\n";
    out += "yaw_rate: " + num(cfg.yaw_rate) + "\n";
    out += "notice_jump: " + num(cfg.notice_jump) + "\n";
    out += "max_accel: " + num(cfg.max_accel) + "\n";
    out += block_list("sensors", cfg.sensors, [](const SensorChannel& ch) {
        return "{name: " + ch.id.name() + ", rate_hz: " + num(ch.rate_hz) + ", noise: " + num(ch.noise_sigma) + "}";
    });
    return out;
}

MatrixDefaults parse_matrix_defaults(const std::string& text, const std::string& source) {
    Reader r(source);
    auto root = r.load(text);
    r.check_keys(root, {"listeners", "warmup_us", "manipulations", "start_conditions", "end_conditions", "kinds"});
    MatrixDefaults d = MatrixDefaults::standard();
    if (auto listeners = root["listeners"]) d.listeners = r.sensors(listeners, "listeners");
    d.warmup = Timestamp{r.get_or<std::uint64_t>(root, "warmup_us", d.warmup.micros)};

    // Each entry replaces the default of its kind.
    if (auto ms = root["manipulations"]) {
        if (!ms.IsSequence()) r.fail(ms, "expected a list for manipulations");
        for (const auto& item : ms) {
            auto m = r.manipulation(item);
            d.manipulations[m.kind_index()] = m;
        }
    }
    for (auto [key, table] : {std::pair{"start_conditions", &d.start_conditions}, std::pair{"end_conditions", &d.end_conditions}}) {
        for (auto& c : r.conditions(root[key], key)) (*table)[c.index()] = c;
    }
    if (auto kinds = root["kinds"]) {
        r.check_keys(kinds, {"manipulations", "conditions"});
        auto mask_of = [&](const YAML::Node& list, auto names, const char* what) {
            std::uint32_t mask = 0;
            if (!list.IsSequence()) r.fail(list, std::string("expected a list for ") + what);
            for (const auto& item : list) {
                auto name = r.as<std::string>(item, what);
                auto it = std::find(names.begin(), names.end(), name);
                if (it == names.end()) r.fail(item, "unknown kind '" + name + "'");
                mask |= 1u << static_cast<std::uint32_t>(it - names.begin());
            }
            return mask;
        };
        if (kinds["manipulations"]) d.manipulation_mask = mask_of(kinds["manipulations"], kManipulationNames, "manipulations");
        if (kinds["conditions"]) d.condition_mask = mask_of(kinds["conditions"], kConditionNames, "conditions");
    }
    try {
        d.validate();
    } catch (const InvalidArgument& e) {
        r.fail(root, e.what());
    }
    return d;
}

std::string dump_matrix_defaults(const MatrixDefaults& d) {
    std::string out = "listeners: " + sensor_list(d.listeners) + "\n";
    out += "warmup_us: " + std::to_string(d.warmup.micros) + "\n";
    out += block_list("manipulations", std::vector<Manipulation>(d.manipulations.begin(), d.manipulations.end()),
                      manipulation_yaml);
    out += block_list("start_conditions", std::vector<Condition>(d.start_conditions.begin(), d.start_conditions.end()),
                      condition_yaml);
    out += block_list("end_conditions", std::vector<Condition>(d.end_conditions.begin(), d.end_conditions.end()),
                      condition_yaml);
    auto names = [](std::uint32_t mask, const auto& table) {
        std::string s = "[";
        bool first = true;
        for (std::size_t k = 0; k < table.size(); ++k) {
            if (!(mask & (1u << k))) continue;
            if (!first) s += ", ";
            s += table[k];
            first = false;
        }
        return s + "]";
    };
    out += "kinds:\n  manipulations: " + names(d.manipulation_mask, kManipulationNames) +
           "\n  conditions: " + names(d.condition_mask, kConditionNames) + "\n";
    return out;
}

std::string dump_attack_spec(const AttackSpec& spec, const MatrixDefaults& defaults) {
    auto text = dump_scenario(to_scenario(spec, defaults));
    text += "matrix: {chain_mask: " + std::to_string(spec.chain_mask) + ", start_mask: " +
            std::to_string(spec.start_mask) + ", end_mask: " + std::to_string(spec.end_mask) + "}\n";
    return text;
}

}  // namespace scart::config
