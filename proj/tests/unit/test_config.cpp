#include <gtest/gtest.h>

#include <functional>

#include "scart/config.hpp"
#include "scart/error.hpp"

using namespace scart;
using namespace scart::config;

namespace {

std::size_t error_line(const std::function<void()>& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.line();
    }
    ADD_FAILURE() << "no ParseError";
    return 0;
}

Scenario full_scenario() {
    Scenario sc;
    sc.label = "everything";
    sc.warmup = Timestamp{1'500'000};
    sc.listeners = {"latitude", "longitude", "altitude"};
    sc.start_conditions = {TimeElapsed{Timestamp{20'000'000}},
                           SensorPredicate{"altitude", Comparison::approx_equal, 5.0, 0.25}};
    sc.end_conditions = {WaypointReached{3}, SensorPredicate{"altitude", Comparison::less_equal, 1.0, 0.0}};
    sc.actions.steps = {Manipulation{Duplicate{}, {"latitude"}},
                        Manipulation{RandomChange{47.3, 47.4}, {"latitude"}},
                        Manipulation{DisconnectSensor{}, {"vx"}},
                        Manipulation{AvgSensors{7}, {"longitude"}},
                        Manipulation{AddWhiteNoise{1.25e-5}, {"latitude", "longitude"}}};
    return sc;
}

}  // namespace

TEST(ConfigScenario, RoundTrip) {
    const auto sc = full_scenario();
    EXPECT_EQ(parse_scenario(dump_scenario(sc)), sc);
}

TEST(ConfigScenario, ShippedFilesParse) {
    for (const char* name : {"gps_white_noise", "passthrough", "climb_disconnect"}) {
        const auto path = std::string(SCART_SOURCE_DIR) + "/scenarios/" + name + ".yaml";
        const auto sc = parse_scenario(read_text(path), path);
        EXPECT_EQ(sc.label, name);
        EXPECT_EQ(parse_scenario(dump_scenario(sc)), sc);
    }
}

TEST(ConfigShipped, DefaultsMatchTheBuiltIns) {
    const std::string dir = std::string(SCART_SOURCE_DIR) + "/scenarios/";
    EXPECT_EQ(parse_mission(read_text(dir + "square30.yaml")), MissionPlan::square());
    EXPECT_EQ(parse_sim_config(read_text(dir + "sim_default.yaml")), SimConfig{});
    const auto d = parse_matrix_defaults(read_text(dir + "matrix_defaults.yaml"));
    EXPECT_EQ(enumerate_matrix(d).size(), 2048u);
    EXPECT_EQ(d.end_conditions, MatrixDefaults::standard().end_conditions);
}

TEST(ConfigScenario, ErrorsCarryLineNumbers) {
    const std::string head = "label: x\nlisteners: [latitude]\n";
    EXPECT_EQ(error_line([&] { parse_scenario(head + "start_conditions:\n  - {type: Never}\n"); }), 4u);
    EXPECT_EQ(error_line([&] { parse_scenario(head + "bogus: 1\n"); }), 3u);
    EXPECT_EQ(error_line([&] { parse_scenario(head + "actions:\n  - {type: AddWhiteNoise, targets: [latitude]}\n"); }),
              4u);
    EXPECT_EQ(error_line([&] { parse_scenario("label: x\nlisteners: [latitude\n"); }), 3u);
    EXPECT_EQ(error_line([&] {
                  parse_scenario(head + "start_conditions:\n  - {type: SensorPredicate, sensor: altitude, op: \">\", "
                                        "value: oops}\n");
              }),
              4u);
    EXPECT_THROW(parse_scenario("listeners: [latitude]\n"), ParseError);
    EXPECT_THROW(parse_scenario("- 1\n- 2\n"), ParseError);
}

TEST(ConfigScenario, InvariantViolationsAreParseErrors) {
    EXPECT_THROW(parse_scenario("label: x\nlisteners: []\n"), ParseError);
    EXPECT_THROW(parse_scenario("label: x\nlisteners: [latitude]\nactions:\n"
                                "  - {type: AddWhiteNoise, sigma: -1, targets: [latitude]}\n"),
                 ParseError);
    EXPECT_THROW(parse_scenario("label: x\nlisteners: [\"no spaces\"]\n"), ParseError);
}

TEST(ConfigMission, RoundTrip) {
    MissionPlan plan = MissionPlan::square(20.0, 7.5);
    plan.name = "small";
    plan.cruise_speed = 1.5;
    EXPECT_EQ(parse_mission(dump_mission(plan)), plan);
}

TEST(ConfigMission, WaypointShape) {
    EXPECT_EQ(error_line([] { parse_mission("name: m\nwaypoints:\n  - [0, 0, 0]\n  - [1, 2]\n"); }), 4u);
    EXPECT_THROW(parse_mission("name: m\nwaypoints:\n  - [0, 0, 0]\n"), ParseError);
}

TEST(ConfigSim, RoundTripAndOverrides) {
    SimConfig cfg;
    cfg.wind_x = 0.5;
    cfg.wind_y = -0.25;
    cfg.max_duration = 90.0;
    cfg.max_accel = 0.0;
    cfg.sensors[0].noise_sigma = 3e-6;
    EXPECT_EQ(parse_sim_config(dump_sim_config(cfg)), cfg);

    const auto partial = parse_sim_config("yaw_rate: 45\n", cfg);
    EXPECT_EQ(partial.yaw_rate, 45.0);
    EXPECT_EQ(partial.wind_x, cfg.wind_x);
    EXPECT_EQ(partial.sensors, cfg.sensors);
}

TEST(ConfigSim, Rejections) {
    EXPECT_EQ(error_line([] { parse_sim_config("dt: 0.01\nspeed: 3\n"); }), 2u);
    EXPECT_THROW(parse_sim_config("dt: -1\n"), ParseError);
    EXPECT_THROW(parse_sim_config("sensors:\n  - {name: latitude, rate_hz: 33}\n"), ParseError);
}

TEST(ConfigMatrix, RoundTrip) {
    auto d = MatrixDefaults::standard();
    d.manipulations[4] = Manipulation{AddWhiteNoise{3e-5}, {"latitude"}};
    d.manipulation_mask = 0b10011;
    d.condition_mask = 0b101;
    d.warmup = Timestamp{3'000'000};
    EXPECT_EQ(parse_matrix_defaults(dump_matrix_defaults(d)), d);
}

TEST(ConfigMatrix, PartialFileReplacesKindSlots) {
    const auto d = parse_matrix_defaults(
        "manipulations:\n  - {type: AddWhiteNoise, sigma: 0.001, targets: [altitude]}\n"
        "kinds:\n  manipulations: [AddWhiteNoise, Duplicate]\n  conditions: [TimeElapsed]\n");
    auto expected = MatrixDefaults::standard();
    expected.manipulations[4] = Manipulation{AddWhiteNoise{1e-3}, {"altitude"}};
    expected.manipulation_mask = 0b10001;
    expected.condition_mask = 0b001;
    EXPECT_EQ(d, expected);
    EXPECT_THROW(parse_matrix_defaults("kinds:\n  manipulations: [Teleport]\n"), ParseError);
}

TEST(ConfigMatrix, SpecFilesParseBackToTheirScenario) {
    const auto d = MatrixDefaults::standard();
    for (const auto& spec : enumerate_matrix(d)) {
        if (spec.matrix_index() % 97 != 0) continue;
        EXPECT_EQ(parse_scenario(dump_attack_spec(spec, d)), to_scenario(spec, d)) << spec.label;
    }
}

TEST(ConfigIo, MissingFileIsIoFailure) { EXPECT_THROW(read_text("/nonexistent/scart.yaml"), IoFailure); }
