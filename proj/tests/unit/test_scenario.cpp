#include <gtest/gtest.h>

#include "scart/error.hpp"
#include "scart/scenario.hpp"

using namespace scart;

namespace {

const SensorId kLat{"latitude"};
const SensorId kAlt{"altitude"};

Scenario noise_scenario(double sigma) {
    Scenario s;
    s.label = "noise";
    s.listeners = {kLat};
    s.actions.steps = {Manipulation{AddWhiteNoise{sigma}, {kLat}}};
    return s;
}

EngineState with_alt(double alt) {
    EngineState st;
    st.history.append({kAlt, Timestamp{0}, alt});
    return st;
}

void wire(Bus& bus) {
    for (const SensorId& id : {kLat, kAlt}) {
        bus.register_topic(raw_topic(id));
        bus.register_topic(nav_topic(id));
        bus.bridge(raw_topic(id), nav_topic(id));
    }
}

}  // namespace

TEST(Conditions, EmptyConjunctionHoldsEmptyDisjunctionDoesNot) {
    EXPECT_TRUE(eval_all({}, EngineState{}, Timestamp{0}));
    EXPECT_FALSE(eval_any({}, EngineState{}, Timestamp{0}));
}

TEST(Conditions, SensorPredicateReadsLatestValue) {
    const std::vector<Condition> c{SensorPredicate{kAlt, Comparison::greater, 10.0, 0.0}};
    EXPECT_TRUE(eval_all(c, with_alt(12.0), Timestamp{0}));
    EXPECT_FALSE(eval_all(c, with_alt(10.0), Timestamp{0}));
    EXPECT_FALSE(eval_all(c, EngineState{}, Timestamp{0})) << "no reading yet";
}

TEST(Conditions, ConjunctionNeedsEveryCondition) {
    const std::vector<Condition> c{TimeElapsed{Timestamp{5}}, SensorPredicate{kAlt, Comparison::greater, 10.0, 0.0}};
    EXPECT_FALSE(eval_all(c, with_alt(12.0), Timestamp{3}));
    EXPECT_TRUE(eval_all(c, with_alt(12.0), Timestamp{5}));
    EXPECT_TRUE(eval_any(c, with_alt(12.0), Timestamp{3}));
}

TEST(Conditions, ComparisonOperators) {
    auto holds = [](Comparison cmp, double v, double eps = 0.0) {
        return eval(SensorPredicate{kAlt, cmp, 5.0, eps}, with_alt(v), Timestamp{0});
    };
    EXPECT_TRUE(holds(Comparison::less, 4.9));
    EXPECT_FALSE(holds(Comparison::less, 5.0));
    EXPECT_TRUE(holds(Comparison::less_equal, 5.0));
    EXPECT_TRUE(holds(Comparison::greater_equal, 5.0));
    EXPECT_TRUE(holds(Comparison::approx_equal, 5.05, 0.1));
    EXPECT_FALSE(holds(Comparison::approx_equal, 5.2, 0.1));
    for (auto cmp : {Comparison::less, Comparison::less_equal, Comparison::greater, Comparison::greater_equal,
                     Comparison::approx_equal}) {
        EXPECT_EQ(comparison_from_string(to_string(cmp)), cmp);
    }
}

TEST(Conditions, WaypointReachedUsesMissionProgress) {
    EngineState st;
    st.waypoints_reached = 3;  // waypoints 0, 1, 2 reached
    EXPECT_TRUE(eval(WaypointReached{2}, st, Timestamp{0}));
    EXPECT_FALSE(eval(WaypointReached{3}, st, Timestamp{0}));
}

TEST(Conditions, TimeElapsedIsMonotone) {
    const Condition c = TimeElapsed{Timestamp{1000}};
    bool seen = false;
    for (std::uint64_t t = 0; t < 3000; t += 7) {
        const bool now = eval(c, EngineState{}, Timestamp{t});
        if (seen) EXPECT_TRUE(now);
        seen = seen || now;
    }
    EXPECT_TRUE(seen);
}

TEST(Engine, ArmedUntilStartConditionHolds) {
    auto sc = noise_scenario(1.0);
    sc.start_conditions = {TimeElapsed{Timestamp{2'000'000}}};
    ScenarioEngine e(sc, 1);
    const SensorSample s{kLat, Timestamp{1'000'000}, 47.0};
    EXPECT_EQ(e.on_sample(s), std::vector<SensorSample>{s});
    EXPECT_EQ(e.state().phase, Phase::armed);
}

TEST(Engine, EmptyStartSetActivatesOnFirstSampleAfterWarmup) {
    auto sc = noise_scenario(0.0);
    sc.warmup = Timestamp{0};
    ScenarioEngine e(sc, 1);
    const SensorSample s{kLat, Timestamp{0}, 47.0};
    EXPECT_EQ(e.on_sample(s), std::vector<SensorSample>{s}) << "zero noise leaves the sample unchanged";
    EXPECT_EQ(e.state().phase, Phase::active);
    EXPECT_EQ(e.state().window_start, Timestamp{0});
}

TEST(Engine, WarmupBlocksActivation) {
    auto sc = noise_scenario(1.0);
    ScenarioEngine e(sc, 1);
    for (std::uint64_t t = 0; t < 2'000'000; t += 100'000) {
        const SensorSample s{kLat, Timestamp{t}, 1.0};
        EXPECT_EQ(e.on_sample(s), std::vector<SensorSample>{s});
    }
    EXPECT_EQ(e.state().phase, Phase::armed);
    (void)e.on_sample({kLat, Timestamp{2'000'000}, 1.0});
    EXPECT_EQ(e.state().phase, Phase::active);
    EXPECT_EQ(e.state().window_start, Timestamp{2'000'000});
}

TEST(Engine, EndingSampleIsForwardedUnmodifiedAndWindowCloses) {
    auto sc = noise_scenario(5.0);
    sc.warmup = Timestamp{0};
    sc.end_conditions = {TimeElapsed{Timestamp{300}}};
    ScenarioEngine e(sc, 1);
    for (std::uint64_t t = 0; t < 300; t += 100) {
        const auto out = e.on_sample({kLat, Timestamp{t}, 1.0});
        ASSERT_EQ(out.size(), 1u);
        EXPECT_NE(out[0].value, 1.0);
    }
    const SensorSample end{kLat, Timestamp{300}, 1.0};
    EXPECT_EQ(e.on_sample(end), std::vector<SensorSample>{end});
    EXPECT_EQ(e.state().phase, Phase::finished);
    const SensorSample after{kLat, Timestamp{400}, 1.0};
    EXPECT_EQ(e.on_sample(after), std::vector<SensorSample>{after});
    EXPECT_EQ(e.finalize().window, (AttackWindow{Timestamp{0}, Timestamp{300}}));
    EXPECT_EQ(e.activations(), 1u);
}

TEST(Engine, NeverTriggeringRunHasNoWindow) {
    auto sc = noise_scenario(1.0);
    sc.start_conditions = {SensorPredicate{kLat, Comparison::greater, 1e9, 0.0}};
    ScenarioEngine e(sc, 1);
    for (std::uint64_t t = 0; t < 10'000'000; t += 100'000) {
        const SensorSample s{kLat, Timestamp{t}, 47.0};
        EXPECT_EQ(e.on_sample(s), std::vector<SensorSample>{s});
    }
    const auto r = e.finalize();
    EXPECT_FALSE(r.window);
    EXPECT_EQ(r.history.total_samples(), 100u);
}

TEST(Engine, OpenWindowClosesAtLastSample) {
    auto sc = noise_scenario(1.0);
    ScenarioEngine e(sc, 1);
    for (std::uint64_t t = 0; t <= 5'000'000; t += 100'000) (void)e.on_sample({kLat, Timestamp{t}, 1.0});
    EXPECT_EQ(e.finalize().window, (AttackWindow{Timestamp{2'000'000}, Timestamp{5'000'000}}));
}

TEST(Engine, NoReArmWhenStartConditionsHoldAgain) {
    auto sc = noise_scenario(1.0);
    sc.start_conditions = {SensorPredicate{kLat, Comparison::greater, 0.0, 0.0}};
    sc.end_conditions = {SensorPredicate{kLat, Comparison::less, 0.0, 0.0}};
    ScenarioEngine e(sc, 1);
    std::uint64_t t = 2'000'000;
    for (double v : {1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0}) (void)e.on_sample({kLat, Timestamp{t += 100}, v});
    EXPECT_EQ(e.activations(), 1u);
    EXPECT_EQ(e.state().phase, Phase::finished);
}

TEST(Engine, ListenerWithoutActionIsForwardedWhileActive) {
    Scenario sc;
    sc.label = "x";
    sc.listeners = {kLat, kAlt};
    sc.actions.steps = {Manipulation{DisconnectSensor{}, {kLat}}};
    sc.warmup = Timestamp{0};
    ScenarioEngine e(sc, 1);
    const SensorSample alt{kAlt, Timestamp{0}, 3.0};
    EXPECT_EQ(e.on_sample(alt), std::vector<SensorSample>{alt});
    EXPECT_TRUE(e.on_sample({kLat, Timestamp{1}, 3.0}).empty());
    EXPECT_EQ(e.state().history.total_samples(), 2u) << "suppressed samples are still recorded";
}

TEST(Engine, WindowSoundnessAndSingleTransitionOverRandomStreams) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng gen(seed);
        Scenario sc;
        sc.label = "p";
        sc.listeners = {kLat, kAlt};
        sc.start_conditions = {SensorPredicate{kAlt, Comparison::greater, gen.uniform(0, 2), 0.0}};
        sc.end_conditions = {TimeElapsed{Timestamp::from_seconds(gen.uniform(3, 8))}};
        sc.actions.steps = {Manipulation{AvgSensors{4}, {kLat}}, Manipulation{AddWhiteNoise{0.5}, {kLat}}};
        ScenarioEngine e(sc, seed);
        std::vector<std::pair<SensorSample, std::vector<SensorSample>>> io;
        for (std::uint64_t t = 0; t < 10'000'000; t += 50'000) {
            const SensorSample s{gen.uniform() < 0.5 ? kLat : kAlt, Timestamp{t}, gen.uniform(-1, 3)};
            io.emplace_back(s, e.on_sample(s));
        }
        const auto w = e.finalize().window;
        EXPECT_LE(e.activations(), 1u);
        for (const auto& [in, out] : io) {
            const bool modified = out.size() != 1 || out[0] != in;
            if (modified) {
                ASSERT_TRUE(w);
                EXPECT_TRUE(w->contains(in.ts));
                EXPECT_GE(in.ts, sc.warmup);
            }
        }
    }
}

TEST(Scenario, ValidationRules) {
    auto sc = noise_scenario(1.0);
    EXPECT_NO_THROW(sc.validate());
    auto no_listeners = sc;
    no_listeners.listeners.clear();
    EXPECT_THROW(no_listeners.validate(), InvalidArgument);
    auto dup = sc;
    dup.listeners = {kLat, kLat};
    EXPECT_THROW(dup.validate(), InvalidArgument);
    auto unlistened = sc;
    unlistened.start_conditions = {SensorPredicate{kAlt, Comparison::greater, 1.0, 0.0}};
    EXPECT_THROW(unlistened.validate(), InvalidArgument);
    auto outside = sc;
    outside.actions.steps = {Manipulation{DisconnectSensor{}, {kAlt}}};
    EXPECT_NO_THROW(outside.validate()) << "actions may target sensors outside the listeners";
    EXPECT_EQ(outside.intercepted_sensors(), (std::vector<SensorId>{kAlt, kLat}));
}

TEST(Install, FreshLayerIsArmedWithEmptyHistory) {
    Bus bus;
    wire(bus);
    auto layer = install(noise_scenario(0.1), bus, remap_all({kLat, kAlt}), 1);
    EXPECT_EQ(layer->engine().state().phase, Phase::armed);
    EXPECT_TRUE(layer->engine().state().history.empty());
}

TEST(Install, ListenerWithoutTopicIsUnknown) {
    Bus bus;
    wire(bus);
    auto sc = noise_scenario(0.1);
    sc.listeners.push_back("vx");
    EXPECT_THROW(install(sc, bus, remap_all({kLat, kAlt}), 1), UnknownSensor);
}

TEST(Install, SecondInstallIsRejected) {
    Bus bus;
    wire(bus);
    auto first = install(noise_scenario(0.1), bus, remap_all({kLat, kAlt}), 1);
    EXPECT_THROW(install(noise_scenario(0.1), bus, remap_all({kLat, kAlt}), 2), RemapConflict);
}

TEST(Install, IdleLayerIsTransparent) {
    Bus bus;
    wire(bus);
    auto sc = noise_scenario(1.0);
    sc.start_conditions = {SensorPredicate{kLat, Comparison::greater, 1e9, 0.0}};
    auto layer = install(sc, bus, remap_all({kLat, kAlt}), 1);
    std::vector<SensorSample> seen, sent;
    std::vector<Bus::Subscription> subs;
    for (const SensorId& id : {kLat, kAlt}) {
        subs.push_back(bus.subscribe(nav_topic(id), [&](const SensorSample& s) { seen.push_back(s); }));
    }
    Rng gen(4);
    for (std::uint64_t t = 0; t < 5'000'000; t += 10'000) {
        const SensorSample s{gen.uniform() < 0.5 ? kLat : kAlt, Timestamp{t}, gen.gaussian()};
        sent.push_back(s);
        bus.publish(raw_topic(s.sensor), s);
    }
    EXPECT_EQ(seen, sent);
}

TEST(Install, ActiveLayerRewritesNavigatorStream) {
    Bus bus;
    wire(bus);
    Scenario sc;
    sc.label = "dup";
    sc.listeners = {kLat};
    sc.actions.steps = {Manipulation{Duplicate{}, {kLat}}};
    sc.warmup = Timestamp{0};
    auto layer = install(sc, bus, remap_all({kLat, kAlt}), 1);
    std::vector<double> nav;
    auto sub = bus.subscribe(nav_topic(kLat), [&](const SensorSample& s) { nav.push_back(s.value); });
    for (int i = 0; i < 4; ++i) bus.publish(raw_topic(kLat), {kLat, Timestamp{static_cast<std::uint64_t>(i)}, i * 1.0});
    EXPECT_EQ(nav, (std::vector<double>{0.0, 0.0, 1.0, 2.0}));
}

TEST(PassThroughLayer, RepublishesEverything) {
    Bus bus;
    wire(bus);
    PassThroughLayer layer(bus, remap_all({kLat, kAlt}));
    int calls = 0;
    auto sub = bus.subscribe(nav_topic(kAlt), [&](const SensorSample&) { ++calls; });
    bus.publish(raw_topic(kAlt), {kAlt, Timestamp{0}, 1.0});
    EXPECT_EQ(calls, 1);
}
