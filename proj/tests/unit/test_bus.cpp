#include <cmath>
#include <gtest/gtest.h>

#include "scart/bus.hpp"
#include "scart/error.hpp"

using namespace scart;

namespace {

SensorSample lat(std::uint64_t ts, double v) { return {"latitude", Timestamp{ts}, v}; }

}  // namespace

TEST(Bus, PublishWithoutSubscribersSucceeds) {
    Bus bus;
    bus.register_topic(Topic{"t"});
    EXPECT_NO_THROW(bus.publish(Topic{"t"}, lat(0, 1)));
}

TEST(Bus, SubscribersRunInRegistrationOrder) {
    Bus bus;
    const Topic t{"t"};
    bus.register_topic(t);
    std::vector<std::string> trace;
    auto a = bus.subscribe(t, [&](const SensorSample& s) { trace.push_back("A" + std::to_string(s.value)); });
    auto b = bus.subscribe(t, [&](const SensorSample& s) { trace.push_back("B" + std::to_string(s.value)); });
    bus.publish(t, lat(0, 1));
    EXPECT_EQ(trace, (std::vector<std::string>{"A" + std::to_string(1.0), "B" + std::to_string(1.0)}));
}

TEST(Bus, UnknownTopicIsRejected) {
    Bus bus;
    EXPECT_THROW(bus.publish(Topic{"nope"}, lat(0, 1)), UnknownTopic);
    EXPECT_THROW((void)bus.subscribe(Topic{"nope"}, [](const SensorSample&) {}), UnknownTopic);
}

TEST(Bus, NonFiniteSampleIsRejected) {
    Bus bus;
    bus.register_topic(Topic{"t"});
    EXPECT_THROW(bus.publish(Topic{"t"}, lat(0, std::nan(""))), NonFiniteSample);
}

TEST(Bus, ReleasedSubscriptionIsNotInvoked) {
    Bus bus;
    const Topic t{"t"};
    bus.register_topic(t);
    int calls = 0;
    auto sub = bus.subscribe(t, [&](const SensorSample&) { ++calls; });
    bus.publish(t, lat(0, 1));
    sub.release();
    EXPECT_FALSE(sub.active());
    bus.publish(t, lat(1, 1));
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(bus.subscriber_count(t), 0u);
}

TEST(Bus, SameCallbackSubscribedTwiceRunsTwice) {
    Bus bus;
    const Topic t{"t"};
    bus.register_topic(t);
    int calls = 0;
    auto cb = [&](const SensorSample&) { ++calls; };
    auto a = bus.subscribe(t, cb);
    auto b = bus.subscribe(t, cb);
    bus.publish(t, lat(0, 1));
    EXPECT_EQ(calls, 2);
}

TEST(Bus, ReleaseDuringPublishIsSafe) {
    Bus bus;
    const Topic t{"t"};
    bus.register_topic(t);
    int second = 0;
    Bus::Subscription b;
    auto a = bus.subscribe(t, [&](const SensorSample&) { b.release(); });
    b = bus.subscribe(t, [&](const SensorSample&) { ++second; });
    bus.publish(t, lat(0, 1));
    bus.publish(t, lat(1, 1));
    EXPECT_EQ(second, 0);
}

TEST(Bus, DeliveryIsOrderedAndLossless) {
    Bus bus;
    const Topic t{"t"};
    bus.register_topic(t);
    std::vector<double> seen;
    auto s = bus.subscribe(t, [&](const SensorSample& x) { seen.push_back(x.value); });
    std::vector<double> sent;
    for (int i = 0; i < 500; ++i) {
        sent.push_back(i * 0.5);
        bus.publish(t, lat(static_cast<std::uint64_t>(i), i * 0.5));
    }
    EXPECT_EQ(seen, sent);
}

// Simulator -> attack layer -> navigator, assembled by hand.
TEST(Bus, RemapDivertsTrafficUntilTheLayerRepublishes) {
    Bus bus;
    const Topic raw{"raw/latitude"}, nav{"nav/latitude"};
    bus.register_topic(raw);
    bus.register_topic(nav);
    bus.bridge(raw, nav);

    std::vector<std::string> trace;
    auto navigator = bus.subscribe(nav, [&](const SensorSample& s) { trace.push_back("nav " + std::to_string(s.ts.micros)); });
    bus.publish(raw, lat(1, 1.0));
    EXPECT_EQ(trace, std::vector<std::string>{"nav 1"});

    bus.install_remap(RemapTable{{{raw, nav}}});
    EXPECT_EQ(bus.remap_target(raw), nav);
    bus.publish(raw, lat(2, 1.0));
    EXPECT_EQ(trace.size(), 1u) << "navigator must see nothing until the layer republishes";

    bool republish = false;
    auto layer = bus.subscribe(raw, [&](const SensorSample& s) {
        trace.push_back("layer " + std::to_string(s.ts.micros));
        if (republish) bus.publish(nav, s);
    });
    bus.publish(raw, lat(3, 1.0));
    republish = true;
    bus.publish(raw, lat(4, 1.0));
    EXPECT_EQ(trace, (std::vector<std::string>{"nav 1", "layer 3", "layer 4", "nav 4"}));
}

TEST(Bus, EmptyRemapLeavesBridgesAlone) {
    Bus bus;
    const Topic raw{"raw/latitude"}, nav{"nav/latitude"};
    bus.register_topic(raw);
    bus.register_topic(nav);
    bus.bridge(raw, nav);
    int calls = 0;
    auto s = bus.subscribe(nav, [&](const SensorSample&) { ++calls; });
    bus.install_remap(RemapTable{});
    bus.publish(raw, lat(0, 1));
    EXPECT_EQ(calls, 1);
}

TEST(RemapTable, DuplicateFromIsAConflict) {
    RemapTable t{{{Topic{"a"}, Topic{"b"}}, {Topic{"a"}, Topic{"c"}}}};
    EXPECT_THROW(t.validate(), RemapConflict);
    Bus bus;
    for (const char* n : {"a", "b", "c"}) bus.register_topic(Topic{n});
    EXPECT_THROW(bus.install_remap(t), RemapConflict);
    EXPECT_FALSE(bus.remap_installed());
}

TEST(RemapTable, CycleIsRejected) {
    RemapTable t{{{Topic{"a"}, Topic{"b"}}, {Topic{"b"}, Topic{"a"}}}};
    EXPECT_THROW(t.validate(), RemapCycle);
    RemapTable self{{{Topic{"a"}, Topic{"a"}}}};
    EXPECT_THROW(self.validate(), RemapCycle);
}

TEST(RemapTable, SecondRemapOnOneBusConflicts) {
    Bus bus;
    bus.register_topic(Topic{"a"});
    bus.register_topic(Topic{"b"});
    bus.install_remap(RemapTable{{{Topic{"a"}, Topic{"b"}}}});
    EXPECT_THROW(bus.install_remap(RemapTable{}), RemapConflict);
}

TEST(RemapTable, RemapAllCoversEverySensor) {
    const auto t = remap_all({"latitude", "longitude"});
    ASSERT_EQ(t.entries.size(), 2u);
    EXPECT_EQ(t.entries[1].from, raw_topic("longitude"));
    EXPECT_EQ(t.entries[1].to, nav_topic("longitude"));
    EXPECT_NO_THROW(t.validate());
}
