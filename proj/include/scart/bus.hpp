#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scart/core.hpp"

namespace scart {

struct Topic {
    std::string name;

    auto operator<=>(const Topic&) const = default;
};

// Producer-side (simulator) and consumer-side (navigator) topic of a sensor.
inline Topic raw_topic(const SensorId& id) { return Topic{"raw/" + id.name()}; }
inline Topic nav_topic(const SensorId& id) { return Topic{"nav/" + id.name()}; }

struct RemapEntry {
    Topic from;
    Topic to;
};

struct RemapTable {
    std::vector<RemapEntry> entries;

    // Throws RemapConflict on a duplicate `from`, RemapCycle if chains do not terminate.
    void validate() const;
};

// Reroute every sensor's raw topic away from its navigator topic.
RemapTable remap_all(const std::vector<SensorId>& sensors);

// Synchronous in-process publish/subscribe bus. Not thread-safe: all
// publishes must come from the thread that owns the run.
class Bus {
public:
    using Callback = std::function<void(const SensorSample&)>;

private:
    struct Entry {
        Callback cb;
        bool active = true;
    };
    struct TopicState {
        std::vector<std::shared_ptr<Entry>> subscribers;
        std::optional<Topic> bridge;  // direct route to another topic
        std::optional<Topic> remapped_to;
        bool dirty = false;
    };
    struct State {
        std::map<Topic, TopicState> topics;
        int publish_depth = 0;
        bool remap_installed = false;
    };

public:
    // Move-only handle; the callback stays registered until release or destruction.
    class Subscription {
    public:
        Subscription() = default;
        Subscription(Subscription&& other) noexcept { *this = std::move(other); }
        Subscription& operator=(Subscription&& other) noexcept;
        Subscription(const Subscription&) = delete;
        Subscription& operator=(const Subscription&) = delete;
        ~Subscription() { release(); }

        void release();
        bool active() const;

    private:
        friend class Bus;
        Subscription(std::weak_ptr<State> state, Topic topic, std::weak_ptr<Entry> entry)
            : state_(std::move(state)), topic_(std::move(topic)), entry_(std::move(entry)) {}

        std::weak_ptr<State> state_;
        Topic topic_;
        std::weak_ptr<Entry> entry_;
    };

    Bus() : state_(std::make_shared<State>()) {}
    Bus(const Bus&) = delete;
    Bus& operator=(const Bus&) = delete;

    // Throws InvalidArgument if the topic already exists.
    void register_topic(const Topic& topic);
    bool has_topic(const Topic& topic) const;

    // Original wiring: every publish on `from` is forwarded to `to` after
    // `from`'s own subscribers ran. Severed by a remap of `from`.
    void bridge(const Topic& from, const Topic& to);

    [[nodiscard]] Subscription subscribe(const Topic& topic, Callback cb);

    // Delivers s to every subscriber of topic in registration order before returning.
    void publish(const Topic& topic, const SensorSample& s);

    // One remap per bus. Afterwards a publish on `from` reaches only the
    // subscribers of `from`; whoever holds the remap republishes to `to`.
    void install_remap(const RemapTable& table);

    bool remap_installed() const noexcept { return state_->remap_installed; }
    std::optional<Topic> remap_target(const Topic& from) const;

    std::size_t subscriber_count(const Topic& topic) const;

private:
    TopicState& require(const Topic& topic);
    const TopicState& require(const Topic& topic) const;
    static void compact(TopicState& ts);

    std::shared_ptr<State> state_;
};

}  // namespace scart
