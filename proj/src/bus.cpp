#include "scart/bus.hpp"

#include <algorithm>
#include <set>

#include "scart/error.hpp"

namespace scart {

void RemapTable::validate() const {
    std::map<Topic, Topic> next;
    for (const auto& e : entries) {
        if (!next.emplace(e.from, e.to).second) {
            throw RemapConflict("duplicate remap source '" + e.from.name + "'");
        }
    }
    // Injective, so each node has at most one successor; a walk longer than
    // the table size means a cycle.
    for (const auto& [start, _] : next) {
        Topic cur = start;
        for (std::size_t steps = 0;; ++steps) {
            auto it = next.find(cur);
            if (it == next.end()) break;
            if (steps >= next.size()) {
                throw RemapCycle("remap chain starting at '" + start.name + "' does not terminate");
            }
            cur = it->second;
        }
    }
}

RemapTable remap_all(const std::vector<SensorId>& sensors) {
    RemapTable table;
    for (const auto& id : sensors) table.entries.push_back({raw_topic(id), nav_topic(id)});
    return table;
}

Bus::Subscription& Bus::Subscription::operator=(Subscription&& other) noexcept {
    if (this != &other) {
        release();
        state_ = std::move(other.state_);
        topic_ = std::move(other.topic_);
        entry_ = std::move(other.entry_);
        other.state_.reset();
        other.entry_.reset();
    }
    return *this;
}

void Bus::Subscription::release() {
    auto entry = entry_.lock();
    auto state = state_.lock();
    entry_.reset();
    state_.reset();
    if (!entry || !state) return;
    entry->active = false;
    auto it = state->topics.find(topic_);
    if (it == state->topics.end()) return;
    if (state->publish_depth > 0) {
        it->second.dirty = true;
    } else {
        Bus::compact(it->second);
    }
}

bool Bus::Subscription::active() const {
    auto entry = entry_.lock();
    return entry && entry->active && !state_.expired();
}

void Bus::register_topic(const Topic& topic) {
    if (topic.name.empty()) throw InvalidArgument("empty topic name");
    if (!state_->topics.emplace(topic, TopicState{}).second) {
        throw InvalidArgument("topic '" + topic.name + "' already registered");
    }
}

bool Bus::has_topic(const Topic& topic) const { return state_->topics.contains(topic); }

Bus::TopicState& Bus::require(const Topic& topic) {
    auto it = state_->topics.find(topic);
    if (it == state_->topics.end()) throw UnknownTopic("unknown topic '" + topic.name + "'");
    return it->second;
}

const Bus::TopicState& Bus::require(const Topic& topic) const {
    auto it = state_->topics.find(topic);
    if (it == state_->topics.end()) throw UnknownTopic("unknown topic '" + topic.name + "'");
    return it->second;
}

void Bus::compact(TopicState& ts) {
    std::erase_if(ts.subscribers, [](const auto& e) { return !e->active; });
    ts.dirty = false;
}

void Bus::bridge(const Topic& from, const Topic& to) {
    auto& src = require(from);
    require(to);
    // Refuse a bridge that would loop back to `from`.
    for (std::optional<Topic> cur = to; cur;) {
        if (*cur == from) throw RemapCycle("bridge '" + from.name + "' -> '" + to.name + "' forms a cycle");
        cur = require(*cur).bridge;
    }
    src.bridge = to;
}

Bus::Subscription Bus::subscribe(const Topic& topic, Callback cb) {
    auto& ts = require(topic);
    auto entry = std::make_shared<Entry>(Entry{std::move(cb)});
    ts.subscribers.push_back(entry);
    return Subscription(state_, topic, entry);
}

void Bus::publish(const Topic& topic, const SensorSample& s) {
    require_finite(s);
    auto& ts = require(topic);
    auto& state = *state_;
    ++state.publish_depth;
    // Late subscribers (added by a callback) start with the next publish.
    const std::size_t n = ts.subscribers.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto entry = ts.subscribers[i];
        if (entry->active) entry->cb(s);
    }
    --state.publish_depth;
    if (state.publish_depth == 0 && ts.dirty) compact(ts);
    if (ts.bridge && !ts.remapped_to) publish(*ts.bridge, s);
}

void Bus::install_remap(const RemapTable& table) {
    if (state_->remap_installed) throw RemapConflict("a remap is already installed on this bus");
    table.validate();
    for (const auto& e : table.entries) {
        require(e.from);
        require(e.to);
    }
    for (const auto& e : table.entries) require(e.from).remapped_to = e.to;
    state_->remap_installed = true;
}

std::optional<Topic> Bus::remap_target(const Topic& from) const { return require(from).remapped_to; }

std::size_t Bus::subscriber_count(const Topic& topic) const {
    const auto& ts = require(topic);
    return static_cast<std::size_t>(
        std::count_if(ts.subscribers.begin(), ts.subscribers.end(), [](const auto& e) { return e->active; }));
}

}  // namespace scart
