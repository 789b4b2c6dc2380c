#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scart {

// Microseconds since run start.
struct Timestamp {
    std::uint64_t micros = 0;

    constexpr auto operator<=>(const Timestamp&) const = default;

    static constexpr Timestamp from_seconds(double s) {
        return Timestamp{static_cast<std::uint64_t>(s * 1e6 + 0.5)};
    }
    constexpr double seconds() const { return static_cast<double>(micros) * 1e-6; }
};

inline constexpr Timestamp kDefaultWarmup{2'000'000};

// Name of one scalar sensor channel ("latitude", "vx", ...).
class SensorId {
public:
    SensorId() = default;
    SensorId(std::string name);  // throws InvalidArgument on an empty or non-token name
    SensorId(const char* name) : SensorId(std::string(name)) {}

    const std::string& name() const noexcept { return name_; }

    auto operator<=>(const SensorId&) const = default;
    bool operator==(const SensorId&) const = default;

private:
    std::string name_;
};

struct SensorSample {
    SensorId sensor;
    Timestamp ts;
    double value = 0.0;

    bool operator==(const SensorSample&) const = default;
};

// Throws NonFiniteSample when s.value is NaN or infinite.
void require_finite(const SensorSample& s);

struct HistoryPoint {
    Timestamp ts;
    double value = 0.0;

    bool operator==(const HistoryPoint&) const = default;
};

// Append-only per-sensor record of every sample observed since run start.
class History {
public:
    using Series = std::vector<HistoryPoint>;

    // Throws OutOfOrderSample if s.ts precedes the sensor's last timestamp.
    void append(const SensorSample& s);

    std::optional<HistoryPoint> latest(const SensorId& id) const;

    // Empty span for an unseen sensor.
    std::span<const HistoryPoint> series(const SensorId& id) const;

    std::vector<SensorId> sensors() const;
    std::size_t total_samples() const noexcept { return total_; }
    bool empty() const noexcept { return total_ == 0; }

    const std::map<SensorId, Series>& all() const noexcept { return series_; }

    bool operator==(const History&) const = default;

private:
    std::map<SensorId, Series> series_;
    std::size_t total_ = 0;
};

// Free-function spellings of the History operations.
inline History history_append(History h, const SensorSample& s) {
    h.append(s);
    return h;
}
inline std::optional<HistoryPoint> history_latest(const History& h, const SensorId& id) {
    return h.latest(id);
}

enum class RunMode { baseline, simulation_attack, csv_attack };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view text);

struct RunMeta {
    std::string run_id;
    std::uint64_t seed = 0;
    RunMode mode = RunMode::baseline;
    std::string mission;                 // mission plan name
    std::optional<std::string> scenario; // scenario label; absent for baselines

    bool operator==(const RunMeta&) const = default;

    // Throws InvalidArgument when a baseline carries a scenario.
    void validate() const;
};

}  // namespace scart
