#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scart/core.hpp"
#include "scart/rng.hpp"

namespace scart {

// Replay of the sensor's previous recorded value.
struct Duplicate {
    bool operator==(const Duplicate&) const = default;
};
// Replace with a uniform draw from [lo, hi].
struct RandomChange {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const RandomChange&) const = default;
};
// Suppress the sample entirely.
struct DisconnectSensor {
    bool operator==(const DisconnectSensor&) const = default;
};
// Replace with the mean of the sensor's last window_n recorded values.
struct AvgSensors {
    std::size_t window_n = 10;
    bool operator==(const AvgSensors&) const = default;
};
// Add zero-mean gaussian noise.
struct AddWhiteNoise {
    double sigma = 0.0;
    bool operator==(const AddWhiteNoise&) const = default;
};

using ManipulationKind = std::variant<Duplicate, RandomChange, DisconnectSensor, AvgSensors, AddWhiteNoise>;

inline constexpr std::size_t kManipulationKinds = std::variant_size_v<ManipulationKind>;

// Canonical kind order; also the chain application order.
inline constexpr std::array<std::string_view, kManipulationKinds> kManipulationNames{
    "Duplicate", "RandomChange", "DisconnectSensor", "AvgSensors", "AddWhiteNoise"};

struct Manipulation {
    ManipulationKind kind;
    std::vector<SensorId> targets;

    std::size_t kind_index() const noexcept { return kind.index(); }
    std::string_view name() const noexcept { return kManipulationNames[kind.index()]; }
    bool targets_sensor(const SensorId& id) const;

    // Throws InvalidArgument when parameters or targets break the invariants.
    void validate() const;

    bool operator==(const Manipulation&) const = default;
};

// Ordered manipulations, at most one of each kind.
struct AttackChain {
    std::vector<Manipulation> steps;

    void validate() const;
    std::uint32_t kind_mask() const noexcept;
    bool empty() const noexcept { return steps.empty(); }

    bool operator==(const AttackChain&) const = default;
};

// `prior` is the target sensor's recorded series strictly before s.
// Returns nullopt when the sample is suppressed.
std::optional<SensorSample> apply(const Manipulation& m, const SensorSample& s, std::span<const HistoryPoint> prior,
                                  Rng& rng);

// Left-to-right composition; stops at the first suppression.
std::optional<SensorSample> apply_chain(const AttackChain& chain, const SensorSample& s,
                                        std::span<const HistoryPoint> prior, Rng& rng);

// Convenience overloads: h holds the samples preceding s.
std::optional<SensorSample> apply(const Manipulation& m, const SensorSample& s, const History& h, Rng& rng);
std::optional<SensorSample> apply_chain(const AttackChain& chain, const SensorSample& s, const History& h, Rng& rng);

}  // namespace scart
