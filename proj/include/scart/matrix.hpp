#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scart/attack.hpp"
#include "scart/dataset.hpp"
#include "scart/scenario.hpp"

namespace scart {

// Concrete parameters for every manipulation and condition kind.
struct MatrixDefaults {
    std::array<Manipulation, kManipulationKinds> manipulations;  // indexed by kind
    std::array<Condition, kConditionKinds> start_conditions;      // indexed by kind
    std::array<Condition, kConditionKinds> end_conditions;
    std::vector<SensorId> listeners;  // added to every scenario's listener list
    std::uint32_t manipulation_mask = (1u << kManipulationKinds) - 1;  // kinds taking part
    std::uint32_t condition_mask = (1u << kConditionKinds) - 1;
    Timestamp warmup = kDefaultWarmup;

    // Parameters for the default square mission.
    static MatrixDefaults standard();
    void validate() const;

    bool operator==(const MatrixDefaults&) const = default;
};

struct AttackSpec {
    std::uint32_t chain_mask = 0;  // bit i = kManipulationNames[i]
    std::uint32_t start_mask = 0;  // bit i = kConditionNames[i]
    std::uint32_t end_mask = 0;
    std::string label;

    std::size_t matrix_index() const noexcept {
        return (static_cast<std::size_t>(chain_mask) << (2 * kConditionKinds)) |
               (static_cast<std::size_t>(start_mask) << kConditionKinds) | end_mask;
    }
    bool operator==(const AttackSpec&) const = default;
};

std::string spec_label(std::uint32_t chain_mask, std::uint32_t start_mask, std::uint32_t end_mask);

// Every (chain subset, start subset, end subset) over the enabled kinds, in
// ascending (chain, start, end) mask order. 2^5 * 2^3 * 2^3 = 2048 with all kinds.
std::vector<AttackSpec> enumerate_matrix(const MatrixDefaults& defaults);

// Chain steps in canonical kind order.
AttackChain chain_for(std::uint32_t chain_mask, const MatrixDefaults& defaults);
Scenario to_scenario(const AttackSpec& spec, const MatrixDefaults& defaults);

// csv mode: applies chain to the samples of a recorded baseline whose
// timestamps fall in window; suppressed samples lose their rows.
// Throws AlreadyAttacked, WindowOutOfRange.
LabeledRun apply_offline(const AttackChain& chain, const LabeledRun& run, const AttackWindow& window, Rng& rng);

// Window the vanilla policy would open when replayed over a recorded run's
// navigator stream, with mission progress taken from the mission log.
std::optional<AttackWindow> replay_window(const Scenario& scenario, const LabeledRun& run);

// replay_window followed by apply_offline; a scenario that never triggers
// yields an unmodified copy labelled csv_attack.
LabeledRun csv_attack(const Scenario& scenario, const LabeledRun& baseline, std::uint64_t attack_seed);

}  // namespace scart
