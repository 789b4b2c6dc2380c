#include "scart/attack.hpp"

#include <algorithm>
#include <cmath>

#include "scart/error.hpp"

namespace scart {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

bool Manipulation::targets_sensor(const SensorId& id) const {
    return std::find(targets.begin(), targets.end(), id) != targets.end();
}

void Manipulation::validate() const {
    if (targets.empty()) throw InvalidArgument(std::string(name()) + ": targets must not be empty");
    std::visit(overloaded{
                   [](const RandomChange& k) {
                       if (!std::isfinite(k.lo) || !std::isfinite(k.hi) || k.lo > k.hi) {
                           throw InvalidArgument("RandomChange requires finite lo <= hi");
                       }
                   },
                   [](const AvgSensors& k) {
                       if (k.window_n == 0) throw InvalidArgument("AvgSensors window_n must be positive");
                   },
                   [](const AddWhiteNoise& k) {
                       if (!std::isfinite(k.sigma) || k.sigma < 0.0) {
                           throw InvalidArgument("AddWhiteNoise sigma must be finite and non-negative");
                       }
                   },
                   [](const auto&) {},
               },
               kind);
}

void AttackChain::validate() const {
    std::uint32_t seen = 0;
    for (const auto& step : steps) {
        step.validate();
        const auto bit = 1u << step.kind_index();
        if (seen & bit) throw InvalidArgument("attack chain repeats " + std::string(step.name()));
        seen |= bit;
    }
}

std::uint32_t AttackChain::kind_mask() const noexcept {
    std::uint32_t mask = 0;
    for (const auto& step : steps) mask |= 1u << step.kind_index();
    return mask;
}

std::optional<SensorSample> apply(const Manipulation& m, const SensorSample& s, std::span<const HistoryPoint> prior,
                                  Rng& rng) {
    if (!m.targets_sensor(s.sensor)) return s;
    SensorSample out = s;
    const bool suppressed = std::visit(
        overloaded{
            [&](const Duplicate&) {
                if (!prior.empty()) out.value = prior.back().value;
                return false;
            },
            [&](const RandomChange& k) {
                out.value = k.lo == k.hi ? k.lo : rng.uniform(k.lo, k.hi);
                return false;
            },
            [&](const DisconnectSensor&) { return true; },
            [&](const AvgSensors& k) {
                if (prior.empty()) return false;
                const auto n = std::min(k.window_n, prior.size());
                double sum = 0.0;
                for (const auto& p : prior.last(n)) sum += p.value;
                out.value = sum / static_cast<double>(n);
                return false;
            },
            [&](const AddWhiteNoise& k) {
                out.value = rng.gaussian(s.value, k.sigma);
                return false;
            },
        },
        m.kind);
    if (suppressed) return std::nullopt;
    return out;
}

std::optional<SensorSample> apply_chain(const AttackChain& chain, const SensorSample& s,
                                        std::span<const HistoryPoint> prior, Rng& rng) {
    std::optional<SensorSample> cur = s;
    for (const auto& step : chain.steps) {
        cur = apply(step, *cur, prior, rng);
        if (!cur) break;
    }
    return cur;
}

std::optional<SensorSample> apply(const Manipulation& m, const SensorSample& s, const History& h, Rng& rng) {
    return apply(m, s, h.series(s.sensor), rng);
}

std::optional<SensorSample> apply_chain(const AttackChain& chain, const SensorSample& s, const History& h, Rng& rng) {
    return apply_chain(chain, s, h.series(s.sensor), rng);
}

}  // namespace scart
