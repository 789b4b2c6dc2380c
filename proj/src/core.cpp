#include "scart/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "scart/error.hpp"

namespace scart {

namespace {

bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

}  // namespace

SensorId::SensorId(std::string name) : name_(std::move(name)) {
    if (name_.empty() || !std::all_of(name_.begin(), name_.end(), is_token_char)) {
        throw InvalidArgument("invalid sensor name '" + name_ + "'");
    }
}

void require_finite(const SensorSample& s) {
    if (!std::isfinite(s.value)) {
        throw NonFiniteSample("non-finite value for sensor " + s.sensor.name() + " at " +
                              std::to_string(s.ts.micros) + "us");
    }
}

void History::append(const SensorSample& s) {
    require_finite(s);
    auto& series = series_[s.sensor];
    if (!series.empty() && s.ts < series.back().ts) {
        throw OutOfOrderSample("sample for " + s.sensor.name() + " at " + std::to_string(s.ts.micros) +
                               "us precedes last recorded " + std::to_string(series.back().ts.micros) + "us");
    }
    series.push_back({s.ts, s.value});
    ++total_;
}

std::optional<HistoryPoint> History::latest(const SensorId& id) const {
    auto it = series_.find(id);
    if (it == series_.end() || it->second.empty()) return std::nullopt;
    return it->second.back();
}

std::span<const HistoryPoint> History::series(const SensorId& id) const {
    auto it = series_.find(id);
    if (it == series_.end()) return {};
    return it->second;
}

std::vector<SensorId> History::sensors() const {
    std::vector<SensorId> out;
    out.reserve(series_.size());
    for (const auto& [id, _] : series_) out.push_back(id);
    return out;
}

std::string_view to_string(RunMode mode) {
    switch (mode) {
        case RunMode::baseline: return "baseline";
        case RunMode::simulation_attack: return "simulation_attack";
        case RunMode::csv_attack: return "csv_attack";
    }
    return "baseline";
}

RunMode run_mode_from_string(std::string_view text) {
    if (text == "baseline") return RunMode::baseline;
    if (text == "simulation_attack") return RunMode::simulation_attack;
    if (text == "csv_attack") return RunMode::csv_attack;
    throw InvalidArgument("unknown run mode '" + std::string(text) + "'");
}

void RunMeta::validate() const {
    if (mode == RunMode::baseline && scenario) {
        throw InvalidArgument("baseline run '" + run_id + "' must not carry a scenario");
    }
}

}  // namespace scart
