#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scart/core.hpp"
#include "scart/dataset.hpp"

namespace scart {

struct StatConfig {
    std::size_t window_n = 50;
    double z_thresh = 4.0;
    double var_ratio_thresh = 4.0;
    double ma_resid_thresh = 4.0;
    std::size_t min_votes = 2;
    std::size_t consecutive_k = 3;
    Timestamp warmup = kDefaultWarmup;
    double calibration_fraction = 0.2;  // of the post-warmup time span

    // Throws InvalidArgument.
    void validate() const;
};

struct DetectorVerdict {
    std::vector<int> per_point;                          // aligned with rows
    int flight_flag = 0;
    std::map<SensorId, std::vector<int>> per_sensor_flags;  // aligned with rows

    bool operator==(const DetectorVerdict&) const = default;
};

class Detector {
public:
    virtual ~Detector() = default;
    virtual std::string name() const = 0;
    // Must be safe to call concurrently on distinct runs.
    virtual DetectorVerdict detect(const LabeledRun& run) const = 0;
};

// Four rolling statistics over each sensor's update increments:
//   (a) |d - trailing mean| > z_thresh * trailing sigma (trailing window excludes d)
//   (b) rolling variance > var_ratio_thresh * calibration variance
//   (c) |d - moving average| > ma_resid_thresh * calibration sigma
//   (d) rolling [min, max] not inside the calibration [min, max]
// A point is anomalous when min_votes of them fire on one sensor; the flight
// is flagged when one sensor has consecutive_k anomalous updates in a row.
// Throws TooShort.
DetectorVerdict stat_detect(const LabeledRun& run, const StatConfig& cfg = {});

class StatisticalDetector : public Detector {
public:
    explicit StatisticalDetector(StatConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }
    std::string name() const override { return "statistical"; }
    DetectorVerdict detect(const LabeledRun& run) const override { return stat_detect(run, cfg_); }

private:
    StatConfig cfg_;
};

// Runs `exe <merged.csv> <out_dir> <run_id>`; the program must exit 0 after
// writing <out_dir>/<run_id>.flags with one 0/1 per row. The flight is flagged
// when consecutive_k flags in a row are 1. Throws DetectorFailure.
class ExternalDetector : public Detector {
public:
    ExternalDetector(std::filesystem::path exe, std::filesystem::path work_dir, std::size_t consecutive_k = 1);
    std::string name() const override;
    DetectorVerdict detect(const LabeledRun& run) const override;

private:
    std::filesystem::path exe_;
    std::filesystem::path work_dir_;
    std::size_t consecutive_k_;
};

// Longest run of ones reaches k.
bool has_consecutive(const std::vector<int>& flags, std::size_t k);

struct AttackResult {
    RunMode mode = RunMode::simulation_attack;
    std::optional<std::string> scenario;
    bool detected = false;
    bool window_overlap = false;  // a flagged point lies in the true window

    bool operator==(const AttackResult&) const = default;
};

struct EvalReport {
    std::string detector;
    std::optional<double> tp_simulation;  // absent for an empty cohort
    std::optional<double> tp_csv;
    double tn_no_attack = 0.0;
    std::size_t n_simulation = 0;
    std::size_t n_csv = 0;
    std::size_t n_normal = 0;
    std::map<std::string, AttackResult> per_attack;  // keyed by run_id

    bool operator==(const EvalReport&) const = default;
};

// Throws EmptyCohort without normals, InvalidArgument for duplicate run ids.
EvalReport evaluate(const std::vector<LabeledRun>& normals, const std::vector<LabeledRun>& attacked_sim,
                    const std::vector<LabeledRun>& attacked_csv, const Detector& detector, unsigned jobs = 1);

// Plain-text table with columns Simulation | CSV | No Attack.
std::string render_table(const std::vector<EvalReport>& reports);
std::string report_json(const std::vector<EvalReport>& reports);

}  // namespace scart
