#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scart/core.hpp"
#include "scart/scenario.hpp"

namespace scart {

struct Row {
    std::uint64_t index = 0;
    Timestamp ts;
    int is_anomaly = 0;
    std::vector<double> values;  // one per sensor column

    bool operator==(const Row&) const = default;
};

struct TruthPoint {
    Timestamp ts;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const TruthPoint&) const = default;
};

enum class RunOutcome { completed, timeout };

std::string_view to_string(RunOutcome outcome);

struct SensorColumn {
    SensorId id;
    double rate_hz = 0.0;  // 0 when unknown

    bool operator==(const SensorColumn&) const = default;
};

// A finished flight: the merged navigator-side table plus everything needed
// to reproduce and audit it.
struct LabeledRun {
    RunMeta meta;
    std::vector<SensorColumn> sensors;  // column order
    std::vector<Row> rows;
    std::optional<AttackWindow> window;
    RunOutcome outcome = RunOutcome::completed;

    History nav;                      // what the navigator received
    History sim;                      // what the simulator published (ground truth telemetry)
    std::vector<TruthPoint> truth;    // true vehicle position per cycle
    std::vector<std::string> mission_log;
    std::vector<std::string> engine_log;
    std::map<std::string, std::string> raw_files;  // extra files for raw/, e.g. mission.yaml

    std::vector<SensorId> sensor_ids() const;
    std::optional<std::size_t> column_of(const SensorId& id) const;
    Timestamp last_timestamp() const;

    bool operator==(const LabeledRun&) const = default;
};

// Merges per-sensor series into rows ordered by (timestamp, column order,
// arrival): a start-of-run row at t = 0 with every column 0, then one row per
// sample, forward-filled, 0 before a sensor's first report.
std::vector<Row> merge_rows(const History& h, const std::vector<SensorId>& columns,
                            const std::optional<AttackWindow>& window);

// Samples of the listed sensors in merged-row order.
std::vector<SensorSample> ordered_samples(const History& h, const std::vector<SensorId>& columns);

LabeledRun assemble(const History& nav, const History& sim, const std::optional<AttackWindow>& window, RunMeta meta,
                    std::vector<SensorColumn> columns);

// Rewrites is_anomaly from the window.
void relabel(LabeledRun& run);

// Columns whose rate equals the run's maximum rate.
std::vector<SensorId> frequent_sensors(const LabeledRun& run);

struct ManifestFile {
    std::string path;  // relative, '/'-separated
    std::uint64_t bytes = 0;
    std::string sha256;
};

struct Manifest {
    std::vector<ManifestFile> files;
};

inline constexpr const char* kDatasetFormat = "scart-dataset/1";

// Writes raw/, sensors/, merged.csv, frequent.csv and manifest.json under dir.
// Throws IoFailure.
Manifest export_run(const LabeledRun& run, const std::filesystem::path& dir);

// Reads a run directory (manifest.json present) or a bare merged.csv.
// Throws SchemaError, ParseError, IoFailure.
LabeledRun import_run(const std::filesystem::path& path);

// CSV text of the merged table; exposed for tests and tools.
std::string merged_csv(const std::vector<SensorId>& columns, const std::vector<Row>& rows);
std::vector<Row> parse_merged_csv(const std::string& text, const std::string& source, std::vector<SensorId>& columns);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

std::string sha256_hex(const std::string& bytes);

}  // namespace scart
