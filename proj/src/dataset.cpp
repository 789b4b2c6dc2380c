#include "scart/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "scart/error.hpp"

namespace scart {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Event {
    Timestamp ts;
    std::size_t column;
    std::size_t seq;
    double value;
};

std::vector<Event> collect_events(const History& h, const std::vector<SensorId>& columns) {
    std::vector<Event> events;
    events.reserve(h.total_samples());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        auto series = h.series(columns[c]);
        for (std::size_t i = 0; i < series.size(); ++i) events.push_back({series[i].ts, c, i, series[i].value});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.ts != b.ts) return a.ts < b.ts;
        if (a.column != b.column) return a.column < b.column;
        return a.seq < b.seq;
    });
    return events;
}

void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoFailure("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoFailure("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Splits text into lines, tolerating a trailing newline and CRLF.
std::vector<std::string_view> lines_of(const std::string& text) {
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        auto pos = rest.find('\n');
        auto line = rest.substr(0, pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
    }
    return lines;
}

template <class T>
T parse_number(std::string_view field, const std::string& source, std::size_t line, const char* what) {
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || field.empty()) {
        throw ParseError(source, line, std::string("bad ") + what + " '" + std::string(field) + "'");
    }
    return value;
}

std::string series_csv(std::span<const HistoryPoint> series) {
    std::string out = "timestamp,value\n";
    for (const auto& p : series) {
        out += std::to_string(p.ts.micros);
        out += ',';
        out += format_double(p.value);
        out += '\n';
    }
    return out;
}

History::Series parse_series_csv(const std::string& text, const std::string& source) {
    auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "timestamp,value") throw SchemaError(source + ": expected header 'timestamp,value'");
    History::Series series;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = split(lines[i], ',');
        if (f.size() != 2) throw ParseError(source, i + 1, "expected 2 fields");
        series.push_back({Timestamp{parse_number<std::uint64_t>(f[0], source, i + 1, "timestamp")},
                          parse_number<double>(f[1], source, i + 1, "value")});
    }
    return series;
}

std::string simulator_csv(const History& sim, const std::vector<SensorId>& columns) {
    std::string out = "timestamp,sensor,value\n";
    for (const auto& e : collect_events(sim, columns)) {
        out += std::to_string(e.ts.micros);
        out += ',';
        out += columns[e.column].name();
        out += ',';
        out += format_double(e.value);
        out += '\n';
    }
    return out;
}

History parse_simulator_csv(const std::string& text, const std::string& source) {
    auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "timestamp,sensor,value") {
        throw SchemaError(source + ": expected header 'timestamp,sensor,value'");
    }
    History h;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = split(lines[i], ',');
        if (f.size() != 3) throw ParseError(source, i + 1, "expected 3 fields");
        try {
            h.append({SensorId(std::string(f[1])), Timestamp{parse_number<std::uint64_t>(f[0], source, i + 1, "timestamp")},
                      parse_number<double>(f[2], source, i + 1, "value")});
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(source, i + 1, e.what());
        }
    }
    return h;
}

std::string trajectory_csv(const std::vector<TruthPoint>& truth) {
    std::string out = "timestamp,x,y,z\n";
    for (const auto& p : truth) {
        out += std::to_string(p.ts.micros) + ',' + format_double(p.x) + ',' + format_double(p.y) + ',' +
               format_double(p.z) + '\n';
    }
    return out;
}

std::vector<TruthPoint> parse_trajectory_csv(const std::string& text, const std::string& source) {
    auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "timestamp,x,y,z") throw SchemaError(source + ": expected header 'timestamp,x,y,z'");
    std::vector<TruthPoint> truth;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = split(lines[i], ',');
        if (f.size() != 4) throw ParseError(source, i + 1, "expected 4 fields");
        truth.push_back({Timestamp{parse_number<std::uint64_t>(f[0], source, i + 1, "timestamp")},
                         parse_number<double>(f[1], source, i + 1, "x"), parse_number<double>(f[2], source, i + 1, "y"),
                         parse_number<double>(f[3], source, i + 1, "z")});
    }
    return truth;
}

std::string lines_text(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::vector<std::string> text_lines(const std::string& text) {
    std::vector<std::string> out;
    for (auto l : lines_of(text)) out.emplace_back(l);
    return out;
}

// Inverse of forward-fill under the fresh-sample-means-change convention.
History history_from_rows(const std::vector<SensorId>& columns, const std::vector<Row>& rows) {
    History h;
    std::vector<double> prev(columns.size(), 0.0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (row.values[c] != prev[c]) {
                h.append({columns[c], row.ts, row.values[c]});
                prev[c] = row.values[c];
            }
        }
    }
    return h;
}

std::optional<AttackWindow> window_from_rows(const std::vector<Row>& rows) {
    std::optional<AttackWindow> w;
    for (const auto& row : rows) {
        if (!row.is_anomaly) continue;
        if (!w) w = AttackWindow{row.ts, row.ts};
        w->end = row.ts;
    }
    return w;
}

}  // namespace

std::string_view to_string(RunOutcome outcome) { return outcome == RunOutcome::completed ? "completed" : "timeout"; }

std::vector<SensorId> LabeledRun::sensor_ids() const {
    std::vector<SensorId> ids;
    ids.reserve(sensors.size());
    for (const auto& c : sensors) ids.push_back(c.id);
    return ids;
}

std::optional<std::size_t> LabeledRun::column_of(const SensorId& id) const {
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (sensors[i].id == id) return i;
    }
    return std::nullopt;
}

Timestamp LabeledRun::last_timestamp() const { return rows.empty() ? Timestamp{} : rows.back().ts; }

std::vector<SensorSample> ordered_samples(const History& h, const std::vector<SensorId>& columns) {
    std::vector<SensorSample> out;
    const auto events = collect_events(h, columns);
    out.reserve(events.size());
    for (const auto& e : events) out.push_back({columns[e.column], e.ts, e.value});
    return out;
}

std::vector<Row> merge_rows(const History& h, const std::vector<SensorId>& columns,
                            const std::optional<AttackWindow>& window) {
    std::vector<Row> rows;
    const auto events = collect_events(h, columns);
    rows.reserve(events.size() + 1);
    std::vector<double> current(columns.size(), 0.0);
    rows.push_back({0, Timestamp{}, window && window->contains(Timestamp{}) ? 1 : 0, current});
    for (const auto& e : events) {
        current[e.column] = e.value;
        rows.push_back({rows.size(), e.ts, window && window->contains(e.ts) ? 1 : 0, current});
    }
    return rows;
}

LabeledRun assemble(const History& nav, const History& sim, const std::optional<AttackWindow>& window, RunMeta meta,
                    std::vector<SensorColumn> columns) {
    LabeledRun run;
    run.meta = std::move(meta);
    run.sensors = std::move(columns);
    run.window = window;
    run.nav = nav;
    run.sim = sim;
    run.rows = merge_rows(nav, run.sensor_ids(), window);
    return run;
}

void relabel(LabeledRun& run) {
    for (auto& row : run.rows) row.is_anomaly = run.window && run.window->contains(row.ts) ? 1 : 0;
}

std::vector<SensorId> frequent_sensors(const LabeledRun& run) {
    double max_rate = 0.0;
    for (const auto& c : run.sensors) max_rate = std::max(max_rate, c.rate_hz);
    std::vector<SensorId> out;
    if (max_rate > 0.0) {
        for (const auto& c : run.sensors) {
            if (c.rate_hz == max_rate) out.push_back(c.id);
        }
        return out;
    }
    // Unknown rates: fall back to the most-updated sensors.
    std::size_t max_count = 0;
    for (const auto& c : run.sensors) max_count = std::max(max_count, run.nav.series(c.id).size());
    for (const auto& c : run.sensors) {
        if (run.nav.series(c.id).size() == max_count) out.push_back(c.id);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoFailure("sha256 digest failed");
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

std::string merged_csv(const std::vector<SensorId>& columns, const std::vector<Row>& rows) {
    std::string out = "index,timestamp,is_anomaly";
    for (const auto& c : columns) {
        out += ',';
        out += c.name();
    }
    out += '\n';
    for (const auto& row : rows) {
        out += std::to_string(row.index);
        out += ',';
        out += std::to_string(row.ts.micros);
        out += ',';
        out += row.is_anomaly ? '1' : '0';
        for (double v : row.values) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::vector<Row> parse_merged_csv(const std::string& text, const std::string& source, std::vector<SensorId>& columns) {
    auto lines = lines_of(text);
    if (lines.empty()) throw SchemaError(source + ": missing header");
    auto header = split(lines[0], ',');
    if (header.size() < 3 || header[0] != "index" || header[1] != "timestamp" || header[2] != "is_anomaly") {
        throw SchemaError(source + ": header must start with index,timestamp,is_anomaly");
    }
    columns.clear();
    for (std::size_t i = 3; i < header.size(); ++i) {
        try {
            columns.emplace_back(std::string(header[i]));
        } catch (const InvalidArgument& e) {
            throw SchemaError(source + ": " + e.what());
        }
    }
    std::set<SensorId> unique(columns.begin(), columns.end());
    if (unique.size() != columns.size()) throw SchemaError(source + ": duplicate sensor column");

    std::vector<Row> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        auto f = split(lines[i], ',');
        if (f.size() != header.size()) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        }
        Row row;
        row.index = parse_number<std::uint64_t>(f[0], source, line_no, "index");
        if (row.index != rows.size()) throw ParseError(source, line_no, "index is not contiguous");
        row.ts = Timestamp{parse_number<std::uint64_t>(f[1], source, line_no, "timestamp")};
        if (!rows.empty() && row.ts < rows.back().ts) throw ParseError(source, line_no, "timestamp decreases");
        if (f[2] != "0" && f[2] != "1") throw ParseError(source, line_no, "is_anomaly must be 0 or 1");
        row.is_anomaly = f[2] == "1" ? 1 : 0;
        row.values.reserve(columns.size());
        for (std::size_t c = 3; c < f.size(); ++c) {
            double v = parse_number<double>(f[c], source, line_no, "value");
            if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite value");
            row.values.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Manifest export_run(const LabeledRun& run, const fs::path& dir) {
    const auto ids = run.sensor_ids();
    std::map<std::string, std::string> files;

    files["merged.csv"] = merged_csv(ids, run.rows);
    const auto freq = frequent_sensors(run);
    files["frequent.csv"] = merged_csv(freq, merge_rows(run.nav, freq, run.window));
    for (const auto& id : ids) files["sensors/" + id.name() + ".csv"] = series_csv(run.nav.series(id));
    files["raw/simulator.csv"] = simulator_csv(run.sim, ids);
    files["raw/trajectory.csv"] = trajectory_csv(run.truth);
    files["raw/mission.log"] = lines_text(run.mission_log);
    files["raw/engine.log"] = lines_text(run.engine_log);
    for (const auto& [name, content] : run.raw_files) {
        if (name.find('/') != std::string::npos || name.empty()) {
            throw IoFailure("raw file name '" + name + "' must be a plain file name");
        }
        auto key = "raw/" + name;
        if (files.contains(key)) throw IoFailure("raw file '" + name + "' collides with a generated file");
        files[key] = content;
    }

    Manifest manifest;
    for (const auto& [rel, content] : files) {
        write_file(dir / rel, content);
        manifest.files.push_back({rel, content.size(), sha256_hex(content)});
    }

    json j;
    j["format"] = kDatasetFormat;
    j["run"] = {{"run_id", run.meta.run_id},
                {"seed", run.meta.seed},
                {"mode", std::string(to_string(run.meta.mode))},
                {"mission", run.meta.mission},
                {"scenario", run.meta.scenario ? json(*run.meta.scenario) : json(nullptr)},
                {"outcome", std::string(to_string(run.outcome))}};
    j["window"] = run.window ? json{{"start_us", run.window->start.micros}, {"end_us", run.window->end.micros}}
                             : json(nullptr);
    j["sensors"] = json::array();
    for (const auto& c : run.sensors) j["sensors"].push_back({{"name", c.id.name()}, {"rate_hz", c.rate_hz}});
    j["rows"] = run.rows.size();
    j["files"] = json::array();
    for (const auto& f : manifest.files) j["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    write_file(dir / "manifest.json", j.dump(2) + "\n");
    return manifest;
}

LabeledRun import_run(const fs::path& path) {
    std::error_code ec;
    const bool is_dir = fs::is_directory(path, ec);
    const fs::path merged_path = is_dir ? path / "merged.csv" : path;
    if (!fs::exists(merged_path, ec)) throw IoFailure(merged_path.string() + ": not found");

    LabeledRun run;
    std::vector<SensorId> columns;
    run.rows = parse_merged_csv(read_file(merged_path), merged_path.string(), columns);
    for (const auto& id : columns) run.sensors.push_back({id, 0.0});

    const fs::path manifest_path = is_dir ? path / "manifest.json" : fs::path{};
    if (!is_dir || !fs::exists(manifest_path, ec)) {
        // Bare table: identity and window are recovered from the data alone.
        run.meta.run_id = (is_dir ? path : path.parent_path()).filename().string();
        run.window = window_from_rows(run.rows);
        run.meta.mode = run.window ? RunMode::csv_attack : RunMode::baseline;
        run.nav = history_from_rows(columns, run.rows);
        return run;
    }

    const std::string manifest_src = manifest_path.string();
    json j;
    try {
        j = json::parse(read_file(manifest_path));
        if (j.at("format").get<std::string>() != kDatasetFormat) {
            throw SchemaError(manifest_src + ": unsupported format '" + j.at("format").get<std::string>() + "'");
        }
        const auto& r = j.at("run");
        run.meta.run_id = r.at("run_id").get<std::string>();
        run.meta.seed = r.at("seed").get<std::uint64_t>();
        run.meta.mode = run_mode_from_string(r.at("mode").get<std::string>());
        run.meta.mission = r.at("mission").get<std::string>();
        if (!r.at("scenario").is_null()) run.meta.scenario = r.at("scenario").get<std::string>();
        run.outcome = r.at("outcome").get<std::string>() == "timeout" ? RunOutcome::timeout : RunOutcome::completed;
        if (!j.at("window").is_null()) {
            run.window = AttackWindow{Timestamp{j["window"].at("start_us").get<std::uint64_t>()},
                                      Timestamp{j["window"].at("end_us").get<std::uint64_t>()}};
        }
        const auto& sensors = j.at("sensors");
        if (sensors.size() != columns.size()) throw SchemaError(manifest_src + ": sensor list does not match merged.csv");
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (sensors[i].at("name").get<std::string>() != columns[i].name()) {
                throw SchemaError(manifest_src + ": sensor order does not match merged.csv");
            }
            run.sensors[i].rate_hz = sensors[i].at("rate_hz").get<double>();
        }
    } catch (const json::exception& e) {
        throw SchemaError(manifest_src + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaError(manifest_src + ": " + e.what());
    }

    bool have_series = true;
    for (const auto& id : columns) {
        const auto p = path / "sensors" / (id.name() + ".csv");
        if (!fs::exists(p, ec)) {
            have_series = false;
            break;
        }
        for (const auto& pt : parse_series_csv(read_file(p), p.string())) run.nav.append({id, pt.ts, pt.value});
    }
    if (!have_series) run.nav = history_from_rows(columns, run.rows);

    const auto raw = path / "raw";
    if (fs::is_directory(raw, ec)) {
        std::vector<fs::path> entries;
        for (const auto& e : fs::directory_iterator(raw)) {
            if (e.is_regular_file()) entries.push_back(e.path());
        }
        std::sort(entries.begin(), entries.end());
        for (const auto& p : entries) {
            const auto name = p.filename().string();
            const auto content = read_file(p);
            if (name == "simulator.csv") {
                run.sim = parse_simulator_csv(content, p.string());
            } else if (name == "trajectory.csv") {
                run.truth = parse_trajectory_csv(content, p.string());
            } else if (name == "mission.log") {
                run.mission_log = text_lines(content);
            } else if (name == "engine.log") {
                run.engine_log = text_lines(content);
            } else {
                run.raw_files[name] = content;
            }
        }
    }
    return run;
}

}  // namespace scart
