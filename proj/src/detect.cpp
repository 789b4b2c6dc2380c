#include "scart/detect.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scart/error.hpp"
#include "scart/parallel.hpp"

extern char** environ;

namespace scart {

namespace {

struct Point {
    std::size_t row;
    Timestamp ts;
    double value;
};

// A column's updates: rows where its value differs from the previous row,
// starting with the first report.
std::vector<Point> updates_of(const std::vector<Row>& rows, std::size_t column) {
    std::vector<Point> out;
    double prev = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double v = rows[r].values[column];
        if (v != prev) {
            out.push_back({r, rows[r].ts, v});
            prev = v;
        }
    }
    return out;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // sample variance, 0 below two values
};

Moments moments(const double* first, std::size_t n) {
    Moments m;
    if (n == 0) return m;
    for (std::size_t i = 0; i < n; ++i) m.mean += first[i];
    m.mean /= static_cast<double>(n);
    if (n < 2) return m;
    for (std::size_t i = 0; i < n; ++i) m.var += (first[i] - m.mean) * (first[i] - m.mean);
    m.var /= static_cast<double>(n - 1);
    return m;
}

std::string pct(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
    return buf;
}

}  // namespace

void StatConfig::validate() const {
    if (window_n == 0) throw InvalidArgument("window_n must be positive");
    if (!(z_thresh > 0.0)) throw InvalidArgument("z_thresh must be > 0");
    if (!(var_ratio_thresh > 1.0)) throw InvalidArgument("var_ratio_thresh must be > 1");
    if (!(ma_resid_thresh > 0.0)) throw InvalidArgument("ma_resid_thresh must be > 0");
    if (min_votes < 2) throw InvalidArgument("min_votes must be at least 2");
    if (consecutive_k == 0) throw InvalidArgument("consecutive_k must be positive");
    if (!(calibration_fraction > 0.0 && calibration_fraction <= 1.0)) {
        throw InvalidArgument("calibration_fraction must be in (0, 1]");
    }
}

bool has_consecutive(const std::vector<int>& flags, std::size_t k) {
    std::size_t streak = 0;
    for (int f : flags) {
        streak = f ? streak + 1 : 0;
        if (streak >= k) return true;
    }
    return false;
}

DetectorVerdict stat_detect(const LabeledRun& run, const StatConfig& cfg) {
    cfg.validate();
    const auto& rows = run.rows;
    std::size_t after_warmup = 0;
    for (const auto& row : rows) after_warmup += row.ts >= cfg.warmup ? 1 : 0;
    if (after_warmup < cfg.window_n) {
        throw TooShort("run '" + run.meta.run_id + "' has " + std::to_string(after_warmup) +
                       " rows after warmup, need " + std::to_string(cfg.window_n));
    }

    const auto last = rows.back().ts;
    const Timestamp cal_end{cfg.warmup.micros +
                            static_cast<std::uint64_t>(cfg.calibration_fraction *
                                                       static_cast<double>(last.micros - cfg.warmup.micros))};

    DetectorVerdict verdict;
    verdict.per_point.assign(rows.size(), 0);
    const std::size_t n = cfg.window_n;

    for (std::size_t c = 0; c < run.sensors.size(); ++c) {
        auto& sensor_flags = verdict.per_sensor_flags[run.sensors[c].id];
        sensor_flags.assign(rows.size(), 0);

        const auto pts = updates_of(rows, c);
        if (pts.size() < 2) continue;
        std::vector<double> d(pts.size() - 1);
        std::vector<double> cal;
        for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
            d[j] = pts[j + 1].value - pts[j].value;
            if (pts[j + 1].ts >= cfg.warmup && pts[j + 1].ts < cal_end) cal.push_back(d[j]);
        }
        if (cal.size() < 2) continue;
        const auto cal_m = moments(cal.data(), cal.size());
        const double cal_sd = std::sqrt(cal_m.var);
        const auto [cal_min, cal_max] = std::minmax_element(cal.begin(), cal.end());

        std::vector<int> update_flags;
        for (std::size_t j = n; j < d.size(); ++j) {
            const auto& p = pts[j + 1];
            if (p.ts < cfg.warmup) continue;
            const auto trailing = moments(&d[j - n], n);
            const auto window = moments(&d[j + 1 - n], n);
            std::size_t votes = 0;
            votes += std::abs(d[j] - trailing.mean) > cfg.z_thresh * std::sqrt(trailing.var) ? 1 : 0;
            votes += window.var > cfg.var_ratio_thresh * cal_m.var ? 1 : 0;
            votes += std::abs(d[j] - window.mean) > cfg.ma_resid_thresh * cal_sd ? 1 : 0;
            const auto [win_min, win_max] = std::minmax_element(d.begin() + (j + 1 - n), d.begin() + (j + 1));
            votes += (*win_min < *cal_min || *win_max > *cal_max) ? 1 : 0;
            const int flag = votes >= cfg.min_votes ? 1 : 0;
            update_flags.push_back(flag);
            if (flag) {
                sensor_flags[p.row] = 1;
                verdict.per_point[p.row] = 1;
            }
        }
        if (has_consecutive(update_flags, cfg.consecutive_k)) verdict.flight_flag = 1;
    }
    return verdict;
}

ExternalDetector::ExternalDetector(std::filesystem::path exe, std::filesystem::path work_dir, std::size_t consecutive_k)
    : exe_(std::move(exe)), work_dir_(std::move(work_dir)), consecutive_k_(consecutive_k) {
    if (consecutive_k_ == 0) throw InvalidArgument("consecutive_k must be positive");
}

std::string ExternalDetector::name() const { return exe_.filename().string(); }

DetectorVerdict ExternalDetector::detect(const LabeledRun& run) const {
    const auto& id = run.meta.run_id;
    const auto input_dir = work_dir_ / "input" / id;
    std::error_code ec;
    std::filesystem::create_directories(input_dir, ec);
    if (ec) throw DetectorFailure("cannot create " + input_dir.string() + ": " + ec.message());
    const auto csv = input_dir / "merged.csv";
    {
        std::ofstream out(csv, std::ios::binary);
        out << merged_csv(run.sensor_ids(), run.rows);
        if (!out) throw DetectorFailure("cannot write " + csv.string());
    }
    const auto flags_path = work_dir_ / (id + ".flags");
    std::filesystem::remove(flags_path, ec);

    std::vector<std::string> args{exe_.string(), csv.string(), work_dir_.string(), id};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    if (int rc = posix_spawn(&pid, exe_.c_str(), nullptr, nullptr, argv.data(), environ); rc != 0) {
        throw DetectorFailure("cannot start " + exe_.string() + ": " + std::strerror(rc));
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw DetectorFailure("waitpid failed for " + exe_.string());
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw DetectorFailure(exe_.string() + " failed on run '" + id + "'");
    }

    std::ifstream in(flags_path);
    if (!in) throw DetectorFailure(exe_.string() + " wrote no " + flags_path.string());
    DetectorVerdict verdict;
    std::string token;
    while (in >> token) {
        if (token != "0" && token != "1") throw DetectorFailure(flags_path.string() + ": bad flag '" + token + "'");
        verdict.per_point.push_back(token == "1" ? 1 : 0);
    }
    if (verdict.per_point.size() != run.rows.size()) {
        throw DetectorFailure(flags_path.string() + ": " + std::to_string(verdict.per_point.size()) + " flags for " +
                              std::to_string(run.rows.size()) + " rows");
    }
    verdict.flight_flag = has_consecutive(verdict.per_point, consecutive_k_) ? 1 : 0;
    return verdict;
}

EvalReport evaluate(const std::vector<LabeledRun>& normals, const std::vector<LabeledRun>& attacked_sim,
                    const std::vector<LabeledRun>& attacked_csv, const Detector& detector, unsigned jobs) {
    if (normals.empty()) throw EmptyCohort("no normal runs to evaluate");

    std::vector<const LabeledRun*> all;
    std::set<std::string> ids;
    for (const auto* cohort : {&normals, &attacked_sim, &attacked_csv}) {
        for (const auto& run : *cohort) {
            if (!ids.insert(run.meta.run_id).second) {
                throw InvalidArgument("run id '" + run.meta.run_id + "' appears more than once");
            }
            all.push_back(&run);
        }
    }

    std::vector<DetectorVerdict> verdicts(all.size());
    for (const auto& e : parallel_for(all.size(), jobs, [&](std::size_t i) { verdicts[i] = detector.detect(*all[i]); })) {
        if (e) std::rethrow_exception(e);
    }

    EvalReport report;
    report.detector = detector.name();
    report.n_normal = normals.size();
    report.n_simulation = attacked_sim.size();
    report.n_csv = attacked_csv.size();

    std::size_t i = 0;
    std::size_t quiet = 0;
    for (; i < normals.size(); ++i) quiet += verdicts[i].flight_flag ? 0 : 1;
    report.tn_no_attack = static_cast<double>(quiet) / static_cast<double>(normals.size());

    auto score = [&](const std::vector<LabeledRun>& cohort) -> std::optional<double> {
        std::size_t hits = 0;
        for (const auto& run : cohort) {
            const auto& v = verdicts[i++];
            AttackResult r;
            r.mode = run.meta.mode;
            r.scenario = run.meta.scenario;
            r.detected = v.flight_flag != 0;
            if (r.detected && run.window) {
                for (std::size_t row = 0; row < run.rows.size(); ++row) {
                    if (v.per_point[row] && run.window->contains(run.rows[row].ts)) {
                        r.window_overlap = true;
                        break;
                    }
                }
            }
            hits += r.detected ? 1 : 0;
            report.per_attack[run.meta.run_id] = r;
        }
        if (cohort.empty()) return std::nullopt;
        return static_cast<double>(hits) / static_cast<double>(cohort.size());
    };
    report.tp_simulation = score(attacked_sim);
    report.tp_csv = score(attacked_csv);
    return report;
}

std::string render_table(const std::vector<EvalReport>& reports) {
    std::size_t width = 8;
    for (const auto& r : reports) width = std::max(width, r.detector.size());
    auto cell = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };

    std::ostringstream out;
    out << cell("Detector", width) << " | " << cell("Simulation", 10) << " | " << cell("CSV", 10) << " | No Attack\n";
    out << cell("", width) << " | " << cell("TP", 10) << " | " << cell("TP", 10) << " | TN\n";
    out << std::string(width, '-') << "-+-" << std::string(10, '-') << "-+-" << std::string(10, '-') << "-+-"
        << std::string(9, '-') << "\n";
    for (const auto& r : reports) {
        out << cell(r.detector, width) << " | " << cell(pct(r.tp_simulation), 10) << " | " << cell(pct(r.tp_csv), 10)
            << " | " << pct(r.tn_no_attack) << "\n";
    }
    return out.str();
}

std::string report_json(const std::vector<EvalReport>& reports) {
    auto frac = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json per = nlohmann::json::object();
        for (const auto& [id, a] : r.per_attack) {
            per[id] = {{"mode", to_string(a.mode)},
                       {"scenario", a.scenario ? nlohmann::json(*a.scenario) : nlohmann::json(nullptr)},
                       {"detected", a.detected},
                       {"window_overlap", a.window_overlap}};
        }
        list.push_back({{"detector", r.detector},
                        {"tp_simulation", frac(r.tp_simulation)},
                        {"tp_csv", frac(r.tp_csv)},
                        {"tn_no_attack", r.tn_no_attack},
                        {"counts", {{"simulation", r.n_simulation}, {"csv", r.n_csv}, {"normal", r.n_normal}}},
                        {"per_attack", per}});
    }
    return list.dump(2) + "\n";
}

}  // namespace scart
