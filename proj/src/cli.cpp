#include "scart/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>

#include <json.hpp>

#include "scart/config.hpp"
#include "scart/detect.hpp"
#include "scart/error.hpp"
#include "scart/flight_sim.hpp"
#include "scart/matrix.hpp"
#include "scart/parallel.hpp"
#include "scart/plot.hpp"

namespace scart::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int code_for(const std::exception_ptr& e, std::ostream& err) {
    try {
        std::rethrow_exception(e);
    } catch (const UsageError& x) {
        err << "error: " << x.what() << "\n";
        return kUsage;
    } catch (const Error& x) {
        err << "error: " << x.what() << "\n";
        return kDataError;
    } catch (const std::exception& x) {
        err << "internal error: " << x.what() << "\n";
        return kInternal;
    }
}

std::string message_of(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& x) {
        return x.what();
    }
}

struct Common {
    std::uint64_t seed = 0;
    std::string out;
    std::string mission;
    std::string config;
    std::vector<std::string> sets;
    unsigned jobs = 1;
    bool plot = false;
};

void add_sim_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Seed (batch runs use seed + i)");
    cmd->add_option("--mission", c.mission, "Mission YAML file (default: 30 m square)");
    cmd->add_option("--config", c.config, "Simulator config YAML file");
    cmd->add_option("--set", c.sets, "Simulator override key=value (repeatable)");
    cmd->add_flag("--plot", c.plot, "Write SVG flight-path and sensor plots next to the data");
}

struct World {
    MissionPlan plan;
    SimConfig cfg;
    std::string mission_yaml;
    std::string config_yaml;
};

World load_world(const Common& c) {
    World w;
    w.plan = c.mission.empty() ? MissionPlan::square() : config::parse_mission(config::read_text(c.mission), c.mission);
    if (!c.config.empty()) w.cfg = config::parse_sim_config(config::read_text(c.config), w.cfg, c.config);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
        w.cfg = config::parse_sim_config(kv.substr(0, eq) + ": " + kv.substr(eq + 1), w.cfg, "--set " + kv);
    }
    w.mission_yaml = config::dump_mission(w.plan);
    w.config_yaml = config::dump_sim_config(w.cfg);
    return w;
}

LabeledRun fly(const World& w, std::uint64_t seed, MissionOptions options) {
    SimConfig cfg = w.cfg;
    cfg.seed = seed;
    auto run = run_mission(w.plan, cfg, options);
    run.raw_files["mission.yaml"] = w.mission_yaml;
    run.raw_files["config.yaml"] = w.config_yaml;
    return run;
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw IoFailure("cannot write " + path.string());
}

Manifest store(const LabeledRun& run, const fs::path& dir, bool plot) {
    auto manifest = export_run(run, dir);
    if (plot) {
        write_text(dir / "plots" / "trajectory.svg", trajectory_svg(run));
        for (const auto& id : run.sensor_ids()) write_text(dir / "plots" / (id.name() + ".svg"), sensor_svg(run, id));
    }
    return manifest;
}

std::string merged_digest(const Manifest& m) {
    for (const auto& f : m.files) {
        if (f.path == "merged.csv") return f.sha256;
    }
    return {};
}

json window_json(const std::optional<AttackWindow>& w) {
    return w ? json{{"start_us", w->start.micros}, {"end_us", w->end.micros}} : json(nullptr);
}

std::string window_text(const std::optional<AttackWindow>& w) {
    return w ? "[" + std::to_string(w->start.micros) + ", " + std::to_string(w->end.micros) + "] us" : "none";
}

std::string seed_tag(std::uint64_t seed) { return "_s" + std::to_string(seed); }

// ---- baseline ----

struct BaselineArgs {
    Common common;
    std::size_t n_runs = 100;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out, std::ostream& err) {
    if (a.n_runs == 0) throw UsageError("baseline: --runs must be at least 1");
    const auto world = load_world(a.common);
    const fs::path root = a.common.out;

    std::vector<json> entries(a.n_runs);
    std::mutex log_mutex;
    auto errors = parallel_for(a.n_runs, a.common.jobs, [&](std::size_t i) {
        const std::uint64_t seed = a.common.seed + i;
        char dir[32];
        std::snprintf(dir, sizeof dir, "run_%04zu", i);
        MissionOptions o;
        o.run_id = "baseline" + seed_tag(seed);
        const auto run = fly(world, seed, o);
        const auto manifest = store(run, root / dir, a.common.plot);
        entries[i] = {{"dir", dir},
                      {"run_id", run.meta.run_id},
                      {"seed", seed},
                      {"outcome", std::string(to_string(run.outcome))},
                      {"rows", run.rows.size()},
                      {"merged_sha256", merged_digest(manifest)}};
        std::lock_guard lock(log_mutex);
        err << "baseline " << dir << " seed " << seed << " " << to_string(run.outcome) << "\n";
    });

    int status = kOk;
    json failures = json::array();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        status = std::max(status, code_for(errors[i], err));
        failures.push_back({{"index", i}, {"seed", a.common.seed + i}, {"error", message_of(errors[i])}});
    }
    json batch = {{"format", "scart-batch/1"},
                  {"command", "baseline"},
                  {"seed_base", a.common.seed},
                  {"n_runs", a.n_runs},
                  {"mission", world.plan.name},
                  {"runs", json::array()},
                  {"failures", failures}};
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!errors[i]) batch["runs"].push_back(entries[i]);
    }
    write_text(root / "batch.json", batch.dump(2) + "\n");
    out << "wrote " << (a.n_runs - failures.size()) << " of " << a.n_runs << " baseline runs to " << root.string()
        << "\n";
    return status;
}

// ---- run ----

struct RunArgs {
    Common common;
    std::string scenario;
    std::optional<std::uint64_t> attack_seed;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
    const auto text = config::read_text(a.scenario);
    const auto scenario = config::parse_scenario(text, a.scenario);
    const auto world = load_world(a.common);

    MissionOptions o;
    o.scenario = scenario;
    o.attack_seed = a.attack_seed.value_or(a.common.seed);
    o.run_id = "sim_" + scenario.label + seed_tag(a.common.seed);
    auto run = fly(world, a.common.seed, o);
    run.raw_files["scenario.yaml"] = text;
    store(run, a.common.out, a.common.plot);
    out << run.meta.run_id << ": outcome " << to_string(run.outcome) << ", window " << window_text(run.window) << "\n";
    return kOk;
}

// ---- matrix ----

struct MatrixArgs {
    Common common;
    std::string defaults;
    std::string baseline;
    std::string chain;
    std::string start;
    std::string end;
    bool dry_run = false;
};

// "A,B" -> mask over names; "none" -> 0.
template <std::size_t N>
std::optional<std::uint32_t> parse_filter(const std::string& text, const std::array<std::string_view, N>& names,
                                          const char* flag) {
    if (text.empty()) return std::nullopt;
    if (text == "none") return 0u;
    std::uint32_t mask = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        const auto name = text.substr(pos, comma - pos);
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw UsageError(std::string(flag) + ": unknown kind '" + name + "'");
        mask |= 1u << static_cast<std::uint32_t>(it - names.begin());
        pos = comma + 1;
    }
    return mask;
}

template <std::size_t N>
json kind_names(std::uint32_t mask, const std::array<std::string_view, N>& names) {
    json list = json::array();
    for (std::size_t k = 0; k < N; ++k) {
        if (mask & (1u << k)) list.push_back(std::string(names[k]));
    }
    return list;
}

int cmd_matrix(const MatrixArgs& a, std::ostream& out, std::ostream& err) {
    const auto defaults = a.defaults.empty() ? MatrixDefaults::standard()
                                             : config::parse_matrix_defaults(config::read_text(a.defaults), a.defaults);
    const auto chain = parse_filter(a.chain, kManipulationNames, "--chain");
    const auto start = parse_filter(a.start, kConditionNames, "--start");
    const auto end = parse_filter(a.end, kConditionNames, "--end");

    std::vector<AttackSpec> specs;
    for (const auto& s : enumerate_matrix(defaults)) {
        if ((chain && s.chain_mask != *chain) || (start && s.start_mask != *start) || (end && s.end_mask != *end)) continue;
        specs.push_back(s);
    }
    const fs::path root = a.common.out;
    const std::uint64_t seed = a.common.seed;
    if (specs.empty()) err << "warning: the filter matches no attack specs\n";

    write_text(root / "defaults.yaml", config::dump_matrix_defaults(defaults));
    for (const auto& s : specs) write_text(root / "specs" / (s.label + ".yaml"), config::dump_attack_spec(s, defaults));

    json index = {{"format", "scart-matrix/1"}, {"seed", seed}, {"dry_run", a.dry_run}, {"count", specs.size()}};
    std::vector<json> entries(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        entries[i] = {{"label", s.label},
                      {"index", s.matrix_index()},
                      {"chain", kind_names(s.chain_mask, kManipulationNames)},
                      {"start", kind_names(s.start_mask, kConditionNames)},
                      {"end", kind_names(s.end_mask, kConditionNames)},
                      {"spec", "specs/" + s.label + ".yaml"}};
    }

    std::size_t failed = 0;
    if (!a.dry_run && !specs.empty()) {
        const auto world = load_world(a.common);
        LabeledRun baseline;
        std::string baseline_dir;
        if (a.baseline.empty()) {
            MissionOptions o;
            o.run_id = "baseline" + seed_tag(seed);
            baseline = fly(world, seed, o);
            baseline_dir = "baseline";
            store(baseline, root / baseline_dir, a.common.plot);
        } else {
            baseline = import_run(a.baseline);
            baseline_dir = fs::absolute(a.baseline).lexically_normal().string();
        }
        index["baseline"] = {{"run_id", baseline.meta.run_id}, {"dir", baseline_dir}};

        std::mutex log_mutex;
        auto errors = parallel_for(specs.size() * 2, a.common.jobs, [&](std::size_t job) {
            const auto& s = specs[job / 2];
            const bool sim = job % 2 == 0;
            const auto scenario = to_scenario(s, defaults);
            const std::uint64_t attack_seed = Rng::splitmix(seed ^ Rng::splitmix(s.matrix_index()));
            LabeledRun run;
            if (sim) {
                MissionOptions o;
                o.scenario = scenario;
                o.attack_seed = attack_seed;
                o.run_id = "sim_" + s.label + seed_tag(seed);
                run = fly(world, seed, o);
            } else {
                run = csv_attack(scenario, baseline, attack_seed);
                run.meta.run_id = "csv_" + s.label + seed_tag(seed);
            }
            const std::string dir = std::string(sim ? "sim/" : "csv/") + s.label;
            run.raw_files["scenario.yaml"] = config::dump_attack_spec(s, defaults);
            store(run, root / dir, a.common.plot);
            std::lock_guard lock(log_mutex);
            entries[job / 2][sim ? "simulation" : "csv"] = {{"status", "ok"},
                                                             {"dir", dir},
                                                             {"run_id", run.meta.run_id},
                                                             {"outcome", std::string(to_string(run.outcome))},
                                                             {"window", window_json(run.window)}};
        });
        for (std::size_t job = 0; job < errors.size(); ++job) {
            if (!errors[job]) continue;
            ++failed;
            const auto msg = message_of(errors[job]);
            err << "spec " << specs[job / 2].label << " (" << (job % 2 == 0 ? "simulation" : "csv") << ") failed: " << msg
                << "\n";
            entries[job / 2][job % 2 == 0 ? "simulation" : "csv"] = {{"status", "failed"}, {"error", msg}};
        }
    }
    index["entries"] = entries;
    write_text(root / "index.json", index.dump(2) + "\n");

    const std::size_t total = a.dry_run ? 0 : specs.size() * 2;
    out << "matrix: " << specs.size() << " specs";
    if (!a.dry_run) out << ", " << (total - failed) << " of " << total << " runs ok";
    out << ", index " << (root / "index.json").string() << "\n";
    return total > 0 && failed == total ? kDataError : kOk;
}

// ---- attack-csv ----

struct AttackCsvArgs {
    Common common;
    std::string baseline;
    std::string scenario;
    std::optional<std::uint64_t> window_start;
    std::optional<std::uint64_t> window_end;
};

int cmd_attack_csv(const AttackCsvArgs& a, std::ostream& out) {
    if (a.window_start.has_value() != a.window_end.has_value()) {
        throw UsageError("attack-csv: --window-start-us and --window-end-us go together");
    }
    const auto text = config::read_text(a.scenario);
    const auto scenario = config::parse_scenario(text, a.scenario);
    const auto baseline = import_run(a.baseline);

    LabeledRun run;
    if (a.window_start) {
        Rng rng(a.common.seed);
        run = apply_offline(scenario.actions, baseline, AttackWindow{Timestamp{*a.window_start}, Timestamp{*a.window_end}},
                            rng);
        run.meta.scenario = scenario.label;
    } else {
        run = csv_attack(scenario, baseline, a.common.seed);
    }
    run.meta.run_id = "csv_" + scenario.label + "_" + baseline.meta.run_id;
    run.raw_files["scenario.yaml"] = text;
    store(run, a.common.out, a.common.plot);
    out << run.meta.run_id << ": window " << window_text(run.window) << "\n";
    return kOk;
}

// ---- eval ----

struct EvalArgs {
    std::string normal;
    std::vector<std::string> attacked;
    std::vector<std::string> detectors{"statistical"};
    std::string out;
    unsigned jobs = 1;
    std::size_t external_k = 1;
    StatConfig stat;
};

std::vector<fs::path> discover_runs(const fs::path& root) {
    std::error_code ec;
    if (fs::is_regular_file(root, ec)) return {root};
    if (!fs::is_directory(root, ec)) throw IoFailure(root.string() + ": no such directory");
    std::vector<fs::path> found;
    if (fs::exists(root / "merged.csv", ec)) found.push_back(root);
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        if (it->is_directory() && fs::exists(it->path() / "merged.csv", ec)) found.push_back(it->path());
    }
    std::sort(found.begin(), found.end());
    return found;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    a.stat.validate();
    std::vector<LabeledRun> normals, sim, csv;
    for (const auto& p : discover_runs(a.normal)) {
        auto run = import_run(p);
        if (run.window || run.meta.mode != RunMode::baseline) {
            throw SchemaError(p.string() + ": attacked run in the normal cohort");
        }
        normals.push_back(std::move(run));
    }
    for (const auto& dir : a.attacked) {
        for (const auto& p : discover_runs(dir)) {
            auto run = import_run(p);
            if (run.meta.mode == RunMode::simulation_attack) {
                sim.push_back(std::move(run));
            } else if (run.meta.mode == RunMode::csv_attack) {
                csv.push_back(std::move(run));
            } else {
                throw SchemaError(p.string() + ": baseline run in an attacked cohort");
            }
        }
    }

    const fs::path work = a.out.empty() ? fs::temp_directory_path() / "scart-eval" : fs::path(a.out) / "detector_work";
    std::vector<EvalReport> reports;
    for (const auto& name : a.detectors) {
        std::unique_ptr<Detector> detector;
        if (name == "statistical") {
            detector = std::make_unique<StatisticalDetector>(a.stat);
        } else {
            detector = std::make_unique<ExternalDetector>(name, work / fs::path(name).filename(), a.external_k);
        }
        reports.push_back(evaluate(normals, sim, csv, *detector, a.jobs));
    }

    const auto table = render_table(reports);
    out << table;
    if (!a.out.empty()) {
        write_text(fs::path(a.out) / "eval.txt", table);
        write_text(fs::path(a.out) / "eval.json", report_json(reports));
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attack injection, labeled flight datasets and detector evaluation", "scart"};
    app.require_subcommand(1);

    BaselineArgs baseline;
    auto* b = app.add_subcommand("baseline", "Fly the mission without attacks n times");
    b->add_option("-n,--runs", baseline.n_runs, "Number of runs")->capture_default_str();
    b->add_option("--out", baseline.common.out, "Output directory")->required();
    b->add_option("--jobs", baseline.common.jobs, "Worker threads")->check(CLI::PositiveNumber);
    add_sim_options(b, baseline.common);

    RunArgs run_args;
    auto* r = app.add_subcommand("run", "Fly one scenario in simulation mode");
    r->add_option("scenario", run_args.scenario, "Scenario YAML file")->required();
    r->add_option("--out", run_args.common.out, "Output directory")->required();
    r->add_option("--attack-seed", run_args.attack_seed, "Seed of the attack layer (default: --seed)");
    add_sim_options(r, run_args.common);

    MatrixArgs matrix;
    auto* m = app.add_subcommand("matrix", "Sweep the attack matrix in simulation and csv mode");
    m->add_option("--defaults", matrix.defaults, "Matrix defaults YAML file");
    m->add_option("--out", matrix.common.out, "Output directory")->required();
    m->add_option("--baseline", matrix.baseline, "Recorded baseline run for csv mode (default: fly one)");
    m->add_option("--chain", matrix.chain, "Only chains equal to this kind set, e.g. AddWhiteNoise or none");
    m->add_option("--start", matrix.start, "Only start-condition sets equal to this kind set");
    m->add_option("--end", matrix.end, "Only end-condition sets equal to this kind set");
    m->add_flag("--dry-run", matrix.dry_run, "Write specs and index without flying");
    m->add_option("--jobs", matrix.common.jobs, "Worker threads")->check(CLI::PositiveNumber);
    add_sim_options(m, matrix.common);

    AttackCsvArgs attack;
    auto* c = app.add_subcommand("attack-csv", "Apply a scenario's actions offline to a recorded baseline");
    c->add_option("--baseline", attack.baseline, "Baseline run directory or merged.csv")->required();
    c->add_option("--scenario", attack.scenario, "Scenario YAML file")->required();
    c->add_option("--out", attack.common.out, "Output directory")->required();
    c->add_option("--seed", attack.common.seed, "Attack seed");
    c->add_option("--window-start-us", attack.window_start, "Explicit window start instead of replaying the scenario");
    c->add_option("--window-end-us", attack.window_end, "Explicit window end");
    c->add_flag("--plot", attack.common.plot, "Write SVG plots next to the data");

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "Evaluate detectors: TP on attacked cohorts, TN on normal flights");
    e->add_option("--normal", eval.normal, "Directory of baseline runs")->required();
    e->add_option("--attacked", eval.attacked, "Directory of attacked runs (repeatable)");
    e->add_option("--detector", eval.detectors,
                  "'statistical' or an executable run as: exe <merged.csv> <out_dir> <run_id> (repeatable)")
        ->capture_default_str();
    e->add_option("--out", eval.out, "Directory for eval.txt and eval.json");
    e->add_option("--jobs", eval.jobs, "Worker threads")->check(CLI::PositiveNumber);
    e->add_option("--external-k", eval.external_k, "Consecutive flags that mark an external detector's flight")
        ->capture_default_str();
    e->add_option("--window-n", eval.stat.window_n, "Rolling window length, in updates")->capture_default_str();
    e->add_option("--z-thresh", eval.stat.z_thresh, "Deviation from the trailing mean, in trailing sigmas")->capture_default_str();
    e->add_option("--var-ratio", eval.stat.var_ratio_thresh, "Rolling variance over calibration variance")->capture_default_str();
    e->add_option("--ma-resid", eval.stat.ma_resid_thresh, "Distance from the moving average, in calibration sigmas")->capture_default_str();
    e->add_option("--min-votes", eval.stat.min_votes, "Statistics that must agree to flag a point")->capture_default_str();
    e->add_option("--consecutive-k", eval.stat.consecutive_k, "Flagged updates in a row that flag the flight")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& x) {
        return app.exit(x, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (*b) return cmd_baseline(baseline, out, err);
        if (*r) return cmd_run(run_args, out);
        if (*m) return cmd_matrix(matrix, out, err);
        if (*c) return cmd_attack_csv(attack, out);
        if (*e) return cmd_eval(eval, out);
    } catch (...) {
        return code_for(std::current_exception(), err);
    }
    return kInternal;
}

}  // namespace scart::cli
