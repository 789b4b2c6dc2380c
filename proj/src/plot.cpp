#include "scart/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <vector>

namespace scart {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 40.0;

struct Extent {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double map(double v, double from, double to) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return from + (v - lo) / span * (to - from);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string header(const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
           "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           "<text x=\"" + fmt(kMargin) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* colour) {
    if (pts.empty()) return {};
    std::string out = "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1\" points=\"";
    for (const auto& [x, y] : pts) out += fmt(x) + "," + fmt(y) + " ";
    out.back() = '"';
    return out + "/>\n";
}

}  // namespace

std::string trajectory_svg(const LabeledRun& run) {
    Extent ex, ey;
    for (const auto& p : run.truth) {
        ex.add(p.x);
        ey.add(p.y);
    }
    // Equal scale on both axes.
    const double span = std::max({ex.hi - ex.lo, ey.hi - ey.lo, 1.0});
    ex.hi = ex.lo + span;
    ey.hi = ey.lo + span;
    const double side = kHeight - 2 * kMargin;

    std::vector<std::pair<double, double>> before, during, after;
    for (const auto& p : run.truth) {
        auto& bucket = !run.window || p.ts < run.window->start ? before : run.window->contains(p.ts) ? during : after;
        bucket.emplace_back(ex.map(p.x, kMargin, kMargin + side), ey.map(p.y, kMargin + side, kMargin));
    }
    std::string out = header("flight path " + run.meta.run_id);
    out += polyline(before, "steelblue") + polyline(during, "crimson") + polyline(after, "gray");
    return out + "</svg>\n";
}

std::string sensor_svg(const LabeledRun& run, const SensorId& sensor) {
    const auto nav = run.nav.series(sensor);
    const auto sim = run.sim.series(sensor);
    Extent et, ev;
    for (const auto& series : {nav, sim}) {
        for (const auto& p : series) {
            et.add(p.ts.seconds());
            ev.add(p.value);
        }
    }
    auto project = [&](std::span<const HistoryPoint> series) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : series) {
            pts.emplace_back(et.map(p.ts.seconds(), kMargin, kWidth - kMargin),
                             ev.map(p.value, kHeight - kMargin, kMargin));
        }
        return pts;
    };
    std::string out = header(sensor.name() + " " + run.meta.run_id);
    if (run.window && !nav.empty()) {
        const double x0 = et.map(run.window->start.seconds(), kMargin, kWidth - kMargin);
        const double x1 = et.map(run.window->end.seconds(), kMargin, kWidth - kMargin);
        out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(kMargin) + "\" width=\"" + fmt(std::max(x1 - x0, 1.0)) +
               "\" height=\"" + fmt(kHeight - 2 * kMargin) + "\" fill=\"mistyrose\"/>\n";
    }
    out += polyline(project(sim), "gray") + polyline(project(nav), "steelblue");
    return out + "</svg>\n";
}

}  // namespace scart
