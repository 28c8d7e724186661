#include "gmmbench/svg_plot.hpp"

#include "gmmbench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gmmbench {

namespace {

struct SeriesPoint {
    double x;
    double mean;
    double std_dev;
};

struct Series {
    std::string name;
    std::vector<SeriesPoint> points;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;  // avoid a "-0" label
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

double nice_step(double range, int target_ticks) {
    const double raw = range / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (mag * mult >= raw) return mag * mult;
    return mag * 10.0;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};

}  // namespace

void emit_plot(const SweepResult& result, const std::string& path) {
    emit_plot(result.records, experiment_name(result.config.experiment), path,
              result.config.average_domain);
}

void emit_plot(const std::vector<NmseRecord>& records, const std::string& experiment,
               const std::string& path, AverageDomain domain) {
    if (records.empty()) throw InvalidConfigError("emit_plot: no records");

    const bool snr_axis = experiment == "snr_a_sweep" || experiment == "mismatch_b_sweep";
    const std::string x_label = snr_axis ? "SNR (dB)"
                                         : (records.front().sweep_name == "n_total"
                                                ? "training set size (total samples)"
                                                : records.front().sweep_name);

    // Estimators in first-appearance order, oracle variants first.
    std::vector<std::string> order;
    auto add_name = [&](const std::string& name) {
        if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    };
    for (const auto& rec : records)
        if (rec.estimator == kOracleName) add_name(rec.estimator);
    for (const auto& rec : records)
        if (rec.estimator == kOracleTrainMatchedName) add_name(rec.estimator);
    for (const auto& rec : records) add_name(rec.estimator);

    std::map<std::string, Series> by_name;
    for (const auto& row : aggregate(records, domain)) {
        Series& s = by_name[row.estimator];
        s.name = row.estimator;
        s.points.push_back({snr_axis ? row.snr_db : row.sweep_value, row.mean_nmse_db,
                            row.std_nmse_db});
    }
    std::vector<Series> series;
    for (const auto& name : order) {
        Series s = by_name.at(name);
        std::sort(s.points.begin(), s.points.end(),
                  [](const SeriesPoint& a, const SeriesPoint& b) { return a.x < b.x; });
        series.push_back(std::move(s));
    }

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            x_min = std::min(x_min, p.x);
            x_max = std::max(x_max, p.x);
            y_min = std::min(y_min, p.mean - p.std_dev);
            y_max = std::max(y_max, p.mean + p.std_dev);
        }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;
    const double y_pad = 0.06 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double width = 880, height = 540;
    const double left = 70, right = width - 210, top = 50, bottom = height - 60;
    auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (right - left); };
    auto sy = [&](double y) { return bottom - (y - y_min) / (y_max - y_min) * (bottom - top); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << fmt((left + right) / 2) << "\" y=\"28\" font-family=\"sans-serif\" "
           "font-size=\"17\" text-anchor=\"middle\">"
        << experiment << " (mean &#177; std over MC runs)</text>\n";

    // grid + ticks
    const double x_step = nice_step(x_max - x_min, 6);
    const double y_step = nice_step(y_max - y_min, 6);
    svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
    for (double tx = std::ceil(x_min / x_step) * x_step; tx <= x_max + 1e-9; tx += x_step) {
        svg << "<line x1=\"" << fmt(sx(tx)) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(sx(tx))
            << "\" y2=\"" << fmt(bottom) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
            << "<text x=\"" << fmt(sx(tx)) << "\" y=\"" << fmt(bottom + 18)
            << "\" text-anchor=\"middle\">" << fmt_tick(tx) << "</text>\n";
    }
    for (double ty = std::ceil(y_min / y_step) * y_step; ty <= y_max + 1e-9; ty += y_step) {
        svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(sy(ty)) << "\" x2=\"" << fmt(right)
            << "\" y2=\"" << fmt(sy(ty)) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
            << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(sy(ty) + 4)
            << "\" text-anchor=\"end\">" << fmt_tick(ty) << "</text>\n";
    }
    svg << "</g>\n"
        << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\""
        << fmt(right - left) << "\" height=\"" << fmt(bottom - top)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.2\"/>\n"
        << "<text x=\"" << fmt((left + right) / 2) << "\" y=\"" << fmt(height - 14)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">" << x_label
        << "</text>\n"
        << "<text x=\"20\" y=\"" << fmt((top + bottom) / 2)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 20 "
        << fmt((top + bottom) / 2) << ")\">NMSE (dB)</text>\n";

    int color_index = 0;
    double legend_y = top + 12;
    for (const auto& s : series) {
        std::string color;
        std::string dash;
        if (s.name == kOracleName) {
            color = "#000000";
            dash = " stroke-dasharray=\"7 4\"";
        } else if (s.name == kOracleTrainMatchedName) {
            color = "#777777";
            dash = " stroke-dasharray=\"3 3\"";
        } else {
            color = kPalette[color_index++ % (sizeof(kPalette) / sizeof(kPalette[0]))];
        }

        std::ostringstream poly;
        for (const auto& p : s.points) poly << fmt(sx(p.x)) << ',' << fmt(sy(p.mean)) << ' ';
        svg << "<polyline points=\"" << poly.str() << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\"" << dash << "/>\n";

        for (const auto& p : s.points) {
            if (p.std_dev > 0.0) {
                const double x = sx(p.x);
                svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(sy(p.mean - p.std_dev))
                    << "\" x2=\"" << fmt(x) << "\" y2=\"" << fmt(sy(p.mean + p.std_dev))
                    << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n"
                    << "<line x1=\"" << fmt(x - 3) << "\" y1=\"" << fmt(sy(p.mean - p.std_dev))
                    << "\" x2=\"" << fmt(x + 3) << "\" y2=\"" << fmt(sy(p.mean - p.std_dev))
                    << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n"
                    << "<line x1=\"" << fmt(x - 3) << "\" y1=\"" << fmt(sy(p.mean + p.std_dev))
                    << "\" x2=\"" << fmt(x + 3) << "\" y2=\"" << fmt(sy(p.mean + p.std_dev))
                    << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
            }
            svg << "<circle cx=\"" << fmt(sx(p.x)) << "\" cy=\"" << fmt(sy(p.mean))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }

        svg << "<line x1=\"" << fmt(right + 14) << "\" y1=\"" << fmt(legend_y) << "\" x2=\""
            << fmt(right + 44) << "\" y2=\"" << fmt(legend_y) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"" << dash << "/>\n"
            << "<text x=\"" << fmt(right + 50) << "\" y=\"" << fmt(legend_y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.name << "</text>\n";
        legend_y += 20;
    }

    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("emit_plot: cannot open '" + path + "' for writing");
    out << svg.str();
    if (!out) throw IoError("emit_plot: write failed for '" + path + "'");
}

}  // namespace gmmbench
