#pragma once

// Aggregated result tables and SVG line charts (mean +- SE vs labeled fraction).

#include "fluidlab/core.hpp"
#include "fluidlab/dataio.hpp"
#include "fluidlab/evaluation.hpp"
#include "fluidlab/records.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fluidlab {

inline void write_cells_csv(std::ostream& out, const std::map<CellKey, CellStats>& cells,
                            const std::string& only_algorithm = {})
{
    out << "algorithm,target,metric,labeled_fraction,n,mean,se,se_defined\n";
    for (const auto& [k, s] : cells) {
        if (!only_algorithm.empty() && k.algorithm != only_algorithm)
            continue;
        out << k.algorithm << ',' << k.target << ',' << k.metric << ',' << format_double(k.labeled_fraction, 6) << ','
            << s.n << ',' << format_double(s.mean, 9) << ',' << format_double(s.se, 9) << ','
            << (s.se_defined ? 1 : 0) << '\n';
    }
}

/// File-name-safe form of an algorithm name ("self_training[A+F]" -> "self_training_A_F").
inline std::string file_stem(const std::string& name)
{
    std::string s;
    for (char c : name)
        s += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
    while (!s.empty() && s.back() == '_')
        s.pop_back();
    return s;
}

namespace detail {

inline std::string xml_escape(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

inline std::string fmt(double v) { return format_double(v, 6); }

} // namespace detail

struct ChartSeries {
    std::string name;
    std::vector<double> x, mean, se;
};

/// One chart: a polyline per series with vertical error bars.
inline std::string render_svg(const std::string& title, const std::string& y_label,
                              const std::vector<ChartSeries>& series)
{
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    const double W = 640, H = 420, left = 64, right = 190, top = 40, bottom = 56;
    const double pw = W - left - right, ph = H - top - bottom;

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.mean[i] - s.se[i]);
            y1 = std::max(y1, s.mean[i] + s.se[i]);
        }
    if (x0 > x1) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    if (x1 - x0 < 1e-12)
        x0 -= 0.05, x1 += 0.05;
    const double pad = std::max(0.02, 0.08 * (y1 - y0));
    y0 -= pad, y1 += pad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::xml_escape(title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double yv = y0 + (y1 - y0) * t / 5.0, xv = x0 + (x1 - x0) * t / 5.0;
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << detail::fmt(py(yv)) << "\" y2=\""
          << detail::fmt(py(yv)) << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << detail::fmt(py(yv) + 4) << "\" text-anchor=\"end\">"
          << format_double(yv, 3) << "</text>\n";
        o << "<text x=\"" << detail::fmt(px(xv)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
          << format_double(xv, 3) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 14 << "\" text-anchor=\"middle\">labeled fraction</text>\n";
    o << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::xml_escape(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = palette[si % std::size(palette)];
        o << "<g stroke=\"" << col << "\" fill=\"" << col << "\">\n";
        o << "<polyline fill=\"none\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            o << (i ? " " : "") << detail::fmt(px(s.x[i])) << ',' << detail::fmt(py(s.mean[i]));
        o << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double cx = px(s.x[i]);
            o << "<line x1=\"" << detail::fmt(cx) << "\" x2=\"" << detail::fmt(cx) << "\" y1=\""
              << detail::fmt(py(s.mean[i] - s.se[i])) << "\" y2=\"" << detail::fmt(py(s.mean[i] + s.se[i]))
              << "\"/>\n";
            o << "<circle cx=\"" << detail::fmt(cx) << "\" cy=\"" << detail::fmt(py(s.mean[i])) << "\" r=\"2.5\"/>\n";
        }
        const double ly = top + 14 + 18 * static_cast<double>(si);
        o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 34 << "\" y1=\"" << ly - 4 << "\" y2=\""
          << ly - 4 << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly << "\" stroke=\"none\" fill=\"#000\">"
          << detail::xml_escape(s.name) << "</text>\n";
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Writes summary.csv, one <algorithm>.csv per algorithm and one
/// <target>_<metric>.svg per chart. Returns the files written.
inline std::vector<std::filesystem::path> write_report(const std::vector<ResultRow>& rows,
                                                       const std::filesystem::path& dir)
{
    require(!rows.empty(), "report: no result rows");
    std::filesystem::create_directories(dir);
    const auto cells = aggregate(rows);
    std::vector<std::filesystem::path> written;

    auto open = [&](const std::filesystem::path& p) {
        std::ofstream out(p);
        if (!out)
            throw ValidationError("cannot write " + p.string());
        written.push_back(p);
        return out;
    };
    {
        auto out = open(dir / "summary.csv");
        write_cells_csv(out, cells);
    }
    std::set<std::string> algorithms;
    std::set<std::pair<std::string, std::string>> charts;
    for (const auto& [k, s] : cells) {
        algorithms.insert(k.algorithm);
        charts.insert({k.target, k.metric});
    }
    for (const auto& a : algorithms) {
        auto out = open(dir / (file_stem(a) + ".csv"));
        write_cells_csv(out, cells, a);
    }
    for (const auto& [target, metric] : charts) {
        std::vector<ChartSeries> series;
        for (const auto& a : algorithms) {
            ChartSeries s;
            s.name = a;
            for (const auto& [k, st] : cells)
                if (k.algorithm == a && k.target == target && k.metric == metric) {
                    s.x.push_back(k.labeled_fraction);
                    s.mean.push_back(st.mean);
                    s.se.push_back(st.se);
                }
            if (!s.x.empty())
                series.push_back(std::move(s));
        }
        auto out = open(dir / (target + "_" + metric + ".svg"));
        out << render_svg(target + ": " + metric, metric, series);
    }
    return written;
}

} // namespace fluidlab
