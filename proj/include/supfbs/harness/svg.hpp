// Self-contained SVG line plots of metric series.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace supfbs {

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title;
    std::string x_label = "k";
    std::string y_label;
    bool log_y = true;
    std::optional<double> reference;  ///< horizontal dashed line
    int width = 720, height = 440;
};

namespace detail {

inline std::string xml_escape(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

inline std::string tick_label(double v)
{
    std::ostringstream os;
    os << std::setprecision(3) << v;
    return os.str();
}

} // namespace detail

/// Points with y <= 0 (log scale) or non-finite values are skipped.
inline void write_svg(std::ostream& os, const PlotSpec& spec, const std::vector<PlotSeries>& series)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
    auto usable = [&](double y) { return std::isfinite(y) && (!spec.log_y || y > 0.0); };
    auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (std::isfinite(s.x[i]) && usable(s.y[i])) {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, ty(s.y[i]));
                ymax = std::max(ymax, ty(s.y[i]));
            }
        }
    }
    if (spec.reference && usable(*spec.reference)) {
        ymin = std::min(ymin, ty(*spec.reference));
        ymax = std::max(ymax, ty(*spec.reference));
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax <= xmin) {
        xmax = xmin + 1.0;
    }
    if (ymax <= ymin) {
        ymax = ymin + 1.0;
    }

    const double left = 80, right = 170, top = 40, bottom = 50;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
       << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << detail::xml_escape(spec.title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double yv = spec.log_y ? std::pow(10.0, fy) : fy;
        os << "<text x=\"" << px(fx) << "\" y=\"" << top + ph + 18
           << "\" text-anchor=\"middle\">" << detail::tick_label(fx) << "</text>\n";
        const double yy = top + (1.0 - (fy - ymin) / (ymax - ymin)) * ph;
        os << "<text x=\"" << left - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">"
           << detail::tick_label(yv) << "</text>\n";
        os << "<line x1=\"" << left << "\" y1=\"" << yy << "\" x2=\"" << left + pw << "\" y2=\""
           << yy << "\" stroke=\"#ddd\"/>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 10
       << "\" text-anchor=\"middle\">" << detail::xml_escape(spec.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << top + ph / 2 << ")\">" << detail::xml_escape(spec.y_label + (spec.log_y ? " (log)" : ""))
       << "</text>\n";

    if (spec.reference && usable(*spec.reference)) {
        const double yy = py(*spec.reference);
        os << "<line x1=\"" << left << "\" y1=\"" << yy << "\" x2=\"" << left + pw << "\" y2=\"" << yy
           << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* col = colors[s % (sizeof(colors) / sizeof(colors[0]))];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        const auto& ser = series[s];
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
            if (std::isfinite(ser.x[i]) && usable(ser.y[i])) {
                os << px(ser.x[i]) << ',' << py(ser.y[i]) << ' ';
            }
        }
        os << "\"/>\n";
        const double ly = top + 12 + 18.0 * static_cast<double>(s);
        os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30
           << "\" y2=\"" << ly - 4 << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly << "\">"
           << detail::xml_escape(ser.label) << "</text>\n";
    }
    os << "</svg>\n";
}

inline void save_svg(const std::string& path, const PlotSpec& spec,
                     const std::vector<PlotSeries>& series)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path);
    }
    write_svg(os, spec, series);
}

} // namespace supfbs
