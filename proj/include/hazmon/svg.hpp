#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmon/geometry.hpp"

namespace hazmon {

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// two-stop perceptible ramp from deep blue to yellow for scalar fields
inline std::string heat_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto ch = [](double a, double b, double t) {
        return static_cast<int>(std::lround(a + (b - a) * t));
    };
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", ch(33, 253, t), ch(36, 231, t),
                  ch(92, 37, t));
    return buf;
}

}  // namespace detail

// world-coordinate drawing surface with the y axis pointing up, written out
// as a standalone SVG document
class SvgCanvas {
public:
    SvgCanvas(RectDomain world, double width_px, double margin_px = 40.0)
        : world_(world),
          margin_(margin_px),
          scale_((width_px - 2.0 * margin_px) / world.width()),
          width_(width_px),
          height_(world.height() * scale_ + 2.0 * margin_px) {
        if (!(scale_ > 0.0)) throw std::invalid_argument("SvgCanvas: width too small");
    }

    double px(double x) const { return margin_ + (x - world_.x_min) * scale_; }
    double py(double y) const { return height_ - margin_ - (y - world_.y_min) * scale_; }

    void rect(Point2 lo, Point2 hi, const std::string& fill, double opacity = 1.0,
              const std::string& stroke = "none") {
        body_ << "<rect x=\"" << detail::svg_num(px(lo.x)) << "\" y=\""
              << detail::svg_num(py(hi.y)) << "\" width=\""
              << detail::svg_num((hi.x - lo.x) * scale_) << "\" height=\""
              << detail::svg_num((hi.y - lo.y) * scale_) << "\" fill=\"" << fill
              << "\" fill-opacity=\"" << detail::svg_num(opacity) << "\" stroke=\"" << stroke
              << "\"/>\n";
    }

    void circle(Point2 c, double r_px, const std::string& fill,
                const std::string& stroke = "none") {
        body_ << "<circle cx=\"" << detail::svg_num(px(c.x)) << "\" cy=\""
              << detail::svg_num(py(c.y)) << "\" r=\"" << detail::svg_num(r_px) << "\" fill=\""
              << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void square(Point2 c, double half_px, const std::string& fill) {
        body_ << "<rect x=\"" << detail::svg_num(px(c.x) - half_px) << "\" y=\""
              << detail::svg_num(py(c.y) - half_px) << "\" width=\""
              << detail::svg_num(2.0 * half_px) << "\" height=\""
              << detail::svg_num(2.0 * half_px) << "\" fill=\"" << fill << "\"/>\n";
    }

    void polyline(const std::vector<Point2>& pts, const std::string& stroke, double width_px,
                  double opacity = 1.0) {
        if (pts.size() < 2) return;
        body_ << "<polyline points=\"";
        for (const auto& p : pts)
            body_ << detail::svg_num(px(p.x)) << "," << detail::svg_num(py(p.y)) << " ";
        body_ << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
              << detail::svg_num(width_px) << "\" stroke-opacity=\""
              << detail::svg_num(opacity) << "\"/>\n";
    }

    void line(Point2 a, Point2 b, const std::string& stroke, double width_px) {
        polyline({a, b}, stroke, width_px);
    }

    // text anchored in pixel space so labels stay upright
    void text_px(double x_px, double y_px, const std::string& s, double size_px = 12.0,
                 const std::string& anchor = "start", const std::string& fill = "#333") {
        body_ << "<text x=\"" << detail::svg_num(x_px) << "\" y=\"" << detail::svg_num(y_px)
              << "\" font-family=\"sans-serif\" font-size=\"" << detail::svg_num(size_px)
              << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">" << escape(s)
              << "</text>\n";
    }

    void text(Point2 p, const std::string& s, double size_px = 12.0,
              const std::string& anchor = "middle") {
        text_px(px(p.x), py(p.y), s, size_px, anchor);
    }

    void raw(const std::string& fragment) { body_ << fragment; }

    void frame() {
        body_ << "<rect x=\"" << detail::svg_num(px(world_.x_min)) << "\" y=\""
              << detail::svg_num(py(world_.y_max)) << "\" width=\""
              << detail::svg_num(world_.width() * scale_) << "\" height=\""
              << detail::svg_num(world_.height() * scale_)
              << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    }

    const RectDomain& world() const { return world_; }
    double width_px() const { return width_; }
    double height_px() const { return height_; }

    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
            << detail::svg_num(width_) << "\" height=\"" << detail::svg_num(height_)
            << "\" viewBox=\"0 0 " << detail::svg_num(width_) << " "
            << detail::svg_num(height_) << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write SVG file '" + path + "'");
        out << str();
    }

private:
    static std::string escape(const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (char c : s) {
            if (c == '&') out += "&amp;";
            else if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else out += c;
        }
        return out;
    }

    RectDomain world_;
    double margin_;
    double scale_;
    double width_;
    double height_;
    std::ostringstream body_;
};

// cell values rendered as filled rectangles over the grid extent
inline void draw_heatmap(SvgCanvas& canvas, const UniformGrid& grid,
                         const std::vector<double>& values, double v_min, double v_max) {
    if (static_cast<int>(values.size()) != grid.num_cells())
        throw std::invalid_argument("draw_heatmap: one value per grid cell required");
    const double span = v_max > v_min ? v_max - v_min : 1.0;
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const RectDomain cell = grid.cell_bounds(ix, iy);
            const double v = values[static_cast<std::size_t>(iy) * grid.nx + ix];
            canvas.rect(Point2{cell.x_min, cell.y_min}, Point2{cell.x_max, cell.y_max},
                        detail::heat_color((v - v_min) / span));
        }
    }
}

// grouped bar chart with optional symmetric error bars; values and errors are
// indexed [series][group]
struct BarChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> group_labels;
    std::vector<std::string> series_names;
    std::vector<std::string> series_colors;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> errors;
};

inline void write_bar_chart(const BarChart& chart, const std::string& path) {
    const std::size_t n_series = chart.values.size();
    const std::size_t n_groups = chart.group_labels.size();
    if (n_series == 0 || n_groups == 0)
        throw std::invalid_argument("write_bar_chart: empty chart");
    double top = 0.0;
    for (std::size_t s = 0; s < n_series; ++s) {
        if (chart.values[s].size() != n_groups)
            throw std::invalid_argument("write_bar_chart: ragged values");
        for (std::size_t g = 0; g < n_groups; ++g) {
            const double err = chart.errors.empty() ? 0.0 : chart.errors[s][g];
            top = std::max(top, chart.values[s][g] + err);
        }
    }
    if (top <= 0.0) top = 1.0;
    top *= 1.15;

    SvgCanvas canvas(RectDomain(0.0, static_cast<double>(n_groups), 0.0, top), 640.0, 56.0);
    canvas.frame();

    const double slot = 1.0 / (static_cast<double>(n_series) + 1.0);
    for (std::size_t s = 0; s < n_series; ++s) {
        const std::string& color =
            s < chart.series_colors.size() ? chart.series_colors[s] : "#888888";
        for (std::size_t g = 0; g < n_groups; ++g) {
            const double x0 = static_cast<double>(g) + slot * (0.5 + static_cast<double>(s));
            const double v = chart.values[s][g];
            canvas.rect(Point2{x0, 0.0}, Point2{x0 + slot, std::max(v, 0.0)}, color, 0.9);
            if (!chart.errors.empty() && chart.errors[s][g] > 0.0) {
                const double xc = x0 + 0.5 * slot;
                const double err = chart.errors[s][g];
                canvas.line(Point2{xc, std::max(v - err, 0.0)}, Point2{xc, v + err}, "#222",
                            1.5);
            }
        }
    }

    for (std::size_t g = 0; g < n_groups; ++g)
        canvas.text(Point2{static_cast<double>(g) + 0.5, -0.03 * top}, chart.group_labels[g]);
    const int y_ticks = 4;
    for (int i = 0; i <= y_ticks; ++i) {
        const double v = top * i / y_ticks;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", v);
        canvas.text_px(canvas.px(0.0) - 6.0, canvas.py(v) + 4.0, buf, 11.0, "end");
    }
    canvas.text_px(canvas.width_px() / 2.0, 20.0, chart.title, 14.0, "middle");
    canvas.text_px(canvas.width_px() / 2.0, canvas.height_px() - 8.0, chart.x_label, 12.0,
                   "middle");
    canvas.text_px(14.0, 30.0, chart.y_label, 12.0, "start");

    double legend_x = canvas.width_px() - 170.0;
    double legend_y = 34.0;
    for (std::size_t s = 0; s < n_series; ++s) {
        const std::string& color =
            s < chart.series_colors.size() ? chart.series_colors[s] : "#888888";
        std::ostringstream swatch;
        swatch << "<rect x=\"" << detail::svg_num(legend_x) << "\" y=\""
               << detail::svg_num(legend_y - 9.0)
               << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        canvas.raw(swatch.str());
        canvas.text_px(legend_x + 18.0, legend_y + 2.0, chart.series_names[s], 12.0);
        legend_y += 18.0;
    }

    canvas.write(path);
}

}  // namespace hazmon
