#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "ecwm/analysis.hpp"

namespace ecwm::svg {

// Minimal static renderings of the sweep and Voronoi data.

inline std::string colour(std::size_t i, std::size_t n) {
    const double hue = 360.0 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1));
    char buf[48];
    std::snprintf(buf, sizeof buf, "hsl(%.1f,65%%,60%%)", hue);
    return buf;
}

class Canvas {
public:
    Canvas(double width, double height) : width_(width), height_(height) {}

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
              << "\" fill=\"" << fill << "\"/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << r << "\" fill=\"" << fill
              << "\" stroke=\"black\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke) {
        body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
              << "\" stroke=\"" << stroke << "\" stroke-dasharray=\"4 2\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 12) {
        body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
              << "\" font-family=\"sans-serif\">" << s << "</text>\n";
    }

    std::string str() const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
           << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    double width_;
    double height_;
    std::ostringstream body_;
};

inline std::string render_voronoi(const NearestPointMap& map, std::uint64_t modulus,
                                  const std::vector<VoronoiCell>& cells, std::size_t resolution) {
    const double px = 480.0;
    const double margin = 20.0;
    const double scale = px / static_cast<double>(modulus);
    const double cell = px / static_cast<double>(resolution);
    Canvas c(px + 2 * margin, px + 2 * margin);
    const auto n = map.points().size();
    for (const auto& v : cells) {
        // y axis points up
        c.rect(margin + v.gx * scale, margin + px - v.gy * scale - cell, cell, cell, colour(v.seed, n));
    }
    for (const auto& p : map.points()) {
        c.circle(margin + static_cast<double>(p.x().value()) * scale,
                 margin + px - static_cast<double>(p.y().value()) * scale, 3.0, "black");
    }
    return c.str();
}

inline std::string render_sweep(const NearestPointMap& map, const std::vector<SweepResult>& results) {
    const double panel_w = 480.0;
    const double panel_h = 160.0;
    const double margin = 30.0;
    Canvas c(panel_w + 2 * margin, static_cast<double>(results.size()) * (panel_h + margin) + margin);
    const auto n = map.points().size();
    const double bar = panel_w / static_cast<double>(n);
    const double uniform = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < results.size(); ++r) {
        const double top = margin + static_cast<double>(r) * (panel_h + margin);
        double peak = uniform;
        for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, results[r].rel_freq(i));
        std::ostringstream title;
        title << "r = " << results[r].reference;
        c.text(margin, top - 6.0, title.str());
        for (std::size_t i = 0; i < n; ++i) {
            const double h = panel_h * results[r].rel_freq(i) / peak;
            c.rect(margin + static_cast<double>(i) * bar + 1.0, top + panel_h - h, bar - 2.0, h, colour(i, n));
        }
        const double uy = top + panel_h - panel_h * uniform / peak;
        c.line(margin, uy, margin + panel_w, uy, "black");
    }
    return c.str();
}

}  // namespace ecwm::svg
