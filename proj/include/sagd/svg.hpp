#pragma once

#include "sagd/csv.hpp"

#include <Eigen/Dense>

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sagd {

// Convenience scatter/arrow panels (one panel per snapshot). Not load-bearing
// for any check; numeric outputs live in the CSVs.
class SvgPanels {
public:
    SvgPanels(const std::string& path, long panels, double lo, double hi, long panel_px = 220)
        : os_(path), panels_(panels), lo_(lo), hi_(hi), px_(panel_px) {
        if (!os_) throw std::runtime_error("SvgPanels: cannot open " + path);
        os_ << "<svg xmlns='http://www.w3.org/2000/svg' width='" << panels_ * (px_ + 10)
            << "' height='" << px_ + 30 << "'>\n";
    }

    void scatter(long panel, const Eigen::MatrixXd& pts, const std::string& color,
                 double radius = 1.2) {
        for (long j = 0; j < pts.cols(); ++j) {
            auto [x, y] = map(panel, pts(0, j), pts(1, j));
            os_ << "<circle cx='" << x << "' cy='" << y << "' r='" << radius << "' fill='" << color
                << "' fill-opacity='0.5'/>\n";
        }
    }

    void arrows(long panel, const Eigen::MatrixXd& pts, const Eigen::MatrixXd& vec, double scale,
                const std::string& color) {
        for (long j = 0; j < pts.cols(); ++j) {
            auto [x0, y0] = map(panel, pts(0, j), pts(1, j));
            auto [x1, y1] = map(panel, pts(0, j) + scale * vec(0, j), pts(1, j) + scale * vec(1, j));
            os_ << "<line x1='" << x0 << "' y1='" << y0 << "' x2='" << x1 << "' y2='" << y1
                << "' stroke='" << color << "' stroke-width='0.8'/>\n";
        }
    }

    void label(long panel, const std::string& text) {
        os_ << "<text x='" << panel * (px_ + 10) + 4 << "' y='" << px_ + 20
            << "' font-size='12'>" << text << "</text>\n";
    }

    void close() {
        if (!closed_) {
            os_ << "</svg>\n";
            closed_ = true;
        }
    }

    ~SvgPanels() { close(); }

private:
    std::pair<double, double> map(long panel, double x, double y) const {
        double u = (x - lo_) / (hi_ - lo_);
        double v = (y - lo_) / (hi_ - lo_);
        return {panel * (px_ + 10) + u * px_, px_ - v * px_};
    }

    std::ofstream os_;
    long panels_;
    double lo_, hi_;
    long px_;
    bool closed_ = false;
};

} // namespace sagd
