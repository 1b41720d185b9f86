#include "hyperstab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hyperstab::report {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const sim::Trajectory& tr) {
    out << trajectory_header << '\n';
    for (const auto& s : tr.samples) {
        out << fmt17(s.t) << ',' << fmt17(s.l2_norm) << ',' << fmt17(s.lyapunov_v) << ','
            << fmt17(s.d1_l2) << ',' << fmt17(s.d2_abs) << '\n';
    }
}

void write_trajectory_csv(const std::string& path, const sim::Trajectory& tr) {
    auto out = open_out(path);
    write_trajectory_csv(out, tr);
}

void write_snapshot_csv(std::ostream& out, const sim::Snapshot& s, double length) {
    const std::size_t n = s.u.size();
    out << 'x';
    for (std::size_t i = 0; i < n; ++i) out << ",u_" << i + 1;
    out << '\n';
    if (n == 0) return;
    const std::size_t nodes = s.u.front().size();
    for (std::size_t j = 0; j < nodes; ++j) {
        out << fmt17(length * static_cast<double>(j) / static_cast<double>(nodes - 1));
        for (std::size_t i = 0; i < n; ++i) out << ',' << fmt17(s.u[i][j]);
        out << '\n';
    }
}

std::vector<std::string> write_snapshots(const std::string& prefix, const sim::Trajectory& tr) {
    std::vector<std::string> paths;
    for (const auto& s : tr.snapshots) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", s.t);
        const std::string path = prefix + "_t" + buf + ".csv";
        auto out = open_out(path);
        write_snapshot_csv(out, s, tr.length);
        paths.push_back(path);
    }
    return paths;
}

std::string svg_plot(const std::vector<Series>& series, const std::string& title) {
    constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
    double t_max = 0.0;
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        for (const auto& p : s.trajectory->samples) {
            t_max = std::max(t_max, p.t);
            if (p.l2_norm > 0.0) {
                y_lo = std::min(y_lo, std::log10(p.l2_norm));
                y_hi = std::max(y_hi, std::log10(p.l2_norm));
            }
        }
    }
    if (!std::isfinite(y_lo)) y_lo = -1.0, y_hi = 0.0;
    y_lo = std::floor(y_lo);
    y_hi = std::ceil(y_hi);
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    if (t_max <= 0.0) t_max = 1.0;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double t) { return left + pw * t / t_max; };
    auto py = [&](double y) { return top + ph * (y_hi - y) / (y_hi - y_lo); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";
    o << "<g stroke=\"black\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
      << top + ph << "\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\"/>\n</g>\n";
    o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double t = t_max * k / 5.0;
        o << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
          << fmt_short(t) << "</text>\n";
    }
    for (double y = y_lo; y <= y_hi + 1e-9; y += 1.0) {
        o << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">1e"
          << static_cast<int>(y) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">t</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
      << ")\" text-anchor=\"middle\">||u||</text>\n</g>\n";

    int row = 0;
    for (const auto& s : series) {
        const std::string color = s.color.empty() ? "black" : s.color;
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : s.trajectory->samples) {
            if (!(p.l2_norm > 0.0)) continue;
            o << fmt_short(px(p.t)) << ',' << fmt_short(py(std::log10(p.l2_norm))) << ' ';
        }
        o << "\"/>\n";
        if (!s.label.empty()) {
            const double ly = top + 14 + 16 * row++;
            o << "<text x=\"" << left + pw - 8 << "\" y=\"" << ly
              << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
              << color << "\">" << s.label << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

void write_svg(const std::string& path, const std::vector<Series>& series,
               const std::string& title) {
    write_text(path, svg_plot(series, title));
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

}  // namespace hyperstab::report
