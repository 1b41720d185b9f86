#pragma once

#include <string>
#include <vector>

#include "hyperstab/sim.hpp"

namespace hyperstab::report {

/// Shortest round-trip decimal (17 significant digits).
std::string fmt17(double v);

inline constexpr const char* trajectory_header = "t,l2_norm,lyapunov_v,d1_l2,d2_abs";

void write_trajectory_csv(std::ostream& out, const sim::Trajectory& tr);
void write_trajectory_csv(const std::string& path, const sim::Trajectory& tr);

/// One file per snapshot: `<prefix>_t<time>.csv` with columns x,u_1,...,u_n.
/// Returns the written paths.
std::vector<std::string> write_snapshots(const std::string& prefix, const sim::Trajectory& tr);
void write_snapshot_csv(std::ostream& out, const sim::Snapshot& s, double length);

struct Series {
    std::string label;
    std::string color;
    const sim::Trajectory* trajectory = nullptr;
};

/// Line plot of log10 ||u|| against t, one polyline per series.
std::string svg_plot(const std::vector<Series>& series, const std::string& title);
void write_svg(const std::string& path, const std::vector<Series>& series,
               const std::string& title);

void write_text(const std::string& path, const std::string& text);

}  // namespace hyperstab::report
