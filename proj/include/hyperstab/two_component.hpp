#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperstab/certify.hpp"
#include "hyperstab/sim.hpp"

/// The two-component nonlocal example with a tunable boundary gain k:
///   u1_t + u1_x = (c/L) sin(int u2),  u2_t - u2_x = (c/L) sin(int u1),
///   u1(t,0) = u2(t,0),                u2(t,L) = (1-k) u1(t,L),
/// certified with J^2 = (L+eps-x, L+eps+x), D = I, M = 0.
namespace hyperstab::two_component {

struct Parameters {
    double c = 0.25;
    double L = 1.0;
};

/// eps = 3 (1/|c| - 2L) / 4; requires |c| L < 1/2.
double epsilon(const Parameters& p);
/// Smallest gain with (1-k)^2 <= eps/(eps+2L): k = sqrt(1/(1 + 2L/eps)).
double k_design(const Parameters& p);
/// 1/(eps+2L): pointwise bound lambda(x)/max J^2 with lambda = 1.
double relaxed_threshold(const Parameters& p);
/// 1/(2(eps+2L)): the D = I strict bound.
double strict_threshold(const Parameters& p);
/// N = diag(eps - (1-k)^2 (eps+2L), 0).
std::array<double, 2> boundary_diagonal(const Parameters& p, double k);

model::SystemSpec system(const Parameters& p, double k);
certify::WeightSpec reference_weights(const Parameters& p);
certify::LipschitzValue lipschitz(const Parameters& p);

/// u1 = sqrt(2 pi x), u2 = exp(-2 pi x).
std::vector<expr::Expression> decay_initial_data();
/// Open-loop traveling wave at t = 0: a cos(2 pi (t-x)), a cos(2 pi (t+x)).
std::vector<expr::Expression> traveling_wave_initial(double amplitude = 0.3);

inline constexpr double demo_horizon = 30.0;
inline constexpr int demo_cells = 200;
inline constexpr std::array<double, 3> demo_gains = {0.0, 0.5, 0.75};
inline constexpr double decay_target = 0.05;
inline constexpr double open_loop_floor = 0.5;

struct BundleOptions {
    std::string out_dir = "two_component_out";
    certify::Mode mode = certify::Mode::relaxed;
    int cells = demo_cells;
    double horizon = demo_horizon;
    int certify_cells = certify::default_certify_cells;
};

struct BundleResult {
    bool reproduced = false;  // closed loops decay, open loop does not
    nlohmann::json summary;
    std::string table;
    std::vector<std::string> files;
};

/// Writes the system, weights, certificate, trajectories for every gain in
/// demo_gains, an overlay plot and a summary table into out_dir.
BundleResult reproduce(const BundleOptions& options);

}  // namespace hyperstab::two_component
