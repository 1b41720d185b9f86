#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperstab/certify.hpp"
#include "hyperstab/kernels.hpp"
#include "hyperstab/model.hpp"

namespace hyperstab::sim {

using expr::Expression;
using Field = std::vector<std::vector<double>>;  // [component][node]

/// Distributed disturbance d1(t, x) and boundary disturbance d2(t).
struct DisturbanceSpec {
    std::vector<Expression> d1;
    std::vector<Expression> d2;

    static DisturbanceSpec zero(int n);
    bool has_interior() const { return !d1.empty(); }
    bool has_boundary() const { return !d2.empty(); }
};

DisturbanceSpec disturbances_from_json(const nlohmann::json& j, int n);
DisturbanceSpec load_disturbances(const std::string& path, int n);
DisturbanceSpec parse_disturbances(const std::vector<std::string>& d1,
                                   const std::vector<std::string>& d2, int n);
std::vector<Expression> parse_initial(const std::vector<std::string>& texts, int n);

struct State {
    double t = 0.0;
    Field u;
};

struct Sample {
    double t = 0.0;
    double l2_norm = 0.0;
    double lyapunov_v = 0.0;
    double dv_dt = 0.0;
    double d1_l2 = 0.0;
    double d2_abs = 0.0;
};

struct Snapshot {
    double t = 0.0;
    Field u;
};

struct Trajectory {
    int cells = 0;
    double length = 0.0;
    double dt = 0.0;
    double cfl = 0.0;
    std::vector<Sample> samples;
    std::vector<Snapshot> snapshots;
    bool disturbances_recorded = false;
    std::optional<std::string> blowup;  // diagnostic when the run stopped early
    State final_state;

    double initial_norm() const { return samples.empty() ? 0.0 : samples.front().l2_norm; }
    double final_norm() const { return samples.empty() ? 0.0 : samples.back().l2_norm; }
};

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(double t, const std::string& what);
    double time() const { return time_; }

private:
    double time_;
};

struct SimOptions {
    double cfl = 0.0;  // 0: 1.0 if every |Lambda_i| is constant, else 0.9
    int output_samples = 500;
    std::vector<double> snapshot_times;
    kernels::Backend backend = kernels::Backend::parallel;
};

/// Explicit first-order upwind scheme: transport in each component's flow
/// direction, explicit Euler on B + d1 with the nonlocal integrals frozen at
/// time t, then incoming boundary nodes from G(outgoing traces) + d2.
class Simulator {
public:
    Simulator(const model::SystemSpec& spec, const model::Grid& grid,
              std::optional<std::vector<Expression>> v_weights = std::nullopt,
              DisturbanceSpec disturbances = {});

    State initial_state(const std::vector<Expression>& initial) const;
    State step(const State& s, double dt) const;

    double default_cfl() const;
    double max_stable_dt(double cfl) const;

    double l2_norm(const Field& u) const;
    double lyapunov_value(const Field& u) const;
    double d1_norm(double t) const;
    double d2_abs(double t) const;

    Trajectory run(const std::vector<Expression>& initial, double T,
                   const SimOptions& options = {}) const;

    const model::Grid& grid() const { return grid_; }
    kernels::Backend backend = kernels::Backend::parallel;

private:
    model::SystemSpec spec_;
    model::Grid grid_;
    Field lambda_;
    std::vector<std::vector<double>> v_weights_;  // J_i^2 at nodes
    DisturbanceSpec dist_;
};

Trajectory simulate(const model::SystemSpec& spec, const std::vector<Expression>& initial,
                    double T, const model::Grid& grid, const DisturbanceSpec& disturbances = {},
                    const std::optional<std::vector<Expression>>& v_weights = std::nullopt,
                    const SimOptions& options = {});

/// V(u) = int sum_i J_i^2 u_i^2 dx by the trapezoid rule; J2 sampled at nodes.
double lyapunov_value(const Field& u, const std::vector<std::vector<double>>& J2, double dx);

struct DecayFit {
    double rate = 0.0;
    double r_squared = 0.0;
    int samples = 0;
};

/// Least-squares slope of log ||u|| over [t0, t1]; rate = -slope.
DecayFit fit_decay_rate(const Trajectory& tr, double t0, double t1);

/// Window [0, t_end] where t_end is the last time before the norm drops
/// below `floor_ratio` times its initial value (and 1e-14 absolutely).
DecayFit fit_decay_rate_auto(const Trajectory& tr, double floor_ratio = 1e-10);

inline constexpr double iss_allowance = 0.05;

struct IssCheck {
    double max_ratio = 0.0;
    double worst_time = 0.0;
    bool pass = false;
    std::vector<double> envelope;  // right-hand side per sample
};

/// Compares ||u(t)|| with
///   C1 e^{-(mu/4) t} ||u0|| + C2 ( sqrt(int_0^t e^{-(mu/2)(t-s)} ||d1(s)||^2 ds)
///                                + sqrt(int_0^t e^{-(mu/2)(t-s)} |d2(s)|^2 ds) )
/// at every recorded sample.
IssCheck check_iss_bound(const Trajectory& tr, const certify::Certificate& cert);

struct ConvergenceReport {
    std::vector<int> cells;
    std::vector<double> differences;  // ||u_N - u_2N|| at T, on the coarse nodes
    std::vector<double> orders;
    std::optional<double> order;      // last observed order
    bool exact_regime = false;
    bool monotone = true;
    std::vector<std::string> warnings;
};

ConvergenceReport convergence_study(const model::SystemSpec& spec,
                                    const std::vector<Expression>& initial, double T,
                                    const std::vector<int>& cells,
                                    const DisturbanceSpec& disturbances = {});

}  // namespace hyperstab::sim
