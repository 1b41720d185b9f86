#include "hyperstab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hyperstab::sim {

using expr::Role;
using expr::VariableContext;

DisturbanceSpec DisturbanceSpec::zero(int) { return {}; }

DisturbanceSpec disturbances_from_json(const nlohmann::json& j, int n) {
    if (!j.is_object()) throw model::ConfigError("disturbance file must be a JSON object");
    DisturbanceSpec d;
    for (const auto& [key, value] : j.items()) {
        if (key == "d1") {
            d.d1 = model::parse_expression_list(value, Role::disturbance_interior, n, "d1");
        } else if (key == "d2") {
            d.d2 = model::parse_expression_list(value, Role::disturbance_boundary, n, "d2");
        } else {
            throw model::ConfigError("unknown disturbance field '" + key + "'");
        }
    }
    return d;
}

DisturbanceSpec load_disturbances(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw model::ConfigError("cannot open disturbance file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw model::ConfigError(path + ": " + e.what());
    }
    return disturbances_from_json(j, n);
}

namespace {

std::vector<Expression> parse_list(const std::vector<std::string>& texts, Role role, int n,
                                   const std::string& what) {
    if (static_cast<int>(texts.size()) != n) {
        throw model::ConfigError(what + " needs " + std::to_string(n) + " expressions, got " +
                                 std::to_string(texts.size()));
    }
    const auto ctx = VariableContext::for_role(role, n);
    std::vector<Expression> out;
    for (const auto& t : texts) out.push_back(Expression::parse(t, ctx));
    return out;
}

double sum_sq(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
}

}  // namespace

DisturbanceSpec parse_disturbances(const std::vector<std::string>& d1,
                                   const std::vector<std::string>& d2, int n) {
    DisturbanceSpec d;
    if (!d1.empty()) d.d1 = parse_list(d1, Role::disturbance_interior, n, "d1");
    if (!d2.empty()) d.d2 = parse_list(d2, Role::disturbance_boundary, n, "d2");
    return d;
}

std::vector<Expression> parse_initial(const std::vector<std::string>& texts, int n) {
    return parse_list(texts, Role::initial, n, "initial data");
}

BlowUpError::BlowUpError(double t, const std::string& what)
    : std::runtime_error(what), time_(t) {}

Simulator::Simulator(const model::SystemSpec& spec, const model::Grid& grid,
                     std::optional<std::vector<Expression>> v_weights,
                     DisturbanceSpec disturbances)
    : spec_(spec), grid_(grid), dist_(std::move(disturbances)) {
    const int n = spec_.n;
    const int nodes = grid_.nodes();
    if (!dist_.d1.empty() && static_cast<int>(dist_.d1.size()) != n)
        throw model::ConfigError("d1 must have one expression per component");
    if (!dist_.d2.empty() && static_cast<int>(dist_.d2.size()) != n)
        throw model::ConfigError("d2 must have one expression per component");
    lambda_.assign(n, std::vector<double>(nodes));
    v_weights_.assign(n, std::vector<double>(nodes, 1.0));
    for (int j = 0; j < nodes; ++j) {
        const expr::Scope sc{.x = grid_.node(j)};
        for (int i = 0; i < n; ++i) {
            lambda_[i][j] = spec_.lambda[i].evaluate(sc);
            if (v_weights) v_weights_[i][j] = (*v_weights)[i].evaluate(sc);
        }
    }
}

State Simulator::initial_state(const std::vector<Expression>& initial) const {
    if (static_cast<int>(initial.size()) != spec_.n)
        throw model::ConfigError("initial data must have one expression per component");
    State s;
    s.u.assign(spec_.n, std::vector<double>(grid_.nodes()));
    for (int j = 0; j < grid_.nodes(); ++j) {
        const expr::Scope sc{.x = grid_.node(j)};
        for (int i = 0; i < spec_.n; ++i) s.u[i][j] = initial[i].evaluate(sc);
    }
    return s;
}

double Simulator::default_cfl() const {
    for (const auto& row : lambda_) {
        const double a = std::abs(row.front());
        for (double v : row)
            if (std::abs(v) != a) return 0.9;
    }
    return 1.0;
}

double Simulator::max_stable_dt(double cfl) const {
    double speed = 0.0;
    for (const auto& row : lambda_)
        for (double v : row) speed = std::max(speed, std::abs(v));
    return cfl * grid_.dx() / speed;
}

State Simulator::step(const State& s, double dt) const {
    const int n = spec_.n;
    std::vector<double> integrals(n);
    for (int i = 0; i < n; ++i) integrals[i] = model::trapezoid(s.u[i], grid_.dx());

    State next;
    next.t = s.t + dt;
    next.u.assign(n, std::vector<double>(grid_.nodes()));
    kernels::UpwindProblem p{.spec = &spec_, .grid = &grid_, .lambda = &lambda_, .d1 = dist_.d1};
    kernels::upwind_update(p, s.u, integrals, s.t, dt, next.u, backend);

    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) out[j] = next.u[j][spec_.outflow_node(j, grid_)];
    const expr::Scope bc{.t = next.t, .out = out};
    for (int i = 0; i < n; ++i) {
        double v = spec_.boundary.G[i].evaluate(bc);
        if (!dist_.d2.empty()) v += dist_.d2[i].evaluate(bc);
        next.u[i][spec_.inflow_node(i, grid_)] = v;
    }

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < grid_.nodes(); ++j) {
            if (!std::isfinite(next.u[i][j])) {
                std::ostringstream msg;
                msg << "non-finite state at t = " << next.t << " (component " << i + 1
                    << ", x = " << grid_.node(j) << ")";
                throw BlowUpError(next.t, msg.str());
            }
        }
    }
    return next;
}

double Simulator::l2_norm(const Field& u) const {
    std::vector<double> sq(grid_.nodes(), 0.0);
    for (const auto& comp : u)
        for (std::size_t j = 0; j < comp.size(); ++j) sq[j] += comp[j] * comp[j];
    return std::sqrt(model::trapezoid(sq, grid_.dx()));
}

double Simulator::lyapunov_value(const Field& u) const {
    return sim::lyapunov_value(u, v_weights_, grid_.dx());
}

double Simulator::d1_norm(double t) const {
    if (dist_.d1.empty()) return 0.0;
    std::vector<double> sq(grid_.nodes(), 0.0);
    for (int j = 0; j < grid_.nodes(); ++j) {
        const expr::Scope sc{.x = grid_.node(j), .t = t};
        for (const auto& e : dist_.d1) {
            const double v = e.evaluate(sc);
            sq[j] += v * v;
        }
    }
    return std::sqrt(model::trapezoid(sq, grid_.dx()));
}

double Simulator::d2_abs(double t) const {
    if (dist_.d2.empty()) return 0.0;
    std::vector<double> v;
    const expr::Scope sc{.t = t};
    for (const auto& e : dist_.d2) v.push_back(e.evaluate(sc));
    return std::sqrt(sum_sq(v));
}

Trajectory Simulator::run(const std::vector<Expression>& initial, double T,
                          const SimOptions& options) const {
    if (!(T > 0.0)) throw model::ConfigError("final time must be positive");
    Trajectory tr;
    tr.cells = grid_.cells();
    tr.length = grid_.length();
    tr.cfl = options.cfl > 0.0 ? options.cfl : default_cfl();
    const double dt_max = max_stable_dt(tr.cfl);
    const long n_steps = std::max(1L, static_cast<long>(std::ceil(T / dt_max - 1e-9)));
    tr.dt = T / static_cast<double>(n_steps);
    const long stride = std::max(1L, n_steps / std::max(1, options.output_samples));
    tr.disturbances_recorded = true;

    std::vector<double> pending = options.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snap = 0;

    auto record = [&](const State& s) {
        Sample smp;
        smp.t = s.t;
        smp.l2_norm = l2_norm(s.u);
        smp.lyapunov_v = lyapunov_value(s.u);
        smp.d1_l2 = d1_norm(s.t);
        smp.d2_abs = d2_abs(s.t);
        tr.samples.push_back(smp);
    };
    auto snapshots = [&](const State& s) {
        while (next_snap < pending.size() && pending[next_snap] <= s.t + 0.5 * tr.dt) {
            tr.snapshots.push_back({s.t, s.u});
            ++next_snap;
        }
    };

    Simulator self = *this;
    self.backend = options.backend;
    State s = initial_state(initial);
    record(s);
    snapshots(s);
    for (long k = 1; k <= n_steps; ++k) {
        State next;
        try {
            next = self.step(s, tr.dt);
        } catch (const BlowUpError& e) {
            tr.blowup = e.what();
            break;
        }
        // Pin the clock to k dt so the final time is exactly T.
        next.t = (k == n_steps) ? T : static_cast<double>(k) * tr.dt;
        s = std::move(next);
        if (k % stride == 0 || k == n_steps) record(s);
        snapshots(s);
    }
    tr.final_state = std::move(s);

    auto& smp = tr.samples;
    for (std::size_t k = 0; k < smp.size(); ++k) {
        if (smp.size() < 2) break;
        const std::size_t a = k == 0 ? 0 : k - 1;
        const std::size_t b = k + 1 == smp.size() ? k : k + 1;
        smp[k].dv_dt = (smp[b].lyapunov_v - smp[a].lyapunov_v) / (smp[b].t - smp[a].t);
    }
    return tr;
}

Trajectory simulate(const model::SystemSpec& spec, const std::vector<Expression>& initial,
                    double T, const model::Grid& grid, const DisturbanceSpec& disturbances,
                    const std::optional<std::vector<Expression>>& v_weights,
                    const SimOptions& options) {
    Simulator sim(spec, grid, v_weights, disturbances);
    sim.backend = options.backend;
    return sim.run(initial, T, options);
}

double lyapunov_value(const Field& u, const std::vector<std::vector<double>>& J2, double dx) {
    if (u.empty()) return 0.0;
    std::vector<double> f(u.front().size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < f.size(); ++j) f[j] += J2[i][j] * u[i][j] * u[i][j];
    return model::trapezoid(f, dx);
}

DecayFit fit_decay_rate(const Trajectory& tr, double t0, double t1) {
    const double tol = 1e-9 * std::max(1.0, std::abs(t1));
    std::vector<double> ts, ys;
    for (const auto& s : tr.samples) {
        if (s.t < t0 - tol || s.t > t1 + tol) continue;
        if (!(s.l2_norm > 1e-14))
            throw std::invalid_argument("norm below 1e-14 inside the fit window");
        ts.push_back(s.t);
        ys.push_back(std::log(s.l2_norm));
    }
    if (ts.size() < 10)
        throw std::invalid_argument("fit window holds " + std::to_string(ts.size()) +
                                    " samples, need at least 10");
    const double k = static_cast<double>(ts.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        my += ys[i];
    }
    mt /= k;
    my /= k;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        sty += (ts[i] - mt) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sty / stt;
    double res = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ys[i] - (my + slope * (ts[i] - mt));
        res += r * r;
    }
    DecayFit fit;
    fit.rate = -slope;
    fit.r_squared = syy > 0.0 ? 1.0 - res / syy : 1.0;
    fit.samples = static_cast<int>(ts.size());
    return fit;
}

DecayFit fit_decay_rate_auto(const Trajectory& tr, double floor_ratio) {
    if (tr.samples.empty()) throw std::invalid_argument("empty trajectory");
    const double floor = std::max(1e-14, floor_ratio * tr.initial_norm());
    double t_end = tr.samples.front().t;
    for (const auto& s : tr.samples) {
        if (!(s.l2_norm > floor)) break;
        t_end = s.t;
    }
    return fit_decay_rate(tr, tr.samples.front().t, t_end);
}

IssCheck check_iss_bound(const Trajectory& tr, const certify::Certificate& cert) {
    if (!cert.iss) throw std::invalid_argument("certificate carries no ISS gains");
    if (!tr.disturbances_recorded)
        throw std::invalid_argument("trajectory has no disturbance records");
    if (tr.samples.empty()) throw std::invalid_argument("empty trajectory");
    const auto& g = *cert.iss;
    const double a = g.fading_rate;
    const double u0 = tr.samples.front().l2_norm;
    const double t0 = tr.samples.front().t;

    IssCheck out;
    double A1 = 0.0, A2 = 0.0;
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
        const auto& s = tr.samples[k];
        if (k > 0) {
            const auto& p = tr.samples[k - 1];
            const double h = s.t - p.t;
            const double decay = std::exp(-a * h);
            A1 = decay * A1 + 0.5 * h * (decay * p.d1_l2 * p.d1_l2 + s.d1_l2 * s.d1_l2);
            A2 = decay * A2 + 0.5 * h * (decay * p.d2_abs * p.d2_abs + s.d2_abs * s.d2_abs);
        }
        const double rhs = g.C1 * std::exp(-g.norm_decay * (s.t - t0)) * u0 +
                           g.C2 * (std::sqrt(A1) + std::sqrt(A2));
        out.envelope.push_back(rhs);
        double ratio;
        if (rhs > 0.0) {
            ratio = s.l2_norm / rhs;
        } else {
            ratio = s.l2_norm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        if (ratio > out.max_ratio || k == 0) {
            out.max_ratio = ratio;
            out.worst_time = s.t;
        }
    }
    out.pass = out.max_ratio <= 1.0 + iss_allowance;
    return out;
}

namespace {

/// Largest jump between adjacent nodes of the initial data, over components.
double max_jump(const std::vector<Expression>& initial, const model::Grid& g) {
    double worst = 0.0;
    for (const auto& e : initial) {
        double prev = e.evaluate(expr::Scope{.x = 0.0});
        for (int j = 1; j < g.nodes(); ++j) {
            const double v = e.evaluate(expr::Scope{.x = g.node(j)});
            worst = std::max(worst, std::abs(v - prev));
            prev = v;
        }
    }
    return worst;
}

}  // namespace

ConvergenceReport convergence_study(const model::SystemSpec& spec,
                                    const std::vector<Expression>& initial, double T,
                                    const std::vector<int>& cells,
                                    const DisturbanceSpec& disturbances) {
    if (cells.size() < 3) throw std::invalid_argument("convergence study needs at least 3 grids");
    for (std::size_t k = 1; k < cells.size(); ++k) {
        if (cells[k] != 2 * cells[k - 1])
            throw std::invalid_argument("grid sizes must double");
    }
    ConvergenceReport rep;
    rep.cells = cells;

    std::vector<Field> finals;
    double scale = 0.0;
    for (int c : cells) {
        const model::Grid g(c, spec.L);
        SimOptions opt;
        opt.output_samples = 1;
        Trajectory tr = simulate(spec, initial, T, g, disturbances, std::nullopt, opt);
        if (tr.blowup) throw BlowUpError(tr.final_state.t, *tr.blowup);
        scale = std::max(scale, tr.final_norm());
        finals.push_back(std::move(tr.final_state.u));
    }
    for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
        const model::Grid coarse(cells[k], spec.L);
        std::vector<double> sq(coarse.nodes(), 0.0);
        for (std::size_t i = 0; i < finals[k].size(); ++i) {
            for (int j = 0; j < coarse.nodes(); ++j) {
                const double d = finals[k + 1][i][2 * j] - finals[k][i][j];
                sq[j] += d * d;
            }
        }
        rep.differences.push_back(std::sqrt(model::trapezoid(sq, coarse.dx())));
    }

    const double exact_tol = 1e-12 * std::max(1.0, scale);
    rep.exact_regime = std::all_of(rep.differences.begin(), rep.differences.end(),
                                   [&](double d) { return d <= exact_tol; });
    if (rep.exact_regime) {
        rep.warnings.push_back(
            "exact regime: differences are at rounding level, no order is reported");
    } else {
        for (std::size_t k = 0; k + 1 < rep.differences.size(); ++k) {
            if (!(rep.differences[k + 1] < rep.differences[k])) rep.monotone = false;
            rep.orders.push_back(std::log2(rep.differences[k] / rep.differences[k + 1]));
        }
        if (rep.monotone && !rep.orders.empty()) {
            rep.order = rep.orders.back();
        } else {
            rep.warnings.push_back("differences do not decrease monotonically");
        }
    }

    const double coarse_jump = max_jump(initial, model::Grid(cells.front(), spec.L));
    const double fine_jump = max_jump(initial, model::Grid(cells.back(), spec.L));
    if (coarse_jump > 0.0 && fine_jump / coarse_jump > 0.5) {
        rep.warnings.push_back(
            "initial data is not resolved smoothly (adjacent jumps do not shrink with the grid); "
            "expect a reduced order");
    }
    return rep;
}

}  // namespace hyperstab::sim
