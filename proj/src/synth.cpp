#include "hyperstab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <omp.h>

namespace hyperstab::synth {

namespace {

constexpr double log_bound = 12.0;  // |log a|, |log b|, |log d| stay below this
constexpr double mu_bound = 20.0;
constexpr double golden = 0.6180339887498949;
constexpr int golden_steps = 20;
constexpr double improvement_tol = 1e-8;
constexpr double min_step = 1e-4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Expression parse_weight(const std::string& text) {
    return Expression::parse(text, expr::VariableContext::for_role(expr::Role::coefficient));
}

/// Offsets of the (log) D parameters inside a parameter vector.
int d_offset(FamilyKind kind, int n) { return kind == FamilyKind::affine ? 2 * n : n + 1; }

double clamp_param(FamilyKind kind, int n, int k, double v) {
    const bool is_mu = kind == FamilyKind::exponential && k == n;
    const double bound = is_mu ? mu_bound : log_bound;
    return std::clamp(v, -bound, bound);
}

}  // namespace

const char* to_string(FamilyKind k) { return k == FamilyKind::affine ? "affine" : "exponential"; }

int parameter_count(FamilyKind kind, int n) { return d_offset(kind, n) + n; }

FamilyPoint FamilyPoint::affine(std::span<const double> a, std::span<const double> b,
                                std::span<const double> d) {
    FamilyPoint p{FamilyKind::affine, {}};
    for (std::size_t i = 0; i < a.size(); ++i) {
        p.params.push_back(std::log(a[i]));
        p.params.push_back(std::log(b[i]));
    }
    for (double v : d) p.params.push_back(std::log(v));
    return p;
}

FamilyPoint FamilyPoint::exponential(std::span<const double> a, double mu,
                                     std::span<const double> d) {
    FamilyPoint p{FamilyKind::exponential, {}};
    for (double v : a) p.params.push_back(std::log(v));
    p.params.push_back(mu);
    for (double v : d) p.params.push_back(std::log(v));
    return p;
}

WeightSpec to_weights(const model::SystemSpec& spec, const FamilyPoint& p) {
    const int n = spec.n;
    if (static_cast<int>(p.params.size()) != parameter_count(p.kind, n))
        throw std::invalid_argument("parameter vector has the wrong length");
    WeightSpec w;
    w.family = to_string(p.kind);
    nlohmann::json a = nlohmann::json::array(), b = nlohmann::json::array(),
                   d = nlohmann::json::array();

    const int off = d_offset(p.kind, n);
    const double dmax = *std::max_element(p.params.begin() + off, p.params.end());
    for (int i = 0; i < n; ++i) {
        const double di = std::exp(p.params[off + i] - dmax);
        d.push_back(di);
        w.D.push_back(Expression::constant(di));
    }

    if (p.kind == FamilyKind::affine) {
        for (int i = 0; i < n; ++i) {
            const double a0 = std::exp(p.params[2 * i]);
            const double aL = std::exp(p.params[2 * i + 1]);
            const double slope = (aL - a0) / spec.L;
            a.push_back(a0);
            b.push_back(slope);
            w.J2.push_back(parse_weight(fmt(a0) + " + " + fmt(slope) + "*x"));
        }
        w.parameters = {{"a", a}, {"b", b}, {"d", d}};
    } else {
        const double mu = p.params[n];
        nlohmann::json s = nlohmann::json::array();
        for (int i = 0; i < n; ++i) {
            const double ai = std::exp(p.params[i]);
            const double si = spec.rightward(i) ? -1.0 : 1.0;
            a.push_back(ai);
            s.push_back(si);
            w.J2.push_back(parse_weight(fmt(ai) + "*exp(" + fmt(si * mu) + "*x)"));
        }
        w.parameters = {{"a", a}, {"mu", mu}, {"s", s}, {"d", d}};
    }
    return w;
}

Evaluator::Evaluator(const model::SystemSpec& spec, int cells)
    : spec_(spec), sampler_(spec_, model::Grid(cells, spec.L)) {}

Margins Evaluator::margins(const WeightSpec& w, double C_g, Mode mode) const {
    const auto f = sampler_.sample(w.J2, w.D);
    const auto interior = certify::check_interior(f, C_g, mode, kernels::Backend::serial);
    const auto b = certify::boundary_weights(spec_, w);
    const auto N = certify::boundary_matrix(spec_, w);
    double norm = 0.0;
    for (double v : b.outflow) norm += v * v;
    norm = std::sqrt(norm);

    Margins m;
    m.interior = interior.margin / std::max(C_g, 1e-6);
    m.boundary = linalg::smallest_eigenvalue(N) / norm;
    m.objective = std::min(m.interior, m.boundary);
    const bool feasible = m.interior > 0.0 && m.boundary > 0.0;
    m.score = feasible ? m.interior : m.objective;
    if (!std::isfinite(m.score)) m.score = -std::numeric_limits<double>::infinity();
    return m;
}

double margin_objective(const model::SystemSpec& spec, const WeightSpec& w, double C_g,
                        Mode mode, int cells) {
    return Evaluator(spec, cells).margins(w, C_g, mode).objective;
}

namespace {

struct StartResult {
    FamilyPoint best;
    double score = -std::numeric_limits<double>::infinity();
    double initial_score = 0.0;
    int evaluations = 0;
    std::vector<double> cycle_scores;
};

FamilyPoint random_start(const model::SystemSpec& spec, int index, std::mt19937_64& rng) {
    const int n = spec.n;
    std::uniform_real_distribution<double> log_u(std::log(1e-2), std::log(1e2));
    std::uniform_real_distribution<double> mu_u(0.0, 5.0);
    FamilyPoint p;
    p.kind = index % 2 == 0 ? FamilyKind::affine : FamilyKind::exponential;
    const int count = parameter_count(p.kind, n);
    for (int k = 0; k < count; ++k) {
        const bool is_mu = p.kind == FamilyKind::exponential && k == n;
        p.params.push_back(is_mu ? mu_u(rng) : log_u(rng));
    }
    return p;
}

StartResult run_start(const model::SystemSpec& spec, const Evaluator& ev, double C_g, Mode mode,
                      int index, int cycles, std::uint64_t seed) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(index)};
    std::mt19937_64 rng(seq);
    StartResult r;
    FamilyPoint x = random_start(spec, index, rng);

    auto score = [&](const FamilyPoint& p) {
        ++r.evaluations;
        try {
            return ev.margins(to_weights(spec, p), C_g, mode).score;
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    double fx = score(x);
    r.initial_score = fx;
    double h = 1.0;
    const int n = spec.n;
    for (int cycle = 0; cycle < cycles && h >= min_step; ++cycle) {
        const double before = fx;
        for (std::size_t k = 0; k < x.params.size(); ++k) {
            const double v = x.params[k];
            auto at = [&](double t) {
                FamilyPoint y = x;
                y.params[k] = clamp_param(x.kind, n, static_cast<int>(k), t);
                return score(y);
            };
            double lo = v - h, hi = v + h;
            double c = hi - golden * (hi - lo), d = lo + golden * (hi - lo);
            double fc = at(c), fd = at(d);
            for (int s = 0; s < golden_steps; ++s) {
                if (fc >= fd) {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - golden * (hi - lo);
                    fc = at(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + golden * (hi - lo);
                    fd = at(d);
                }
            }
            const double t = fc >= fd ? c : d;
            const double ft = std::max(fc, fd);
            if (ft > fx) {
                x.params[k] = clamp_param(x.kind, n, static_cast<int>(k), t);
                fx = ft;
            }
        }
        r.cycle_scores.push_back(fx);
        if (fx - before < improvement_tol) h *= 0.5;
    }
    r.best = x;
    r.score = fx;
    return r;
}

}  // namespace

SynthesisResult synthesize(const model::SystemSpec& spec, certify::LipschitzValue C_g, Mode mode,
                           Budget budget, std::uint64_t seed,
                           const certify::CertifyOptions& options) {
    if (budget.multistarts < 1 || budget.iterations < 1)
        throw std::invalid_argument("synthesis budget must be positive");
    const Evaluator search(spec, search_cells);
    std::vector<StartResult> starts(budget.multistarts);

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (int s = 0; s < budget.multistarts; ++s) {
        try {
            starts[s] = run_start(spec, search, C_g.value, mode, s, budget.iterations, seed);
        } catch (...) {
#pragma omp critical(synth_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    SynthesisResult res;
    int best = 0;
    for (int s = 0; s < budget.multistarts; ++s) {
        res.evaluations += starts[s].evaluations;
        res.start_scores.push_back(starts[s].initial_score);
        if (starts[s].score > starts[best].score) best = s;
    }
    int iteration = 0;
    for (int s = 0; s < budget.multistarts; ++s)
        for (double v : starts[s].cycle_scores) res.trace.push_back({s, iteration++, v});

    res.best_start = best;
    res.score = starts[best].score;
    res.weights = to_weights(spec, starts[best].best);
    certify::Certifier cert(spec, options);
    res.certificate = cert.certify(res.weights, C_g, mode);
    res.objective = Evaluator(spec, options.cells).margins(res.weights, C_g.value, mode).objective;
    res.certificate.notes.push_back("weights synthesized (" + res.weights.family + " family, start " +
                                    std::to_string(best) + ")");

    if (res.score <= 0.0) {
        res.found = false;
        res.message = "no certificate found: best search score " + fmt(res.score) + " <= 0";
    } else if (!res.certificate.certified()) {
        res.found = false;
        res.message = "no certificate found: best weights fail on the certification grid";
    } else {
        res.found = true;
        res.message = std::string("certificate found (") + certify::to_string(res.certificate.verdict) + ")";
    }
    return res;
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iteration,objective\n";
    for (const auto& t : trace) out << t.iteration << ',' << fmt(t.score) << '\n';
}

}  // namespace hyperstab::synth
