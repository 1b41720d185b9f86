#include "hyperstab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hyperstab/version.hpp"

namespace hyperstab::certify {

using nlohmann::json;

WeightSpec WeightSpec::identity(int n) {
    WeightSpec w;
    for (int i = 0; i < n; ++i) {
        w.J2.push_back(Expression::constant(1.0));
        w.D.push_back(Expression::constant(1.0));
    }
    w.family = "identity";
    return w;
}

WeightSpec weights_from_json(const json& j, int n) {
    if (!j.is_object()) throw model::ConfigError("weights: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k != "J2" && k != "D" && k != "family" && k != "parameters") {
            throw model::ConfigError("weights: unknown field '" + k + "'");
        }
    }
    if (!j.contains("J2")) throw model::ConfigError("weights: missing required field 'J2'");
    WeightSpec w;
    w.J2 = model::parse_expression_list(j["J2"], expr::Role::coefficient, n, "weights.J2");
    if (j.contains("D") && !j["D"].is_null()) {
        w.D = model::parse_expression_list(j["D"], expr::Role::coefficient, n, "weights.D");
    } else {
        for (int i = 0; i < n; ++i) w.D.push_back(Expression::constant(1.0));
    }
    if (j.contains("family")) {
        if (!j["family"].is_string()) throw model::ConfigError("weights.family: expected a string");
        w.family = j["family"].get<std::string>();
    }
    if (j.contains("parameters")) w.parameters = j["parameters"];
    return w;
}

WeightSpec load_weights(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw model::ConfigError("cannot open weights file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw model::ConfigError(path + ": " + e.what());
    }
    return weights_from_json(j, n);
}

json weights_to_json(const WeightSpec& w) {
    json j;
    j["J2"] = json::array();
    j["D"] = json::array();
    for (const auto& e : w.J2) j["J2"].push_back(e.source());
    for (const auto& e : w.D) j["D"].push_back(e.source());
    if (!w.family.empty()) j["family"] = w.family;
    if (!w.parameters.is_null()) j["parameters"] = w.parameters;
    return j;
}

const char* to_string(Mode m) { return m == Mode::strict ? "strict" : "relaxed"; }

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::certified_strict: return "certified-strict";
    case Verdict::certified_relaxed: return "certified-relaxed";
    case Verdict::rejected: return "rejected";
    }
    return "?";
}

const char* to_string(Provenance p) { return p == Provenance::certified ? "certified" : "estimated"; }

Mode parse_mode(const std::string& s) {
    if (s == "strict") return Mode::strict;
    if (s == "relaxed") return Mode::relaxed;
    throw model::ConfigError("mode must be 'strict' or 'relaxed', got '" + s + "'");
}

std::string Certificate::assurance() const {
    return C_g.provenance == Provenance::certified ? "certified" : "heuristic";
}

LipschitzValue resolve_cg(const model::SystemSpec& spec, std::uint64_t seed) {
    const model::Grid grid(128, spec.L);
    if (spec.source.C_g) {
        if (!spec.source.C_g->estimate) return {spec.source.C_g->value, Provenance::certified};
        return {model::estimate_lipschitz(spec.source, grid, lipschitz_samples,
                                          lipschitz_amplitude, seed,
                                          model::LipschitzTarget::residual),
                Provenance::estimated};
    }
    if (!spec.source.C_B.estimate) return {spec.source.C_B.value, Provenance::certified};
    return {model::estimate_lipschitz(spec.source, grid, lipschitz_samples, lipschitz_amplitude,
                                      seed, model::LipschitzTarget::source),
            Provenance::estimated};
}

linalg::SymMatrix interior_matrix(const model::SampledFields& f, int node) {
    return kernels::interior_matrix_at(f, node, kernels::InteriorForm::weighted);
}

InteriorCheck check_interior(const model::SampledFields& f, double C_g, Mode mode,
                             kernels::Backend backend) {
    InteriorCheck c;
    const int nodes = static_cast<int>(f.x.size());
    for (int i = 0; i < f.n; ++i) {
        for (int j = 0; j < nodes; ++j) {
            c.max_D = std::max(c.max_D, f.D[i][j]);
            c.max_DJ2 = std::max(c.max_DJ2, f.D[i][j] * f.J2[i][j]);
        }
    }
    if (mode == Mode::strict) {
        const auto eig = kernels::node_min_eigenvalues(f, kernels::InteriorForm::weighted, backend);
        c.lambda_m = *std::min_element(eig.begin(), eig.end());
        c.threshold = c.lambda_m / (2.0 * c.max_D * c.max_DJ2);
        c.margin = c.threshold - C_g;
    } else {
        const auto eig =
            kernels::node_min_eigenvalues(f, kernels::InteriorForm::unweighted, backend);
        c.lambda_m = *std::min_element(eig.begin(), eig.end());
        c.threshold = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nodes; ++j) {
            double max_j2 = 0.0;
            for (int i = 0; i < f.n; ++i) max_j2 = std::max(max_j2, f.J2[i][j]);
            c.threshold = std::min(c.threshold, eig[j] / max_j2);
        }
        c.margin = c.threshold - C_g;
    }
    c.pass = c.margin > 0.0;
    return c;
}

BoundaryWeights boundary_weights(const model::SystemSpec& spec, const WeightSpec& w) {
    BoundaryWeights b;
    for (int i = 0; i < spec.n; ++i) {
        auto weighted_speed = [&](double x) {
            const expr::Scope sc{.x = x};
            return w.J2[i].evaluate(sc) * std::fabs(spec.lambda[i].evaluate(sc));
        };
        b.outflow.push_back(weighted_speed(spec.outflow_x(i)));
        b.inflow.push_back(weighted_speed(spec.inflow_x(i)));
    }
    return b;
}

linalg::SymMatrix boundary_matrix(const model::SystemSpec& spec, const WeightSpec& w) {
    const BoundaryWeights b = boundary_weights(spec, w);
    const auto reflected = linalg::congruence(spec.boundary.K, linalg::SymMatrix::diagonal(b.inflow));
    return linalg::SymMatrix(linalg::Matrix::diagonal(b.outflow) - reflected.matrix());
}

namespace {

void check_positive(const model::SampledFields& f) {
    for (int i = 0; i < f.n; ++i) {
        for (std::size_t j = 0; j < f.x.size(); ++j) {
            if (!(f.J2[i][j] >= 1e-10)) {
                throw model::ConfigError("weights: J2[" + std::to_string(i + 1) +
                                         "] must be >= 1e-10, got " + std::to_string(f.J2[i][j]) +
                                         " at x=" + std::to_string(f.x[j]));
            }
            if (!(f.D[i][j] >= 1e-10)) {
                throw model::ConfigError("weights: D[" + std::to_string(i + 1) +
                                         "] must be >= 1e-10, got " + std::to_string(f.D[i][j]) +
                                         " at x=" + std::to_string(f.x[j]));
            }
        }
    }
}

double sup_speed(const model::SampledFields& f) {
    double s = 0.0;
    for (const auto& comp : f.lambda)
        for (double v : comp) s = std::max(s, std::fabs(v));
    return s;
}

}  // namespace

Certifier::Certifier(const model::SystemSpec& spec, CertifyOptions options)
    : spec_(spec),
      options_(options),
      grid_(options.cells, spec.L),
      sampler_(spec_, grid_) {
    if (options_.refine_check) refined_.emplace(spec_, model::Grid(2 * options.cells, spec.L));
}

Certificate Certifier::certify(const WeightSpec& w, LipschitzValue C_g, Mode mode) const {
    const model::SampledFields f = sampler_.sample(w.J2, w.D);
    check_positive(f);

    Certificate c;
    c.system_name = spec_.name;
    c.mode = mode;
    c.cells = options_.cells;
    c.C_g = C_g;
    c.strict = check_interior(f, C_g.value, Mode::strict, options_.backend);
    c.relaxed = check_interior(f, C_g.value, Mode::relaxed, options_.backend);
    c.lambda_m = c.strict.lambda_m;
    if (refined_) {
        const auto fr = refined_->sample(w.J2, w.D);
        const auto eig = kernels::node_min_eigenvalues(fr, kernels::InteriorForm::weighted,
                                                       options_.backend);
        c.lambda_m_refined = *std::min_element(eig.begin(), eig.end());
    }

    c.N = boundary_matrix(spec_, w);
    c.boundary_min_eig = linalg::smallest_eigenvalue(c.N);
    c.boundary_psd = linalg::is_psd(c.N, options_.psd_tol);
    c.boundary_pd = linalg::is_pd(c.N, options_.psd_tol);

    double inv_sup = 0.0, sup = 0.0;
    for (int i = 0; i < f.n; ++i) {
        for (double j2 : f.J2[i]) {
            inv_sup = std::max(inv_sup, 1.0 / std::sqrt(j2));
            sup = std::max(sup, std::sqrt(j2));
        }
    }
    c.gain = inv_sup * sup;

    if (c.strict.pass && c.boundary_psd) {
        c.verdict = Verdict::certified_strict;
    } else if (mode == Mode::relaxed && c.relaxed.pass && c.boundary_psd) {
        c.verdict = Verdict::certified_relaxed;
    } else {
        c.verdict = Verdict::rejected;
    }
    const bool use_strict = mode == Mode::strict || c.verdict == Verdict::certified_strict;
    c.interior_margin = use_strict ? c.strict.margin : c.relaxed.margin;

    if (c.verdict == Verdict::certified_strict) {
        c.decay_rate_norm = c.strict.lambda_m / (2.0 * c.strict.max_DJ2) - C_g.value * c.strict.max_D;
    }

    if (mode == Mode::relaxed && spec_.source.nonlocal()) {
        c.warnings.push_back(
            "relaxed interior bound applied to a nonlocal source (outside its local-source "
            "hypotheses)");
    }
    if (C_g.provenance == Provenance::estimated) {
        c.warnings.push_back("C_g is a sampled lower-bound estimate; certificate is heuristic");
    }
    if (c.verdict == Verdict::certified_relaxed) {
        c.notes.push_back("relaxed certificate: no decay rate is guaranteed");
    }
    if (!c.strict.pass) {
        c.notes.push_back("strict interior condition fails: margin " +
                          std::to_string(c.strict.margin));
    }
    if (!c.boundary_psd) {
        c.notes.push_back("boundary matrix N is not positive semidefinite (min eigenvalue " +
                          std::to_string(c.boundary_min_eig) + ")");
    }
    return c;
}

EpsilonSearch largest_boundary_epsilon(const linalg::SymMatrix& N, const linalg::SymMatrix& C,
                                       double tol) {
    auto feasible = [&](double eps) {
        return linalg::is_psd(linalg::SymMatrix(N.matrix() - eps * C.matrix()), tol);
    };
    double lo = 0.0;
    double hi = 1.0;
    while (feasible(hi)) {
        lo = hi;
        if (hi >= epsilon_cap) return {epsilon_cap, true};
        hi = std::min(2.0 * hi, epsilon_cap);
    }
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, false};
}

Certificate Certifier::iss_gains(const WeightSpec& w, LipschitzValue C_g) const {
    Certificate c = certify(w, C_g, Mode::strict);
    c.kind = "iss";
    if (!c.strict.pass) c.notes.push_back("ISS requires the strict interior condition");
    if (!c.boundary_pd) c.notes.push_back("boundary matrix not strictly positive definite");
    if (!c.strict.pass || !c.boundary_pd) {
        c.verdict = Verdict::rejected;
        return c;
    }
    const BoundaryWeights b = boundary_weights(spec_, w);
    const auto reflected = linalg::congruence(spec_.boundary.K, linalg::SymMatrix::diagonal(b.inflow));
    const EpsilonSearch eps = largest_boundary_epsilon(c.N, reflected, options_.psd_tol);

    IssFields iss;
    iss.epsilon = eps.epsilon;
    iss.epsilon_capped = eps.capped;
    iss.mu = c.strict.lambda_m - 2.0 * C_g.value * c.strict.max_DJ2 * c.strict.max_D;
    iss.fading_rate = iss.mu / 2.0;
    iss.norm_decay = iss.mu / 4.0;
    iss.lambda_sup = sup_speed(sampler_.sample(w.J2, w.D));
    iss.C1 = c.gain;
    const double boundary_factor = (iss.mu / 2.0) * (1.0 + 1.0 / iss.epsilon) * iss.lambda_sup;
    iss.C2 = c.gain * std::sqrt((2.0 / iss.mu) * std::max(1.0, boundary_factor));
    if (eps.capped) c.notes.push_back("epsilon search capped at 1e6");
    c.iss = iss;
    c.verdict = Verdict::certified_strict;
    return c;
}

Certificate certify(const model::SystemSpec& spec, const WeightSpec& w, LipschitzValue C_g,
                    Mode mode, const CertifyOptions& options) {
    return Certifier(spec, options).certify(w, C_g, mode);
}

Certificate iss_gains(const model::SystemSpec& spec, const WeightSpec& w, LipschitzValue C_g,
                      const CertifyOptions& options) {
    return Certifier(spec, options).iss_gains(w, C_g);
}

namespace {

json interior_json(const InteriorCheck& c) {
    return {{"lambda_m", c.lambda_m},
            {"threshold", c.threshold},
            {"margin", c.margin},
            {"pass", c.pass},
            {"max_D", c.max_D},
            {"max_DJ2", c.max_DJ2}};
}

json optional_number(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

}  // namespace

json certificate_to_json(const Certificate& c) {
    json N = json::array();
    for (std::size_t i = 0; i < c.N.order(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < c.N.order(); ++k) row.push_back(c.N(i, k));
        N.push_back(row);
    }
    json j = {
        {"tool", "hyperstab"},
        {"version", version},
        {"system", c.system_name},
        {"kind", c.kind},
        {"mode", to_string(c.mode)},
        {"verdict", to_string(c.verdict)},
        {"assurance", c.assurance()},
        {"grid", {{"cells", c.cells}, {"refined_cells", c.lambda_m_refined ? 2 * c.cells : 0}}},
        {"lambda_m", c.lambda_m},
        {"lambda_m_refined", optional_number(c.lambda_m_refined)},
        {"C_g", {{"value", c.C_g.value}, {"provenance", to_string(c.C_g.provenance)}}},
        {"interior", {{"strict", interior_json(c.strict)}, {"relaxed", interior_json(c.relaxed)}}},
        {"interior_margin", c.interior_margin},
        {"boundary",
         {{"N", N}, {"min_eig", c.boundary_min_eig}, {"psd", c.boundary_psd}, {"pd", c.boundary_pd}}},
        {"decay_rate_norm", optional_number(c.decay_rate_norm)},
        {"gain", c.gain},
        {"warnings", c.warnings},
        {"notes", c.notes},
    };
    if (c.iss) {
        j["iss"] = {{"C1", c.iss->C1},
                    {"C2", c.iss->C2},
                    {"epsilon", c.iss->epsilon},
                    {"epsilon_capped", c.iss->epsilon_capped},
                    {"mu", c.iss->mu},
                    {"fading_rate", c.iss->fading_rate},
                    {"norm_decay", c.iss->norm_decay},
                    {"lambda_sup", c.iss->lambda_sup}};
    } else {
        j["iss"] = nullptr;
    }
    return j;
}

}  // namespace hyperstab::certify
