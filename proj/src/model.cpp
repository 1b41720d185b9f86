#include "hyperstab/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace hyperstab::model {

using nlohmann::json;

Grid::Grid(int cells, double length) : cells_(cells), length_(length) {
    if (cells < 8) throw ConfigError("grid: at least 8 cells required");
    if (!(length > 0.0)) throw ConfigError("grid: length must be positive");
}

double trapezoid(std::span<const double> f, double dx) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t j = 1; j + 1 < f.size(); ++j) s += f[j];
    return s * dx;
}

bool SourceSpec::nonlocal() const {
    for (const auto& b : B) {
        if (b.uses("I")) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed) known = known || it.key() == a;
        if (!known) throw ConfigError(where + ": unknown field '" + it.key() + "'");
    }
}

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(where + ": missing required field '" + key + "'");
    }
    return j.at(key);
}

std::string expression_text(const json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    throw ConfigError(where + ": expected an expression string");
}

Expression parse_one(const json& v, expr::Role role, int n, const std::string& where) {
    std::string text = expression_text(v, where);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw ConfigError(where + ": empty expression");
    }
    try {
        return Expression::parse(text, expr::VariableContext::for_role(role, n));
    } catch (const expr::ParseError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

LipschitzConstant parse_lipschitz(const json& v, const std::string& where) {
    if (v.is_string() && v.get<std::string>() == "estimate") return {true, 0.0};
    if (v.is_number()) {
        double c = v.get<double>();
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw ConfigError(where + ": Lipschitz constant must be finite and >= 0");
        }
        return {false, c};
    }
    throw ConfigError(where + ": expected a number or \"estimate\"");
}

json lipschitz_to_json(const LipschitzConstant& c) {
    if (c.estimate) return "estimate";
    return c.value;
}

}  // namespace

std::vector<Expression> parse_expression_list(const json& j, expr::Role role, int n,
                                              const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + ": expected an array of expressions");
    if (static_cast<int>(j.size()) != n) {
        throw ConfigError(what + ": expected " + std::to_string(n) + " entries, got " +
                          std::to_string(j.size()));
    }
    std::vector<Expression> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(parse_one(j[i], role, n, what + "[" + std::to_string(i + 1) + "]"));
    }
    return out;
}

SystemSpec system_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("system: expected a JSON object");
    reject_unknown(j, {"name", "n", "m", "L", "lambda", "source", "boundary"}, "system");

    SystemSpec s;
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ConfigError("system.name: expected a string");
        s.name = j["name"].get<std::string>();
    }
    const json& n = require(j, "n", "system");
    const json& m = require(j, "m", "system");
    if (!n.is_number_integer() || n.get<int>() < 1) {
        throw ConfigError("system.n: expected a positive integer");
    }
    s.n = n.get<int>();
    if (!m.is_number_integer() || m.get<int>() < 0 || m.get<int>() > s.n) {
        throw ConfigError("system.m: expected an integer in [0, n]");
    }
    s.m = m.get<int>();
    const json& L = require(j, "L", "system");
    if (!L.is_number() || !(L.get<double>() > 0.0) || !std::isfinite(L.get<double>())) {
        throw ConfigError("system.L: expected a positive number");
    }
    s.L = L.get<double>();
    s.lambda = parse_expression_list(require(j, "lambda", "system"), expr::Role::coefficient, s.n,
                                     "system.lambda");

    const json& src = require(j, "source", "system");
    if (!src.is_object()) throw ConfigError("system.source: expected an object");
    reject_unknown(src, {"B", "C_B", "M", "C_g"}, "system.source");
    s.source.B = parse_expression_list(require(src, "B", "system.source"), expr::Role::source,
                                       s.n, "system.source.B");
    s.source.C_B = parse_lipschitz(require(src, "C_B", "system.source"), "system.source.C_B");
    if (src.contains("M") && !src["M"].is_null()) {
        const json& M = src["M"];
        if (!M.is_array() || static_cast<int>(M.size()) != s.n) {
            throw ConfigError("system.source.M: expected an n x n array or null");
        }
        ExprMatrix rows;
        for (int i = 0; i < s.n; ++i) {
            rows.push_back(parse_expression_list(M[i], expr::Role::coefficient, s.n,
                                                 "system.source.M[" + std::to_string(i + 1) + "]"));
        }
        s.source.M = std::move(rows);
    }
    if (src.contains("C_g") && !src["C_g"].is_null()) {
        s.source.C_g = parse_lipschitz(src["C_g"], "system.source.C_g");
    } else if (s.source.M) {
        throw ConfigError("system.source.C_g: required when a linear part M is given");
    }

    const json& bnd = require(j, "boundary", "system");
    if (!bnd.is_object()) throw ConfigError("system.boundary: expected an object");
    reject_unknown(bnd, {"G", "K"}, "system.boundary");
    s.boundary.G = parse_expression_list(require(bnd, "G", "system.boundary"),
                                         expr::Role::boundary, s.n, "system.boundary.G");
    const json& K = require(bnd, "K", "system.boundary");
    if (!K.is_array() || static_cast<int>(K.size()) != s.n) {
        throw ConfigError("system.boundary.K: expected an n x n array of numbers");
    }
    s.boundary.K = linalg::Matrix(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) {
        if (!K[i].is_array() || static_cast<int>(K[i].size()) != s.n) {
            throw ConfigError("system.boundary.K: expected an n x n array of numbers");
        }
        for (int k = 0; k < s.n; ++k) {
            if (!K[i][k].is_number()) throw ConfigError("system.boundary.K: entries must be numbers");
            double v = K[i][k].get<double>();
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError("system.boundary.K: entries must be finite and >= 0");
            }
            s.boundary.K(i, k) = v;
        }
    }
    return s;
}

SystemSpec load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open system file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return system_from_json(j);
}

json system_to_json(const SystemSpec& s) {
    auto texts = [](const std::vector<Expression>& v) {
        json a = json::array();
        for (const auto& e : v) a.push_back(e.source());
        return a;
    };
    json src = {{"B", texts(s.source.B)}, {"C_B", lipschitz_to_json(s.source.C_B)}};
    if (s.source.M) {
        json rows = json::array();
        for (const auto& r : *s.source.M) rows.push_back(texts(r));
        src["M"] = rows;
    } else {
        src["M"] = nullptr;
    }
    if (s.source.C_g) src["C_g"] = lipschitz_to_json(*s.source.C_g);
    json K = json::array();
    for (int i = 0; i < s.n; ++i) {
        json row = json::array();
        for (int k = 0; k < s.n; ++k) row.push_back(s.boundary.K(i, k));
        K.push_back(row);
    }
    return {{"name", s.name},
            {"n", s.n},
            {"m", s.m},
            {"L", s.L},
            {"lambda", texts(s.lambda)},
            {"source", src},
            {"boundary", {{"G", texts(s.boundary.G)}, {"K", K}}}};
}

// ---------------------------------------------------------------------------
// Validation

std::string ValidationReport::summary() const {
    if (ok) return "ok";
    std::ostringstream os;
    os << violations.size() << " violation(s)";
    std::size_t shown = 0;
    for (const auto& v : violations) {
        if (shown++ == 5) {
            os << "; ...";
            break;
        }
        os << "; " << v.check << " (component " << v.component << ", x=" << v.x
           << ", value=" << v.value << ")";
    }
    return os.str();
}

ValidationReport validate_spec(const SystemSpec& spec) {
    ValidationReport r;
    auto fail = [&r](std::string check, int comp, double x, double value) {
        r.ok = false;
        r.violations.push_back({std::move(check), comp, x, value});
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (int i = 0; i < spec.n; ++i) {
        double prev = nan;
        for (int k = 0; k < validation_lambda_samples; ++k) {
            const double x = spec.L * k / (validation_lambda_samples - 1);
            double v;
            try {
                v = spec.lambda[i].evaluate(expr::Scope{.x = x});
            } catch (const std::exception&) {
                fail("lambda_evaluation", i + 1, x, nan);
                prev = nan;
                continue;
            }
            if (!std::isfinite(v) || std::fabs(v) < 1e-8) {
                fail("lambda_vanishing", i + 1, x, v);
            } else if (std::isfinite(prev) && (prev > 0.0) != (v > 0.0)) {
                // A sign change between samples means a zero in between.
                fail("lambda_vanishing", i + 1, x - 0.5 * spec.L / (validation_lambda_samples - 1), v);
            } else if ((v > 0.0) != spec.rightward(i)) {
                fail("lambda_sign_order", i + 1, x, v);
            }
            prev = v;
        }
    }

    const std::vector<double> zeros(static_cast<std::size_t>(spec.n), 0.0);
    for (int i = 0; i < spec.n; ++i) {
        for (int k = 0; k < validation_zero_samples; ++k) {
            const double x = spec.L * k / (validation_zero_samples - 1);
            expr::Scope sc{.x = x, .u = zeros, .integrals = zeros};
            double v;
            try {
                v = spec.source.B[i].evaluate(sc);
            } catch (const std::exception&) {
                fail("source_evaluation", i + 1, x, nan);
                continue;
            }
            if (!(std::fabs(v) <= 1e-12)) fail("source_nonzero_at_origin", i + 1, x, v);
        }
        double g;
        try {
            g = spec.boundary.G[i].evaluate(expr::Scope{.out = zeros});
        } catch (const std::exception&) {
            fail("boundary_evaluation", i + 1, 0.0, nan);
            continue;
        }
        if (!(std::fabs(g) <= 1e-12)) fail("boundary_nonzero_at_origin", i + 1, 0.0, g);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Coefficient sampling

CoefficientSampler::CoefficientSampler(const SystemSpec& spec, const Grid& grid)
    : n_(spec.n), grid_(grid) {
    const int nodes = grid.nodes();
    lambda_nodes_.assign(n_, std::vector<double>(nodes));
    lambda_stencil_.assign(n_, std::vector<std::vector<double>>(nodes, std::vector<double>(3)));
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < nodes; ++j) {
            const double x = grid.node(j);
            lambda_nodes_[i][j] = spec.lambda[i].evaluate(expr::Scope{.x = x});
            const Stencil st = stencil(j);
            for (int k = 0; k < 3; ++k) {
                lambda_stencil_[i][j][k] =
                    st.weights[k] == 0.0
                        ? 0.0
                        : spec.lambda[i].evaluate(expr::Scope{.x = x + st.offsets[k]});
            }
        }
    }
    M_.assign(nodes, linalg::Matrix(static_cast<std::size_t>(n_)));
    if (spec.source.M) {
        for (int j = 0; j < nodes; ++j) {
            const expr::Scope sc{.x = grid.node(j)};
            for (int a = 0; a < n_; ++a)
                for (int b = 0; b < n_; ++b) M_[j](a, b) = (*spec.source.M)[a][b].evaluate(sc);
        }
    }
}

CoefficientSampler::Stencil CoefficientSampler::stencil(int j) const {
    const double h = grid_.dx() / 4.0;
    const double inv = 1.0 / (2.0 * h);
    if (j == 0) return {h, {0.0, h, 2.0 * h}, {-3.0 * inv, 4.0 * inv, -1.0 * inv}};
    if (j == grid_.cells()) return {h, {0.0, -h, -2.0 * h}, {3.0 * inv, -4.0 * inv, 1.0 * inv}};
    return {h, {-h, h, 0.0}, {-inv, inv, 0.0}};
}

SampledFields CoefficientSampler::sample(std::span<const Expression> J2,
                                         std::span<const Expression> D) const {
    if (static_cast<int>(J2.size()) != n_ || static_cast<int>(D.size()) != n_) {
        throw std::invalid_argument("sample: weight vectors must have n entries");
    }
    const int nodes = grid_.nodes();
    SampledFields f;
    f.n = n_;
    f.x.resize(nodes);
    for (int j = 0; j < nodes; ++j) f.x[j] = grid_.node(j);
    f.lambda = lambda_nodes_;
    f.M = M_;
    f.flux_derivative.assign(n_, std::vector<double>(nodes));
    f.J2.assign(n_, std::vector<double>(nodes));
    f.D.assign(n_, std::vector<double>(nodes));
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < nodes; ++j) {
            const double x = f.x[j];
            f.J2[i][j] = J2[i].evaluate(expr::Scope{.x = x});
            f.D[i][j] = D[i].evaluate(expr::Scope{.x = x});
            const Stencil st = stencil(j);
            double d = 0.0;
            for (int k = 0; k < 3; ++k) {
                if (st.weights[k] == 0.0) continue;
                const double j2 = st.offsets[k] == 0.0
                                      ? f.J2[i][j]
                                      : J2[i].evaluate(expr::Scope{.x = x + st.offsets[k]});
                d += st.weights[k] * j2 * lambda_stencil_[i][j][k];
            }
            f.flux_derivative[i][j] = d;
        }
    }
    return f;
}

SampledFields sample_coefficients(const SystemSpec& spec, const Grid& grid,
                                  std::span<const Expression> J2,
                                  std::span<const Expression> D) {
    return CoefficientSampler(spec, grid).sample(J2, D);
}

// ---------------------------------------------------------------------------
// Source operator and Lipschitz estimation

std::vector<std::vector<double>> apply_source(const SourceSpec& source, const Grid& grid,
                                              const std::vector<std::vector<double>>& u,
                                              bool subtract_linear_part) {
    const int n = static_cast<int>(source.B.size());
    const int nodes = grid.nodes();
    std::vector<double> integrals(n);
    for (int i = 0; i < n; ++i) integrals[i] = trapezoid(u[i], grid.dx());
    std::vector<std::vector<double>> out(n, std::vector<double>(nodes));
    std::vector<double> column(n);
    for (int j = 0; j < nodes; ++j) {
        for (int i = 0; i < n; ++i) column[i] = u[i][j];
        const expr::Scope sc{.x = grid.node(j), .u = column, .integrals = integrals};
        for (int i = 0; i < n; ++i) {
            double b = source.B[i].evaluate(sc);
            if (subtract_linear_part && source.M) {
                for (int k = 0; k < n; ++k) b -= (*source.M)[i][k].evaluate(sc) * column[k];
            }
            out[i][j] = b;
        }
    }
    return out;
}

namespace {

double l2_norm(const std::vector<std::vector<double>>& f, double dx) {
    double s = 0.0;
    std::vector<double> sq;
    for (const auto& comp : f) {
        sq.resize(comp.size());
        for (std::size_t j = 0; j < comp.size(); ++j) sq[j] = comp[j] * comp[j];
        s += trapezoid(sq, dx);
    }
    return std::sqrt(s);
}

constexpr int fourier_modes = 4;

}  // namespace

double estimate_lipschitz(const SourceSpec& source, const Grid& grid, int n_samples,
                          double amplitude, std::uint64_t seed, LipschitzTarget target) {
    if (n_samples < 100) throw std::invalid_argument("estimate_lipschitz: n_samples must be >= 100");
    const int n = static_cast<int>(source.B.size());
    const int nodes = grid.nodes();
    const double L = grid.length();
    const bool residual = target == LipschitzTarget::residual;
    using Field = std::vector<std::vector<double>>;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    auto random_field = [&](double amp) {
        Field f(n, std::vector<double>(nodes, 0.0));
        for (int i = 0; i < n; ++i) {
            double c[fourier_modes + 1], s[fourier_modes + 1];
            for (int k = 0; k <= fourier_modes; ++k) {
                c[k] = amp * unit(rng);
                s[k] = amp * unit(rng);
            }
            for (int j = 0; j < nodes; ++j) {
                const double x = grid.node(j);
                double v = c[0];
                for (int k = 1; k <= fourier_modes; ++k) {
                    v += c[k] * std::cos(k * std::numbers::pi * x / L) + s[k] * std::sin(k * std::numbers::pi * x / L);
                }
                f[i][j] = v;
            }
        }
        return f;
    };
    auto single_mode = [&](int comp, int k) {
        Field f(n, std::vector<double>(nodes, 0.0));
        for (int j = 0; j < nodes; ++j) f[comp][j] = std::cos(k * std::numbers::pi * grid.node(j) / L);
        return f;
    };
    auto axpy = [](const Field& u, double eps, const Field& d) {
        Field v = u;
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v[i].size(); ++j) v[i][j] += eps * d[i][j];
        return v;
    };

    double best = 0.0;
    auto consider = [&](const Field& u, const Field& v) {
        Field diff = u;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < nodes; ++j) diff[i][j] -= v[i][j];
        const double du = l2_norm(diff, grid.dx());
        if (!(du > 0.0)) return;  // degenerate pair
        Field bu = apply_source(source, grid, u, residual);
        Field bv = apply_source(source, grid, v, residual);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < nodes; ++j) bu[i][j] -= bv[i][j];
        best = std::max(best, l2_norm(bu, grid.dx()) / du);
    };

    const Field zero(n, std::vector<double>(nodes, 0.0));
    const double small = 1e-4 * amplitude;
    int p = 0;
    // Structured prefix: infinitesimal single-mode perturbations of zero.
    for (int i = 0; i < n && p < n_samples; ++i) {
        for (int k = 0; k < 3 && p < n_samples; ++k, ++p) {
            consider(zero, axpy(zero, small, single_mode(i, k)));
        }
    }
    for (; p < n_samples; ++p) {
        Field u = random_field(amplitude);
        if (p % 2 == 0) {
            consider(u, random_field(amplitude));
        } else {
            consider(u, axpy(u, 1e-3, random_field(amplitude)));
        }
    }
    return best;
}

KReport verify_K(const BoundarySpec& boundary, int n_samples, double amplitude,
                 std::uint64_t seed) {
    const int n = static_cast<int>(boundary.G.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> decade(0.0, 3.0);

    KReport r;
    std::vector<double> out(n);
    for (int p = 0; p < n_samples; ++p) {
        const double scale = amplitude * std::pow(10.0, -decade(rng));
        for (int j = 0; j < n; ++j) out[j] = scale * unit(rng);
        if (p % 3 == 2) {
            const int keep = p % n;
            for (int j = 0; j < n; ++j) {
                if (j != keep) out[j] = 0.0;
            }
        }
        ++r.samples;
        bool violated = false;
        for (int i = 0; i < n; ++i) {
            const double g = std::fabs(boundary.G[i].evaluate(expr::Scope{.out = out}));
            double bound = 0.0;
            for (int j = 0; j < n; ++j) bound += boundary.K(i, j) * std::fabs(out[j]);
            double ratio;
            if (bound > 0.0) {
                ratio = g / bound;
            } else if (g > 1e-14) {
                ratio = std::numeric_limits<double>::infinity();
            } else {
                continue;
            }
            r.worst_ratio = std::max(r.worst_ratio, ratio);
            if (ratio > 1.0 + 1e-12) violated = true;
        }
        if (violated) {
            r.ok = false;
            if (r.violating_traces.size() < 16) r.violating_traces.push_back(out);
        }
    }
    return r;
}

}  // namespace hyperstab::model
