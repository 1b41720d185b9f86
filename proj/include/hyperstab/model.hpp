#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperstab/expr.hpp"
#include "hyperstab/linalg.hpp"

namespace hyperstab::model {

using expr::Expression;
using ExprMatrix = std::vector<std::vector<Expression>>;

/// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform grid x_j = j L / N_x, j = 0..N_x.
class Grid {
public:
    Grid(int cells, double length);

    int cells() const { return cells_; }
    int nodes() const { return cells_ + 1; }
    double length() const { return length_; }
    double dx() const { return length_ / cells_; }
    double node(int j) const { return length_ * j / cells_; }

private:
    int cells_;
    double length_;
};

/// Composite trapezoid rule on uniformly spaced samples.
double trapezoid(std::span<const double> f, double dx);

/// A Lipschitz constant: user-supplied, or to be estimated by sampling.
struct LipschitzConstant {
    bool estimate = false;
    double value = 0.0;
};

struct SourceSpec {
    std::vector<Expression> B;             // over {x, u[j], I[j]}
    LipschitzConstant C_B;
    std::optional<ExprMatrix> M;           // linear split, over {x}
    std::optional<LipschitzConstant> C_g;  // constant of g = B - M u

    /// True if any component reads a nonlocal integral I[j].
    bool nonlocal() const;
};

struct BoundarySpec {
    std::vector<Expression> G;  // over {out[j]}
    linalg::Matrix K;
};

/// u_t + Lambda(x) u_x + B(u, x) = 0 on (0, L) with incoming traces
/// given by G(outgoing traces). Components 0..m-1 travel right.
struct SystemSpec {
    std::string name = "system";
    int n = 0;
    int m = 0;
    double L = 1.0;
    std::vector<Expression> lambda;
    SourceSpec source;
    BoundarySpec boundary;

    bool rightward(int i) const { return i < m; }
    /// Side where component i enters the domain (0 for rightward).
    double inflow_x(int i) const { return rightward(i) ? 0.0 : L; }
    double outflow_x(int i) const { return rightward(i) ? L : 0.0; }
    int inflow_node(int i, const Grid& g) const { return rightward(i) ? 0 : g.cells(); }
    int outflow_node(int i, const Grid& g) const { return rightward(i) ? g.cells() : 0; }
};

SystemSpec system_from_json(const nlohmann::json& j);
SystemSpec load_system(const std::string& path);
nlohmann::json system_to_json(const SystemSpec& s);

/// Parses an n-vector of expressions for the given role; used by weight and
/// disturbance files as well.
std::vector<Expression> parse_expression_list(const nlohmann::json& j, expr::Role role, int n,
                                              const std::string& what);

struct Violation {
    std::string check;
    int component = 0;  // 1-based
    double x = 0.0;
    double value = 0.0;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;
    std::string summary() const;
};

inline constexpr int validation_lambda_samples = 256;
inline constexpr int validation_zero_samples = 32;

/// Sign structure and nonvanishing of Lambda, B(0, x) = 0, G(0) = 0.
ValidationReport validate_spec(const SystemSpec& spec);

/// Coefficients on a grid: Lambda, (J^2 Lambda)', M, J^2, D. Indexed
/// [component][node], M indexed [node].
struct SampledFields {
    int n = 0;
    std::vector<double> x;
    std::vector<std::vector<double>> lambda;
    std::vector<std::vector<double>> flux_derivative;
    std::vector<linalg::Matrix> M;
    std::vector<std::vector<double>> J2;
    std::vector<std::vector<double>> D;
};

/// Evaluates Lambda and M once on the derivative stencil so that repeated
/// weight evaluations (synthesis) only pay for the weights.
class CoefficientSampler {
public:
    CoefficientSampler(const SystemSpec& spec, const Grid& grid);

    /// (J^2 Lambda)' uses central differences with step dx/4 and one-sided
    /// second-order formulas at the two endpoints.
    SampledFields sample(std::span<const Expression> J2, std::span<const Expression> D) const;

    const Grid& grid() const { return grid_; }

private:
    struct Stencil {
        double h;
        double offsets[3];
        double weights[3];
    };
    Stencil stencil(int j) const;

    int n_;
    Grid grid_;
    std::vector<std::vector<double>> lambda_nodes_;
    std::vector<std::vector<std::vector<double>>> lambda_stencil_;  // [i][j][k]
    std::vector<linalg::Matrix> M_;
};

SampledFields sample_coefficients(const SystemSpec& spec, const Grid& grid,
                                  std::span<const Expression> J2,
                                  std::span<const Expression> D);

/// Evaluates the source B (optionally minus M u) on a grid state u[i][j].
/// Nonlocal integrals use the trapezoid rule.
std::vector<std::vector<double>> apply_source(const SourceSpec& source, const Grid& grid,
                                              const std::vector<std::vector<double>>& u,
                                              bool subtract_linear_part);

enum class LipschitzTarget { source, residual };

/// Sampled lower bound on the L^2 Lipschitz constant of B (or g = B - M u).
/// Deterministic for a fixed seed; the running maximum over a fixed pair
/// stream, so it is nondecreasing in n_samples.
double estimate_lipschitz(const SourceSpec& source, const Grid& grid, int n_samples,
                          double amplitude, std::uint64_t seed,
                          LipschitzTarget target = LipschitzTarget::source);

struct KReport {
    bool ok = true;
    double worst_ratio = 0.0;
    int samples = 0;
    std::vector<std::vector<double>> violating_traces;
};

/// Samples outgoing traces and checks |G_i(out)| <= sum_j K_ij |out_j|.
KReport verify_K(const BoundarySpec& boundary, int n_samples, double amplitude,
                 std::uint64_t seed);

}  // namespace hyperstab::model
