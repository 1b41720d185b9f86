#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperstab/kernels.hpp"
#include "hyperstab/linalg.hpp"
#include "hyperstab/model.hpp"

namespace hyperstab::certify {

using expr::Expression;

/// Diagonal Lyapunov weights: V(u) = int sum_i J_i^2(x) u_i(x)^2 dx, plus
/// the diagonal scaling D(x) of the interior condition. The linear split M
/// comes from the system's source description.
struct WeightSpec {
    std::vector<Expression> J2;
    std::vector<Expression> D;
    std::string family;             // informational ("affine", "exponential", ...)
    nlohmann::json parameters;      // informational

    static WeightSpec identity(int n);
};

WeightSpec weights_from_json(const nlohmann::json& j, int n);
WeightSpec load_weights(const std::string& path, int n);
nlohmann::json weights_to_json(const WeightSpec& w);

enum class Mode { strict, relaxed };
enum class Verdict { certified_strict, certified_relaxed, rejected };
enum class Provenance { certified, estimated };

const char* to_string(Mode m);
const char* to_string(Verdict v);
const char* to_string(Provenance p);
Mode parse_mode(const std::string& s);

struct LipschitzValue {
    double value = 0.0;
    Provenance provenance = Provenance::certified;
};

inline constexpr int default_certify_cells = 512;
inline constexpr int lipschitz_samples = 400;
inline constexpr double lipschitz_amplitude = 1.0;

/// C_g for the system: the supplied constant, C_B when there is no linear
/// split, or a sampled estimate flagged as such.
LipschitzValue resolve_cg(const model::SystemSpec& spec, std::uint64_t seed = 0);

struct InteriorCheck {
    double lambda_m = 0.0;   // strict: min over nodes; relaxed: of the D-free matrix
    double threshold = 0.0;  // bound C_g must stay below
    double margin = 0.0;     // threshold - C_g (relaxed: min pointwise margin)
    bool pass = false;
    double max_D = 0.0;
    double max_DJ2 = 0.0;
};

struct IssFields {
    double C1 = 0.0;
    double C2 = 0.0;
    double epsilon = 0.0;
    bool epsilon_capped = false;
    double mu = 0.0;
    double fading_rate = 0.0;  // mu / 2, weight exp(-fading_rate (t - s)) on |d|^2
    double norm_decay = 0.0;   // mu / 4
    double lambda_sup = 0.0;   // ||Lambda||_inf
};

struct Certificate {
    std::string system_name;
    std::string kind = "stability";  // or "iss"
    Mode mode = Mode::strict;
    Verdict verdict = Verdict::rejected;
    int cells = default_certify_cells;
    double lambda_m = 0.0;
    std::optional<double> lambda_m_refined;
    LipschitzValue C_g;
    InteriorCheck strict;
    InteriorCheck relaxed;
    double interior_margin = 0.0;
    linalg::SymMatrix N;
    double boundary_min_eig = 0.0;
    bool boundary_psd = false;
    bool boundary_pd = false;
    std::optional<double> decay_rate_norm;
    double gain = 0.0;
    std::optional<IssFields> iss;
    std::vector<std::string> warnings;
    std::vector<std::string> notes;

    bool certified() const { return verdict != Verdict::rejected; }
    /// "certified" unless C_g was estimated.
    std::string assurance() const;
};

nlohmann::json certificate_to_json(const Certificate& c);

linalg::SymMatrix interior_matrix(const model::SampledFields& f, int node);

/// Interior check on sampled fields. Strict: C_g < lambda_m / (2 max D max DJ^2)
/// with lambda_m the smallest eigenvalue of the D-weighted matrix over all
/// nodes. Relaxed: C_g < lambda(x) / max_i J_i^2(x) at every node, lambda(x)
/// taken from the unweighted matrix.
InteriorCheck check_interior(const model::SampledFields& f, double C_g, Mode mode,
                             kernels::Backend backend = kernels::Backend::parallel);

/// J_i^2 |Lambda_i| at each component's outflow end (first term of N) and at
/// its inflow end (weight of the reflected part).
struct BoundaryWeights {
    std::vector<double> outflow;  // first term of N
    std::vector<double> inflow;   // congruence weight
};
BoundaryWeights boundary_weights(const model::SystemSpec& spec, const WeightSpec& w);

/// N = diag(outflow) - K^T diag(inflow) K.
linalg::SymMatrix boundary_matrix(const model::SystemSpec& spec, const WeightSpec& w);

struct CertifyOptions {
    int cells = default_certify_cells;
    bool refine_check = true;  // also report lambda_m at 2 * cells
    double psd_tol = linalg::default_psd_tol;
    kernels::Backend backend = kernels::Backend::parallel;
};

/// Precomputes coefficient samples so many weight candidates can be checked
/// against one system.
class Certifier {
public:
    Certifier(const model::SystemSpec& spec, CertifyOptions options = {});

    Certificate certify(const WeightSpec& w, LipschitzValue C_g, Mode mode) const;
    Certificate iss_gains(const WeightSpec& w, LipschitzValue C_g) const;

    const model::SystemSpec& spec() const { return spec_; }
    const CertifyOptions& options() const { return options_; }

private:
    model::SystemSpec spec_;
    CertifyOptions options_;
    model::Grid grid_;
    model::CoefficientSampler sampler_;
    std::optional<model::CoefficientSampler> refined_;
};

Certificate certify(const model::SystemSpec& spec, const WeightSpec& w, LipschitzValue C_g,
                    Mode mode, const CertifyOptions& options = {});

/// Input-to-state gains. Requires the strict interior condition and a
/// strictly positive definite N; epsilon is the largest value keeping
/// N - epsilon K^T diag(inflow) K positive semidefinite.
Certificate iss_gains(const model::SystemSpec& spec, const WeightSpec& w, LipschitzValue C_g,
                      const CertifyOptions& options = {});

inline constexpr double epsilon_cap = 1e6;

struct EpsilonSearch {
    double epsilon = 0.0;
    bool capped = false;
};
EpsilonSearch largest_boundary_epsilon(const linalg::SymMatrix& N, const linalg::SymMatrix& C,
                                       double tol = linalg::default_psd_tol);

}  // namespace hyperstab::certify
