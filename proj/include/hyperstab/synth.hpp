#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperstab/certify.hpp"

namespace hyperstab::synth {

using certify::Mode;
using expr::Expression;
using certify::WeightSpec;

enum class FamilyKind { affine, exponential };
const char* to_string(FamilyKind k);

/// A point of a weight family. Positive quantities are stored as logs so
/// every parameter vector is admissible.
///   affine:       J_i^2(x) = a_i + (b_i - a_i) x / L, params (log a_i, log b_i)
///   exponential:  J_i^2(x) = a_i exp(s_i mu x), params (log a_i), mu;
///                 s_i = -1 for rightward components, +1 otherwise
/// Both families carry a constant diagonal D with max_i d_i = 1.
struct FamilyPoint {
    FamilyKind kind = FamilyKind::affine;
    std::vector<double> params;

    static FamilyPoint affine(std::span<const double> a, std::span<const double> b,
                              std::span<const double> d);
    static FamilyPoint exponential(std::span<const double> a, double mu,
                                   std::span<const double> d);
};

/// Number of free parameters of a family for an n-component system.
int parameter_count(FamilyKind kind, int n);

WeightSpec to_weights(const model::SystemSpec& spec, const FamilyPoint& p);

/// Interior and boundary parts of the objective.
struct Margins {
    double interior = 0.0;   // interior margin / max(C_g, 1e-6)
    double boundary = 0.0;   // lambda_min(N) / ||diag(outflow)||_F
    double objective = 0.0;  // min of the two
    /// Search score: the objective while a condition fails, the interior
    /// part once the boundary matrix is positive definite and the interior
    /// margin is positive.
    double score = 0.0;
};

/// Evaluates candidate weights against one system on a fixed grid.
class Evaluator {
public:
    Evaluator(const model::SystemSpec& spec, int cells);

    Margins margins(const WeightSpec& w, double C_g, Mode mode) const;

private:
    model::SystemSpec spec_;
    model::CoefficientSampler sampler_;
};

/// min(interior margin / max(C_g, 1e-6), lambda_min(N) / ||N first term||_F).
/// Invariant under J^2 -> c J^2; negative iff a condition fails.
double margin_objective(const model::SystemSpec& spec, const WeightSpec& w, double C_g,
                        Mode mode, int cells = certify::default_certify_cells);

struct Budget {
    int multistarts = 16;
    int iterations = 40;  // coordinate cycles per start
};

inline constexpr int search_cells = 128;

struct TracePoint {
    int start = 0;
    int iteration = 0;
    double score = 0.0;
};

struct SynthesisResult {
    bool found = false;
    std::string message;
    WeightSpec weights;
    double objective = 0.0;  // margin_objective of `weights` on the certificate grid
    double score = 0.0;      // search score of `weights` on the search grid
    int best_start = -1;
    int evaluations = 0;
    certify::Certificate certificate;
    std::vector<TracePoint> trace;
    std::vector<double> start_scores;  // score at each start's initial point
};

SynthesisResult synthesize(const model::SystemSpec& spec, certify::LipschitzValue C_g, Mode mode,
                           Budget budget = {}, std::uint64_t seed = 0,
                           const certify::CertifyOptions& options = {});

/// CSV with header `iteration,objective`.
void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace);

}  // namespace hyperstab::synth
