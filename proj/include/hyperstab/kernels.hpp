#pragma once

#include <span>
#include <vector>

#include "hyperstab/expr.hpp"
#include "hyperstab/linalg.hpp"
#include "hyperstab/model.hpp"

/// Data-parallel inner loops. Every kernel has a serial reference and an
/// OpenMP version; both produce bit-identical results because each node is
/// computed independently and reductions are done serially afterwards.
namespace hyperstab::kernels {

enum class Backend { serial, parallel };

/// Which interior matrix a node scan evaluates.
enum class InteriorForm {
    weighted,    // -D (J^2 Lambda)' D + D J^2 M D + D M^T J^2 D
    unweighted,  // same with D = identity
};

linalg::SymMatrix interior_matrix_at(const model::SampledFields& f, int node, InteriorForm form);

/// Smallest eigenvalue of the interior matrix at every node.
std::vector<double> node_min_eigenvalues(const model::SampledFields& f, InteriorForm form,
                                         Backend backend = Backend::parallel);

/// Inputs of one explicit upwind/Euler update over all grid nodes.
struct UpwindProblem {
    const model::SystemSpec* spec = nullptr;
    const model::Grid* grid = nullptr;
    const std::vector<std::vector<double>>* lambda = nullptr;  // [i][j]
    std::span<const expr::Expression> d1;                      // may be empty
};

/// u_out = u_in - dt * (Lambda du/dx (upwind) + B(u_in) + d1(t, x)) at every
/// node except each component's inflow node, which is copied unchanged.
/// `integrals` holds the trapezoid integrals of u_in.
void upwind_update(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                   std::span<const double> integrals, double t, double dt,
                   std::vector<std::vector<double>>& u_out, Backend backend = Backend::parallel);

namespace serial {
std::vector<double> node_min_eigenvalues(const model::SampledFields& f, InteriorForm form);
void upwind_update(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                   std::span<const double> integrals, double t, double dt,
                   std::vector<std::vector<double>>& u_out);
}  // namespace serial

namespace omp {
std::vector<double> node_min_eigenvalues(const model::SampledFields& f, InteriorForm form);
void upwind_update(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                   std::span<const double> integrals, double t, double dt,
                   std::vector<std::vector<double>>& u_out);
}  // namespace omp

/// Applies HYPERSTAB_THREADS (if set and positive) as the OpenMP thread cap.
/// Returns the resulting maximum thread count.
int configure_threads_from_env();
int max_threads();

}  // namespace hyperstab::kernels
