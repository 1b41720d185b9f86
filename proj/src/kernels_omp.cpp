#include <exception>

#include "hyperstab/kernels.hpp"
#include "kernels_detail.hpp"

namespace hyperstab::kernels::omp {

// Exceptions cannot leave an OpenMP region; the first one is captured and
// rethrown after the loop.

std::vector<double> node_min_eigenvalues(const model::SampledFields& f, InteriorForm form) {
    const int nodes = static_cast<int>(f.x.size());
    std::vector<double> out(nodes);
    std::exception_ptr error;
#pragma omp parallel for schedule(static) if (nodes >= detail::parallel_min_nodes)
    for (int j = 0; j < nodes; ++j) {
        try {
            out[j] = linalg::smallest_eigenvalue(interior_matrix_at(f, j, form));
        } catch (...) {
#pragma omp critical(hyperstab_kernel_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

void upwind_update(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                   std::span<const double> integrals, double t, double dt,
                   std::vector<std::vector<double>>& u_out) {
    const int nodes = p.grid->nodes();
    std::exception_ptr error;
#pragma omp parallel if (nodes >= detail::parallel_min_nodes)
    {
        std::vector<double> column(static_cast<std::size_t>(p.spec->n));
#pragma omp for schedule(static)
        for (int j = 0; j < nodes; ++j) {
            try {
                detail::upwind_node(p, u_in, integrals, t, dt, u_out, j, column);
            } catch (...) {
#pragma omp critical(hyperstab_kernel_error)
                if (!error) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace hyperstab::kernels::omp
