#include "hyperstab/kernels.hpp"
#include "kernels_detail.hpp"

namespace hyperstab::kernels::serial {

std::vector<double> node_min_eigenvalues(const model::SampledFields& f, InteriorForm form) {
    const int nodes = static_cast<int>(f.x.size());
    std::vector<double> out(nodes);
    for (int j = 0; j < nodes; ++j) {
        out[j] = linalg::smallest_eigenvalue(interior_matrix_at(f, j, form));
    }
    return out;
}

void upwind_update(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                   std::span<const double> integrals, double t, double dt,
                   std::vector<std::vector<double>>& u_out) {
    std::vector<double> column(static_cast<std::size_t>(p.spec->n));
    for (int j = 0; j < p.grid->nodes(); ++j) {
        detail::upwind_node(p, u_in, integrals, t, dt, u_out, j, column);
    }
}

}  // namespace hyperstab::kernels::serial
