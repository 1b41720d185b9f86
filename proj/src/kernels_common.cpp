#include <cstdlib>

#include "hyperstab/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hyperstab::kernels {

linalg::SymMatrix interior_matrix_at(const model::SampledFields& f, int node, InteriorForm form) {
    const int n = f.n;
    linalg::Matrix a(static_cast<std::size_t>(n));
    const auto& M = f.M[node];
    for (int i = 0; i < n; ++i) {
        const double di = form == InteriorForm::weighted ? f.D[i][node] : 1.0;
        for (int k = 0; k < n; ++k) {
            const double dk = form == InteriorForm::weighted ? f.D[k][node] : 1.0;
            double v = di * f.J2[i][node] * M(i, k) * dk + di * M(k, i) * f.J2[k][node] * dk;
            if (i == k) v -= di * f.flux_derivative[i][node] * dk;
            a(i, k) = v;
        }
    }
    return linalg::SymMatrix(a);
}

std::vector<double> node_min_eigenvalues(const model::SampledFields& f, InteriorForm form,
                                         Backend backend) {
    return backend == Backend::serial ? serial::node_min_eigenvalues(f, form)
                                      : omp::node_min_eigenvalues(f, form);
}

void upwind_update(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                   std::span<const double> integrals, double t, double dt,
                   std::vector<std::vector<double>>& u_out, Backend backend) {
    if (backend == Backend::serial) {
        serial::upwind_update(p, u_in, integrals, t, dt, u_out);
    } else {
        omp::upwind_update(p, u_in, integrals, t, dt, u_out);
    }
}

int configure_threads_from_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("HYPERSTAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) omp_set_num_threads(cap);
    }
#endif
    return max_threads();
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace hyperstab::kernels
