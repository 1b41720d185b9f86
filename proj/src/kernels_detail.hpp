#pragma once

#include <vector>

#include "hyperstab/kernels.hpp"

namespace hyperstab::kernels::detail {

inline constexpr int parallel_min_nodes = 128;

inline void upwind_node(const UpwindProblem& p, const std::vector<std::vector<double>>& u_in,
                        std::span<const double> integrals, double t, double dt,
                        std::vector<std::vector<double>>& u_out, int j,
                        std::vector<double>& column) {
    const auto& spec = *p.spec;
    const auto& grid = *p.grid;
    const int n = spec.n;
    const double dx = grid.dx();
    for (int i = 0; i < n; ++i) column[i] = u_in[i][j];
    const expr::Scope scope{.x = grid.node(j), .t = t, .u = column, .integrals = integrals};
    for (int i = 0; i < n; ++i) {
        if (j == spec.inflow_node(i, grid)) {
            u_out[i][j] = u_in[i][j];
            continue;
        }
        const double lam = (*p.lambda)[i][j];
        const double diff = lam > 0.0 ? u_in[i][j] - u_in[i][j - 1] : u_in[i][j + 1] - u_in[i][j];
        double src = spec.source.B[i].evaluate(scope);
        if (!p.d1.empty()) src += p.d1[i].evaluate(scope);
        u_out[i][j] = u_in[i][j] - (dt * lam / dx) * diff - dt * src;
    }
}

}  // namespace hyperstab::kernels::detail
