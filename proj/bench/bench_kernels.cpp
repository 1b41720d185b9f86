#include <benchmark/benchmark.h>

#include <cmath>

#include "hyperstab/certify.hpp"
#include "hyperstab/kernels.hpp"

using namespace hyperstab;

namespace {

model::SystemSpec bench_system() {
    return model::system_from_json(nlohmann::json{
        {"name", "bench"},
        {"n", 3},
        {"m", 2},
        {"L", 1.0},
        {"lambda", {"1 + 0.5*x", "2 - x", "-(1 + x*x)"}},
        {"source",
         {{"B", {"0.1*sin(u[2]) + 0.05*x*u[1]", "0.1*tanh(u[3])", "0.1*sin(I[1])"}},
          {"C_B", 0.2},
          {"M", {{"0.05*x", "0", "0"}, {"0", "0", "0"}, {"0", "0", "0"}}},
          {"C_g", 0.15}}},
        {"boundary",
         {{"G", {"0.2*out[3]", "0.1*out[1]", "0.3*out[2]"}},
          {"K", {{0, 0, 0.2}, {0.1, 0, 0}, {0, 0.3, 0}}}}},
    });
}

model::SampledFields fields(int cells) {
    const auto spec = bench_system();
    const auto w = certify::weights_from_json(
        {{"J2", {"exp(-x)", "exp(-0.5*x)", "exp(x)"}}, {"D", {"1", "0.8", "1"}}}, 3);
    return model::sample_coefficients(spec, model::Grid(cells, 1.0), w.J2, w.D);
}

void BM_eigen_serial(benchmark::State& st) {
    const auto f = fields(static_cast<int>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::serial::node_min_eigenvalues(f, kernels::InteriorForm::weighted));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_eigen_omp(benchmark::State& st) {
    const auto f = fields(static_cast<int>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(kernels::omp::node_min_eigenvalues(f, kernels::InteriorForm::weighted));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

struct UpwindFixture {
    model::SystemSpec spec = bench_system();
    model::Grid grid;
    std::vector<std::vector<double>> lambda, u, out;
    std::vector<double> integrals;

    explicit UpwindFixture(int cells) : grid(cells, 1.0) {
        const int n = spec.n;
        lambda.assign(n, std::vector<double>(grid.nodes()));
        u = out = lambda;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < grid.nodes(); ++j) {
                lambda[i][j] = spec.lambda[i].evaluate(expr::Scope{.x = grid.node(j)});
                u[i][j] = std::sin(3.0 * grid.node(j) + i);
            }
            integrals.push_back(model::trapezoid(u[i], grid.dx()));
        }
    }
    kernels::UpwindProblem problem() const { return {&spec, &grid, &lambda, {}}; }
};

void BM_upwind_serial(benchmark::State& st) {
    UpwindFixture fx(static_cast<int>(st.range(0)));
    const auto p = fx.problem();
    const double dt = 0.9 * fx.grid.dx() / 2.0;
    for (auto _ : st) {
        kernels::serial::upwind_update(p, fx.u, fx.integrals, 0.0, dt, fx.out);
        benchmark::ClobberMemory();
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_upwind_omp(benchmark::State& st) {
    UpwindFixture fx(static_cast<int>(st.range(0)));
    const auto p = fx.problem();
    const double dt = 0.9 * fx.grid.dx() / 2.0;
    for (auto _ : st) {
        kernels::omp::upwind_update(p, fx.u, fx.integrals, 0.0, dt, fx.out);
        benchmark::ClobberMemory();
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_eigen_serial)->RangeMultiplier(4)->Range(128, 8192);
BENCHMARK(BM_eigen_omp)->RangeMultiplier(4)->Range(128, 8192);
BENCHMARK(BM_upwind_serial)->RangeMultiplier(4)->Range(128, 8192);
BENCHMARK(BM_upwind_omp)->RangeMultiplier(4)->Range(128, 8192);

int main(int argc, char** argv) {
    kernels::configure_threads_from_env();
    benchmark::Initialize(&argc, argv);
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
