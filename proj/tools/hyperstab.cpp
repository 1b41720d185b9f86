#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "hyperstab/kernels.hpp"
#include "hyperstab/sim.hpp"
#include "hyperstab/version.hpp"

using namespace hyperstab;

int main(int argc, char** argv) {
    kernels::configure_threads_from_env();

    CLI::App app{"hyperstab: L2 stability and ISS certificates for 1-D semilinear hyperbolic systems"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    cli::Global g;
    app.add_option("--grid", g.grid, "Grid cells (default: 512 for certificates, 200 for simulation)")
        ->check(CLI::Range(8, 1 << 22));
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Output path");
    auto* mode_opt = app.add_option("--mode", g.mode, "Interior condition")
                         ->check(CLI::IsMember({"strict", "relaxed"}));
    app.add_flag("--json", g.json, "Machine-readable output only");

    cli::CheckArgs check;
    auto* c = app.add_subcommand("check", "Check a certificate for given weights");
    c->fallthrough();
    c->add_option("system", check.system, "System JSON")->required();
    c->add_option("--weights", check.weights, "Weights JSON")->required();
    c->add_option("--cg", check.cg, "Override the Lipschitz constant C_g");

    cli::SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Search for Lyapunov weights");
    s->fallthrough();
    s->add_option("system", synth.system, "System JSON")->required();
    s->add_option("--multistarts", synth.multistarts, "Number of starts")->check(CLI::PositiveNumber);
    s->add_option("--iterations", synth.iterations, "Coordinate cycles per start")
        ->check(CLI::PositiveNumber);
    s->add_option("--trace", synth.trace, "Write the search trace CSV here");
    s->add_option("--cg", synth.cg, "Override the Lipschitz constant C_g");

    cli::SimArgs sim;
    auto* m = app.add_subcommand("simulate", "Run the upwind simulation");
    m->fallthrough();
    m->add_option("system", sim.system, "System JSON")->required();
    m->add_option("--initial", sim.initial, "Initial data, one expression of x per component")
        ->required();
    m->add_option("--T", sim.T, "Horizon")->check(CLI::PositiveNumber);
    m->add_option("--weights", sim.weights, "Weights for V (default J^2 = 1)");
    m->add_option("--disturbances", sim.disturbances, "Disturbance JSON {d1, d2}");
    m->add_option("--d1", sim.d1, "Interior disturbance expressions of (t, x)");
    m->add_option("--d2", sim.d2, "Boundary disturbance expressions of t");
    m->add_option("--svg", sim.svg, "Write a log-norm plot");
    m->add_option("--snapshots", sim.snapshots, "Times for state dumps")->delimiter(',');
    m->add_option("--snapshot-prefix", sim.snapshot_prefix, "Prefix for state dumps");
    m->add_option("--cfl", sim.cfl, "CFL number (default 1 for constant speeds, else 0.9)")
        ->check(CLI::Range(1e-6, 1.0));
    m->add_option("--fit", sim.fit_window, "Decay fit window t0,t1")->delimiter(',')->expected(2);

    cli::IssArgs iss;
    auto* i = app.add_subcommand("iss", "ISS gains and a disturbed validation run");
    i->fallthrough();
    i->add_option("system", iss.system, "System JSON")->required();
    i->add_option("--weights", iss.weights, "Weights JSON")->required();
    i->add_option("--disturbances", iss.disturbances, "Disturbance JSON {d1, d2}");
    i->add_option("--d1", iss.d1, "Interior disturbance expressions of (t, x)");
    i->add_option("--d2", iss.d2, "Boundary disturbance expressions of t");
    i->add_option("--initial", iss.initial, "Initial data (default sin(pi*x) per component)");
    i->add_option("--T", iss.T, "Horizon")->check(CLI::PositiveNumber);
    i->add_option("--cg", iss.cg, "Override the Lipschitz constant C_g");

    cli::ReproduceArgs rep;
    auto* r = app.add_subcommand("reproduce-example", "Rebuild the two-component example bundle");
    r->fallthrough();
    r->add_option("--T", rep.T, "Horizon")->check(CLI::PositiveNumber);

    cli::SweepArgs sweep;
    auto* w = app.add_subcommand("sweep", "Certify/simulate a parameterized system family");
    w->fallthrough();
    w->add_option("template", sweep.template_path, "System JSON with a placeholder")->required();
    w->add_option("--values", sweep.values, "Parameter values")->delimiter(',')->required();
    w->add_option("--placeholder", sweep.placeholder, "Placeholder text (default {p})");
    w->add_option("--weights", sweep.weights, "Weights JSON (enables certification)");
    w->add_option("--initial", sweep.initial, "Initial data (enables simulation)");
    w->add_option("--T", sweep.T, "Horizon")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::input_error;
    }
    g.mode_given = mode_opt->count() > 0;

    try {
        if (*c) return cli::cmd_check(g, check);
        if (*s) return cli::cmd_synth(g, synth);
        if (*m) return cli::cmd_simulate(g, sim);
        if (*i) return cli::cmd_iss(g, iss);
        if (*r) return cli::cmd_reproduce_example(g, rep);
        if (*w) return cli::cmd_sweep(g, sweep);
    } catch (const sim::BlowUpError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::blow_up;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::input_error;
    }
    return cli::input_error;
}
