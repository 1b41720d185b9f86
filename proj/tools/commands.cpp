#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "hyperstab/two_component.hpp"
#include "hyperstab/report.hpp"
#include "hyperstab/sim.hpp"
#include "hyperstab/synth.hpp"

namespace hyperstab::cli {

using nlohmann::json;
using report::fmt17;

namespace {

model::SystemSpec checked_system(const model::SystemSpec& spec) {
    const auto report = model::validate_spec(spec);
    if (!report.ok) throw model::ConfigError("system '" + spec.name + "' is invalid: " + report.summary());
    return spec;
}

model::SystemSpec load_checked(const std::string& path) {
    return checked_system(model::load_system(path));
}

certify::LipschitzValue lipschitz(const model::SystemSpec& spec, const std::optional<double>& cg,
                                  std::uint64_t seed) {
    if (cg) {
        if (!(*cg >= 0.0)) throw model::ConfigError("--cg must be nonnegative");
        return {*cg, certify::Provenance::certified};
    }
    return certify::resolve_cg(spec, seed);
}

certify::CertifyOptions certify_options(const Global& g) {
    certify::CertifyOptions o;
    if (g.grid > 0) o.cells = g.grid;
    return o;
}

int sim_cells(const Global& g) { return g.grid > 0 ? g.grid : 200; }

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

void write_json_file(const std::string& path, const json& j) {
    report::write_text(path, j.dump(2) + "\n");
}

void human(const Global& g, const std::string& text) {
    if (!g.json) std::cerr << text;
}

std::string describe(const certify::Certificate& c) {
    std::ostringstream o;
    o << "verdict: " << certify::to_string(c.verdict) << " (" << c.assurance() << ", "
      << certify::to_string(c.mode) << " mode)\n";
    o << "  C_g = " << c.C_g.value << " [" << certify::to_string(c.C_g.provenance) << "]\n";
    o << "  strict: lambda_m = " << c.strict.lambda_m << ", threshold = " << c.strict.threshold
      << ", margin = " << c.strict.margin << "\n";
    o << "  relaxed: threshold = " << c.relaxed.threshold << ", margin = " << c.relaxed.margin
      << "\n";
    o << "  boundary: min eig(N) = " << c.boundary_min_eig << (c.boundary_psd ? " (psd)" : " (not psd)")
      << "\n";
    if (c.decay_rate_norm) o << "  decay rate (norm) = " << *c.decay_rate_norm << ", gain = " << c.gain << "\n";
    if (c.iss) {
        o << "  ISS: epsilon = " << c.iss->epsilon << ", C1 = " << c.iss->C1
          << ", C2 = " << c.iss->C2 << ", mu = " << c.iss->mu << "\n";
    }
    for (const auto& w : c.warnings) o << "  warning: " << w << "\n";
    for (const auto& n : c.notes) o << "  note: " << n << "\n";
    return o.str();
}

sim::DisturbanceSpec disturbances(const std::string& file, const std::vector<std::string>& d1,
                                  const std::vector<std::string>& d2, int n) {
    sim::DisturbanceSpec d;
    if (!file.empty()) d = sim::load_disturbances(file, n);
    const auto flags = sim::parse_disturbances(d1, d2, n);
    if (flags.has_interior()) d.d1 = flags.d1;
    if (flags.has_boundary()) d.d2 = flags.d2;
    return d;
}

json trajectory_summary(const sim::Trajectory& tr) {
    const double r = tr.initial_norm() > 0.0 ? tr.final_norm() / tr.initial_norm() : 0.0;
    json j = {{"cells", tr.cells},
              {"dt", tr.dt},
              {"cfl", tr.cfl},
              {"t_end", tr.samples.empty() ? 0.0 : tr.samples.back().t},
              {"samples", tr.samples.size()},
              {"initial_norm", tr.initial_norm()},
              {"final_norm", tr.final_norm()},
              {"final_over_initial", r}};
    j["blowup"] = tr.blowup ? json(*tr.blowup) : json(nullptr);
    return j;
}

}  // namespace

int cmd_check(const Global& g, const CheckArgs& a) {
    const auto spec = load_checked(a.system);
    const auto w = certify::load_weights(a.weights, spec.n);
    const auto cg = lipschitz(spec, a.cg, g.seed);
    const auto cert = certify::certify(spec, w, cg, certify::parse_mode(g.mode), certify_options(g));
    const json j = certify::certificate_to_json(cert);
    if (!g.out.empty()) write_json_file(g.out, j);
    emit(j);
    human(g, describe(cert));
    return cert.certified() ? certified : rejected;
}

int cmd_synth(const Global& g, const SynthArgs& a) {
    const auto spec = load_checked(a.system);
    const auto cg = lipschitz(spec, a.cg, g.seed);
    synth::Budget budget{a.multistarts, a.iterations};
    const auto res = synth::synthesize(spec, cg, certify::parse_mode(g.mode), budget, g.seed,
                                       certify_options(g));

    json trace = json::array();
    for (const auto& t : res.trace) trace.push_back({{"start", t.start}, {"iteration", t.iteration}, {"objective", t.score}});
    json j = {{"found", res.found},
              {"message", res.message},
              {"objective", res.objective},
              {"score", res.score},
              {"best_start", res.best_start},
              {"evaluations", res.evaluations},
              {"start_scores", res.start_scores},
              {"weights", certify::weights_to_json(res.weights)},
              {"certificate", certify::certificate_to_json(res.certificate)}};
    if (!res.found) j["trace"] = trace;
    if (!a.trace.empty()) synth::write_trace_csv(a.trace, res.trace);
    const std::string weights_path = g.out.empty() ? "weights.json" : g.out;
    if (res.found) write_json_file(weights_path, certify::weights_to_json(res.weights));
    emit(j);

    std::ostringstream o;
    o << res.message << "\n";
    if (res.found) {
        o << "  weights written to " << weights_path << " (" << res.weights.family << ")\n";
    } else {
        o << "  best score per start:";
        std::vector<double> best(budget.multistarts, -INFINITY);
        for (const auto& t : res.trace) best[t.start] = t.score;
        for (double b : best) o << ' ' << b;
        o << "\n";
    }
    o << describe(res.certificate);
    human(g, o.str());
    return res.found ? certified : rejected;
}

int cmd_simulate(const Global& g, const SimArgs& a) {
    const auto spec = load_checked(a.system);
    const auto initial = sim::parse_initial(a.initial, spec.n);
    std::optional<std::vector<expr::Expression>> vw;
    if (!a.weights.empty()) vw = certify::load_weights(a.weights, spec.n).J2;
    const auto dist = disturbances(a.disturbances, a.d1, a.d2, spec.n);

    sim::SimOptions opt;
    opt.cfl = a.cfl;
    opt.snapshot_times = a.snapshots;
    const auto tr = sim::simulate(spec, initial, a.T, model::Grid(sim_cells(g), spec.L), dist, vw, opt);

    const std::string csv = g.out.empty() ? "trajectory.csv" : g.out;
    report::write_trajectory_csv(csv, tr);
    json j = trajectory_summary(tr);
    j["csv"] = csv;
    if (!a.svg.empty()) {
        report::write_svg(a.svg, {{spec.name, "black", &tr}}, spec.name);
        j["svg"] = a.svg;
    }
    if (!tr.snapshots.empty()) {
        const std::string prefix = a.snapshot_prefix.empty() ? csv.substr(0, csv.rfind('.')) + "_snapshot"
                                                             : a.snapshot_prefix;
        j["snapshots"] = report::write_snapshots(prefix, tr);
    }
    try {
        const auto fit = a.fit_window.size() == 2 ? sim::fit_decay_rate(tr, a.fit_window[0], a.fit_window[1])
                                                  : sim::fit_decay_rate_auto(tr);
        j["fit"] = {{"rate", fit.rate}, {"r_squared", fit.r_squared}, {"samples", fit.samples}};
    } catch (const std::invalid_argument& e) {
        j["fit"] = {{"error", e.what()}};
    }
    emit(j);

    std::ostringstream o;
    if (tr.blowup) {
        o << "blow-up: " << *tr.blowup << "; last finite time " << tr.final_state.t << "\n";
    }
    o << "simulated " << spec.name << " to t = " << j["t_end"].get<double>() << " on " << tr.cells
      << " cells; ||u|| " << tr.initial_norm() << " -> " << tr.final_norm();
    if (j["fit"].contains("rate")) {
        o << "; fitted decay rate " << j["fit"]["rate"].get<double>() << " (r^2 = "
          << j["fit"]["r_squared"].get<double>() << ")";
    }
    o << "\n";
    human(g, o.str());
    return tr.blowup ? blow_up : certified;
}

int cmd_iss(const Global& g, const IssArgs& a) {
    const auto spec = load_checked(a.system);
    const auto w = certify::load_weights(a.weights, spec.n);
    const auto cg = lipschitz(spec, a.cg, g.seed);
    const auto dist = disturbances(a.disturbances, a.d1, a.d2, spec.n);
    const auto cert = certify::iss_gains(spec, w, cg, certify_options(g));

    json j = {{"certificate", certify::certificate_to_json(cert)}, {"check", nullptr}};
    if (!cert.iss) {
        if (!g.out.empty()) write_json_file(g.out, j);
        emit(j);
        std::string why = "no ISS certificate";
        for (const auto& n : cert.notes) why += "; " + n;
        human(g, why + "\n" + describe(cert));
        return rejected;
    }

    std::vector<std::string> init_text = a.initial;
    if (init_text.empty()) init_text.assign(spec.n, "sin(pi*x)");
    const auto initial = sim::parse_initial(init_text, spec.n);
    const auto tr = sim::simulate(spec, initial, a.T, model::Grid(sim_cells(g), spec.L), dist, w.J2);
    if (tr.blowup) {
        std::cerr << "blow-up: " << *tr.blowup << "\n";
        return blow_up;
    }
    const auto chk = sim::check_iss_bound(tr, cert);
    j["check"] = {{"max_ratio", chk.max_ratio},
                  {"worst_time", chk.worst_time},
                  {"allowance", sim::iss_allowance},
                  {"pass", chk.pass},
                  {"T", a.T},
                  {"trajectory", trajectory_summary(tr)}};
    if (!g.out.empty()) write_json_file(g.out, j);
    emit(j);

    std::ostringstream o;
    o << describe(cert);
    o << "ISS envelope: max ratio " << chk.max_ratio << " at t = " << chk.worst_time
      << (chk.pass ? " (holds)" : " (violated)") << "\n";
    human(g, o.str());
    return chk.pass ? certified : rejected;
}

int cmd_reproduce_example(const Global& g, const ReproduceArgs& a) {
    two_component::BundleOptions opt;
    if (!g.out.empty()) opt.out_dir = g.out;
    opt.mode = g.mode_given ? certify::parse_mode(g.mode) : certify::Mode::relaxed;
    if (g.grid > 0) opt.cells = g.grid;
    opt.horizon = a.T;
    const auto res = two_component::reproduce(opt);
    json j = res.summary;
    j["files"] = res.files;
    emit(j);
    human(g, res.table);
    return res.reproduced ? certified : rejected;
}

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    if (from.empty()) return s;
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

struct SweepRow {
    std::string value;
    std::string error;
    json result = json::object();
};

}  // namespace

int cmd_sweep(const Global& g, const SweepArgs& a) {
    std::ifstream in(a.template_path);
    if (!in) throw model::ConfigError("cannot open " + a.template_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.find(a.placeholder) == std::string::npos)
        throw model::ConfigError("template does not contain " + a.placeholder);
    const auto mode = certify::parse_mode(g.mode);

    std::vector<SweepRow> rows(a.values.size());
    const int count = static_cast<int>(a.values.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < count; ++r) {
        SweepRow& row = rows[r];
        row.value = a.values[r];
        try {
            const auto spec = checked_system(model::system_from_json(json::parse(replace_all(text, a.placeholder, row.value))));
            if (!a.weights.empty()) {
                const auto w = certify::load_weights(a.weights, spec.n);
                const auto cert = certify::certify(spec, w, certify::resolve_cg(spec, g.seed), mode, certify_options(g));
                row.result["verdict"] = certify::to_string(cert.verdict);
                row.result["interior_margin"] = cert.interior_margin;
                row.result["boundary_min_eig"] = cert.boundary_min_eig;
                row.result["decay_rate_norm"] = cert.decay_rate_norm ? json(*cert.decay_rate_norm) : json(nullptr);
            }
            if (!a.initial.empty()) {
                const auto init = sim::parse_initial(a.initial, spec.n);
                const auto tr = sim::simulate(spec, init, a.T, model::Grid(sim_cells(g), spec.L));
                row.result["final_over_initial"] = tr.final_norm() / tr.initial_norm();
                if (tr.blowup) row.result["blowup"] = *tr.blowup;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    }

    auto cell = [](const json& r, const char* key) -> std::string {
        if (!r.contains(key) || r[key].is_null()) return "";
        if (r[key].is_string()) return r[key].get<std::string>();
        if (r[key].is_number()) return fmt17(r[key].get<double>());
        return r[key].dump();
    };
    std::ostringstream csv;
    csv << "value,verdict,interior_margin,boundary_min_eig,decay_rate_norm,final_over_initial,error\n";
    json out = json::array();
    bool any_error = false;
    for (const auto& row : rows) {
        csv << row.value << ',' << cell(row.result, "verdict") << ',' << cell(row.result, "interior_margin") << ','
            << cell(row.result, "boundary_min_eig") << ',' << cell(row.result, "decay_rate_norm") << ','
            << cell(row.result, "final_over_initial") << ',' << (row.error.empty() ? "" : "\"" + replace_all(row.error, "\"", "'") + "\"")
            << '\n';
        json j = row.result;
        j["value"] = row.value;
        if (!row.error.empty()) {
            j["error"] = row.error;
            any_error = true;
        }
        out.push_back(j);
    }
    if (!g.out.empty()) report::write_text(g.out, csv.str());
    emit(out);
    human(g, csv.str());
    return any_error ? input_error : certified;
}

}  // namespace hyperstab::cli
