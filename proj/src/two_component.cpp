#include "hyperstab/two_component.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyperstab/report.hpp"

namespace hyperstab::two_component {

using expr::Expression;
using report::fmt17;

double epsilon(const Parameters& p) {
    if (!(std::abs(p.c) * p.L < 0.5)) throw model::ConfigError("example requires |c| L < 1/2");
    return 3.0 * (1.0 / std::abs(p.c) - 2.0 * p.L) / 4.0;
}

double k_design(const Parameters& p) { return std::sqrt(1.0 / (1.0 + 2.0 * p.L / epsilon(p))); }

double relaxed_threshold(const Parameters& p) { return 1.0 / (epsilon(p) + 2.0 * p.L); }

double strict_threshold(const Parameters& p) { return 0.5 * relaxed_threshold(p); }

std::array<double, 2> boundary_diagonal(const Parameters& p, double k) {
    const double eps = epsilon(p);
    return {eps - (1.0 - k) * (1.0 - k) * (eps + 2.0 * p.L), 0.0};
}

model::SystemSpec system(const Parameters& p, double k) {
    const std::string a = fmt17(p.c / p.L);
    const std::string gain = fmt17(1.0 - k);
    nlohmann::json j = {
        {"name", "two_component"},
        {"n", 2},
        {"m", 1},
        {"L", p.L},
        {"lambda", {"1", "-1"}},
        {"source",
         {{"B", {"-" + a + "*sin(I[2])", "-" + a + "*sin(I[1])"}},
          {"C_B", std::abs(p.c)},
          {"M", nullptr}}},
        {"boundary",
         {{"G", {"out[2]", gain + "*out[1]"}},
          {"K", {{0.0, 1.0}, {std::abs(1.0 - k), 0.0}}}}},
    };
    return model::system_from_json(j);
}

certify::WeightSpec reference_weights(const Parameters& p) {
    const std::string top = fmt17(p.L + epsilon(p));
    nlohmann::json j = {{"J2", {top + " - x", top + " + x"}},
                        {"D", {"1", "1"}},
                        {"family", "affine"},
                        {"parameters", {{"epsilon", epsilon(p)}}}};
    return certify::weights_from_json(j, 2);
}

certify::LipschitzValue lipschitz(const Parameters& p) {
    return {std::abs(p.c), certify::Provenance::certified};
}

std::vector<Expression> decay_initial_data() {
    return sim::parse_initial({"sqrt(2*pi*x)", "exp(-2*pi*x)"}, 2);
}

std::vector<Expression> traveling_wave_initial(double amplitude) {
    const std::string a = fmt17(amplitude);
    return sim::parse_initial({a + "*cos(2*pi*x)", a + "*cos(2*pi*x)"}, 2);
}

namespace {

std::string gain_tag(double k) {
    std::ostringstream o;
    o << k;
    return o.str();
}

void write_json(const std::string& path, const nlohmann::json& j) {
    report::write_text(path, j.dump(2) + "\n");
}

}  // namespace

BundleResult reproduce(const BundleOptions& options) {
    namespace fs = std::filesystem;
    fs::create_directories(options.out_dir);
    const Parameters p;
    const double k_demo = demo_gains.back();
    BundleResult res;
    auto path = [&](const std::string& name) {
        const std::string full = (fs::path(options.out_dir) / name).string();
        res.files.push_back(full);
        return full;
    };

    const auto spec = system(p, k_demo);
    const auto weights = reference_weights(p);
    write_json(path("two_component.json"), model::system_to_json(spec));
    write_json(path("reference_weights.json"), certify::weights_to_json(weights));

    certify::CertifyOptions copt;
    copt.cells = options.certify_cells;
    const auto cert = certify::certify(spec, weights, lipschitz(p), options.mode, copt);
    write_json(path(std::string("certificate_") + certify::to_string(options.mode) + ".json"),
               certify::certificate_to_json(cert));

    nlohmann::json runs = nlohmann::json::array();
    std::vector<sim::Trajectory> trajectories;
    std::vector<double> ratios;
    for (double k : demo_gains) {
        const auto sk = system(p, k);
        const auto ck = certify::certify(sk, weights, lipschitz(p), certify::Mode::relaxed, copt);
        sim::Trajectory tr =
            sim::simulate(sk, decay_initial_data(), options.horizon,
                          model::Grid(options.cells, p.L), {}, weights.J2);
        if (tr.blowup) throw sim::BlowUpError(tr.final_state.t, *tr.blowup);
        report::write_trajectory_csv(path("trajectory_k" + gain_tag(k) + ".csv"), tr);
        const double ratio = tr.final_norm() / tr.initial_norm();
        ratios.push_back(ratio);
        runs.push_back({{"k", k},
                        {"N_diag", {ck.N(0, 0), ck.N(1, 1)}},
                        {"relaxed_verdict", certify::to_string(ck.verdict)},
                        {"initial_norm", tr.initial_norm()},
                        {"final_norm", tr.final_norm()},
                        {"final_over_initial", ratio}});
        trajectories.push_back(std::move(tr));
    }
    const char* colors[] = {"blue", "red", "green"};
    std::vector<report::Series> series;
    for (std::size_t i = 0; i < trajectories.size(); ++i)
        series.push_back({"k = " + gain_tag(demo_gains[i]), colors[i % 3], &trajectories[i]});
    report::write_svg(path("norms.svg"), series, "L2 norm, c = 0.25, L = 1");

    res.reproduced = ratios[2] < decay_target && ratios[1] < decay_target &&
                     ratios[0] >= open_loop_floor;

    const double strict_t = cert.strict.threshold;
    const double relaxed_t = cert.relaxed.threshold;
    res.summary = {
        {"c", p.c},
        {"L", p.L},
        {"epsilon", epsilon(p)},
        {"k_design", k_design(p)},
        {"relaxed_threshold", relaxed_t},
        {"strict_threshold", strict_t},
        {"strict_margin", cert.strict.margin},
        {"threshold_ratio", relaxed_t / strict_t},
        {"C_g", p.c},
        {"mode", certify::to_string(options.mode)},
        {"verdict", certify::to_string(cert.verdict)},
        {"runs", runs},
        {"reproduced", res.reproduced},
    };

    std::ostringstream t;
    t << "| quantity | value |\n|---|---|\n";
    t << "| epsilon | " << fmt17(epsilon(p)) << " |\n";
    t << "| k_design | " << fmt17(k_design(p)) << " |\n";
    t << "| relaxed threshold | " << fmt17(relaxed_t) << " |\n";
    t << "| strict threshold | " << fmt17(strict_t) << " |\n";
    t << "| C_g | " << fmt17(p.c) << " |\n";
    for (const auto& r : runs) {
        const double k = r["k"].get<double>();
        t << "| N diagonal, k = " << gain_tag(k) << " | (" << fmt17(r["N_diag"][0].get<double>())
          << ", " << fmt17(r["N_diag"][1].get<double>()) << ") |\n";
        t << "| final/initial norm, k = " << gain_tag(k) << " | "
          << fmt17(r["final_over_initial"].get<double>()) << " |\n";
    }
    t << "| verdict (" << certify::to_string(options.mode) << ", k = " << gain_tag(k_demo)
      << ") | " << certify::to_string(cert.verdict) << " |\n";
    if (options.mode == certify::Mode::strict) {
        t << "\nThe strict interior bound " << fmt17(strict_t) << " is a factor "
          << fmt17(relaxed_t / strict_t) << " below the relaxed bound " << fmt17(relaxed_t)
          << "; C_g = " << fmt17(p.c) << " misses it by " << fmt17(-cert.strict.margin)
          << ", so the strict check rejects the system.\n";
    }
    res.table = t.str();
    write_json(path("summary.json"), res.summary);
    report::write_text(path("summary.md"), res.table);
    return res;
}

}  // namespace hyperstab::two_component
