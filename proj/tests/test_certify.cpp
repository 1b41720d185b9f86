#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "hyperstab/certify.hpp"
#include "hyperstab/two_component.hpp"

using namespace hyperstab;
using certify::Mode;
using certify::Verdict;
using nlohmann::json;

namespace {

const std::string data = HYPERSTAB_DATA_DIR;

model::SystemSpec damped() { return model::load_system(data + "/damped_exchange.json"); }
certify::WeightSpec damped_weights() {
    return certify::load_weights(data + "/damped_exchange_weights.json", 2);
}
const certify::LipschitzValue cg_damped{0.05, certify::Provenance::certified};
const certify::LipschitzValue cg_ex5{0.25, certify::Provenance::certified};

/// Hand-evaluated damped-exchange quantities (J^2 = (e^{-x/2}, e^{x/2}),
/// Lambda = (1, -1), K_12 = K_21 = 1/4, C_g = 0.05, L = 1).
struct DampedOracle {
    double lambda_m = 0.5 * std::exp(-0.5);  // min of 0.5 e^{-x/2}, 0.5 e^{x/2}
    double max_j2 = std::exp(0.5);
    double threshold = lambda_m / (2.0 * max_j2);
    double rate = threshold - 0.05;
    double gain = std::exp(0.5);
    double n11 = std::exp(-0.5) - 0.0625 * std::exp(0.5);
    double n22 = 1.0 - 0.0625;
    double c11 = 0.0625 * std::exp(0.5);  // K^T diag(inflow) K with inflow = (1, e^{1/2})
    double c22 = 0.0625;
    double epsilon = std::min(n11 / c11, n22 / c22);
    double mu = lambda_m - 2.0 * 0.05 * max_j2;
    double C2 = gain * std::sqrt((2.0 / mu) * std::max(1.0, (mu / 2.0) * (1.0 + 1.0 / epsilon)));
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

certify::WeightSpec scaled(const certify::WeightSpec& w, double c) {
    json j = certify::weights_to_json(w);
    for (auto& e : j["J2"]) e = num(c) + "*(" + e.get<std::string>() + ")";
    return certify::weights_from_json(j, static_cast<int>(w.J2.size()));
}

model::SystemSpec with_K(const model::SystemSpec& s, const linalg::Matrix& K) {
    json j = model::system_to_json(s);
    json rows = json::array();
    for (std::size_t i = 0; i < K.order(); ++i) {
        json r = json::array();
        for (std::size_t k = 0; k < K.order(); ++k) r.push_back(K(i, k));
        rows.push_back(r);
    }
    j["boundary"]["K"] = rows;
    return model::system_from_json(j);
}

}  // namespace

TEST_CASE("interior matrix examples") {
    const two_component::Parameters p;
    const auto s = two_component::system(p, 0.75);
    const model::Grid g(64, 1.0);
    const auto w = two_component::reference_weights(p);
    auto f = model::sample_coefficients(s, g, w.J2, w.D);
    for (int j : {0, 17, 40, 64}) {
        const auto A = certify::interior_matrix(f, j);
        CHECK(A(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(A(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(A(0, 1) == 0.0);
    }

    const auto c = certify::weights_from_json({{"J2", {"2", "3"}}}, 2);
    f = model::sample_coefficients(s, g, c.J2, c.D);
    CHECK(certify::interior_matrix(f, 10).frobenius() <= 1e-12);

    const auto dw = damped_weights();
    f = model::sample_coefficients(damped(), model::Grid(512, 1.0), dw.J2, dw.D);
    const auto A = certify::interior_matrix(f, 0);
    CHECK(A(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(A(1, 1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("interior matrix with D = I and M = 0 is -(J^2 Lambda)'") {
    const auto s = damped();
    const auto w = certify::weights_from_json({{"J2", {"1 + x*x", "exp(x)*(2 + sin(x))"}}}, 2);
    const auto f = model::sample_coefficients(s, model::Grid(100, 1.0), w.J2, w.D);
    for (int j = 0; j <= 100; ++j) {
        const auto A = certify::interior_matrix(f, j);
        CHECK(A(0, 0) == -f.flux_derivative[0][j]);
        CHECK(A(1, 1) == -f.flux_derivative[1][j]);
        CHECK(A(0, 1) == 0.0);
    }
}

TEST_CASE("interior check on the two-component example") {
    const two_component::Parameters p;
    const auto w = two_component::reference_weights(p);
    const auto f = model::sample_coefficients(two_component::system(p, 0.75), model::Grid(512, 1.0), w.J2, w.D);
    const auto strict = certify::check_interior(f, 0.25, Mode::strict);
    CHECK(strict.lambda_m == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(strict.threshold == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK_FALSE(strict.pass);
    CHECK(strict.margin == doctest::Approx(1.0 / 7.0 - 0.25).epsilon(1e-12));
    const auto relaxed = certify::check_interior(f, 0.25, Mode::relaxed);
    CHECK(relaxed.threshold == doctest::Approx(1.0 / 3.5).epsilon(1e-12));
    CHECK(relaxed.pass);

    // Linear case: C_g = 0 passes whenever lambda_m > 0.
    CHECK(certify::check_interior(f, 0.0, Mode::strict).pass);
    CHECK(certify::check_interior(f, 0.0, Mode::relaxed).pass);
}

TEST_CASE("interior check on damped exchange") {
    const DampedOracle o;
    const auto w = damped_weights();
    const auto f = model::sample_coefficients(damped(), model::Grid(512, 1.0), w.J2, w.D);
    const auto c = certify::check_interior(f, 0.05, Mode::strict);
    CHECK(c.lambda_m == doctest::Approx(o.lambda_m).epsilon(1e-7));
    CHECK(c.max_DJ2 == doctest::Approx(o.max_j2).epsilon(1e-14));
    CHECK(std::abs(c.threshold - o.threshold) <= 1e-6);
    CHECK(std::abs(c.margin - o.rate) <= 1e-6);
    CHECK(c.pass);
}

TEST_CASE("boundary matrix") {
    const two_component::Parameters p;
    const auto w = two_component::reference_weights(p);
    for (double k : {0.0, 0.5, 0.75, two_component::k_design(p)}) {
        CAPTURE(k);
        const auto N = certify::boundary_matrix(two_component::system(p, k), w);
        CHECK(std::abs(N(0, 0) - (1.5 - 3.5 * (1 - k) * (1 - k))) <= 1e-12);
        CHECK(std::abs(N(1, 1)) <= 1e-12);
        CHECK(N(0, 1) == 0.0);
    }
    const auto N0 = certify::boundary_matrix(with_K(two_component::system(p, 0.75), linalg::Matrix(2)), w);
    CHECK(N0(0, 0) == doctest::Approx(1.5));
    CHECK(N0(1, 1) == doctest::Approx(2.5));
    CHECK(linalg::is_pd(N0));

    const DampedOracle o;
    const auto Nd = certify::boundary_matrix(damped(), damped_weights());
    CHECK(std::abs(Nd(0, 0) - o.n11) <= 1e-14);
    CHECK(std::abs(Nd(1, 1) - o.n22) <= 1e-14);
}

TEST_CASE("certify examples") {
    const two_component::Parameters p;
    const auto w = two_component::reference_weights(p);

    auto c = certify::certify(two_component::system(p, 0.75), w, cg_ex5, Mode::relaxed);
    CHECK(c.verdict == Verdict::certified_relaxed);
    CHECK_FALSE(c.decay_rate_norm.has_value());
    CHECK(c.gain == doctest::Approx(std::sqrt(3.5 / 1.5)).epsilon(1e-12));
    CHECK(c.assurance() == "certified");
    CHECK_FALSE(c.warnings.empty());  // relaxed bound on a nonlocal source

    c = certify::certify(two_component::system(p, 0.75), w, cg_ex5, Mode::strict);
    CHECK(c.verdict == Verdict::rejected);
    CHECK(std::abs(c.interior_margin - (1.0 / 7.0 - 0.25)) <= 1e-6);

    c = certify::certify(two_component::system(p, 0.0), w, cg_ex5, Mode::relaxed);
    CHECK(c.verdict == Verdict::rejected);
    CHECK(c.boundary_min_eig == doctest::Approx(-2.0).epsilon(1e-12));

    const DampedOracle o;
    c = certify::certify(damped(), damped_weights(), cg_damped, Mode::strict);
    CHECK(c.verdict == Verdict::certified_strict);
    REQUIRE(c.decay_rate_norm.has_value());
    CHECK(std::abs(*c.decay_rate_norm - o.rate) <= 1e-6);
    CHECK(std::abs(c.gain - o.gain) <= 1e-12);
    REQUIRE(c.lambda_m_refined.has_value());
    CHECK(std::abs(*c.lambda_m_refined - c.lambda_m) <= 1e-4);

    // A relaxed request still reports the stronger verdict when it holds.
    c = certify::certify(damped(), damped_weights(), cg_damped, Mode::relaxed);
    CHECK(c.verdict == Verdict::certified_strict);
    CHECK(c.decay_rate_norm.has_value());
}

TEST_CASE("ISS gains") {
    const DampedOracle o;
    const auto c = certify::iss_gains(damped(), damped_weights(), cg_damped);
    REQUIRE(c.iss.has_value());
    CHECK(c.kind == "iss");
    CHECK(std::abs(c.iss->epsilon - o.epsilon) <= 1e-4);
    CHECK(std::abs(c.iss->epsilon - 4.886071) <= 1e-4);
    CHECK(std::abs(c.iss->mu - o.mu) <= 1e-6);
    CHECK(std::abs(c.iss->C1 - 1.648721) <= 1e-5);
    CHECK(std::abs(c.iss->C2 - o.C2) <= 1e-4);
    CHECK(std::abs(c.iss->C2 - 6.268088) <= 1e-3);
    CHECK(c.iss->fading_rate == doctest::Approx(c.iss->mu / 2));
    CHECK(c.iss->norm_decay == doctest::Approx(c.iss->mu / 4));
    CHECK_FALSE(c.iss->epsilon_capped);

    const two_component::Parameters p;
    const auto r = certify::iss_gains(two_component::system(p, 0.75), two_component::reference_weights(p), cg_ex5);
    CHECK(r.verdict == Verdict::rejected);
    CHECK_FALSE(r.iss.has_value());
    bool explained = false;
    for (const auto& n : r.notes) explained |= n.find("not strictly positive definite") != std::string::npos;
    CHECK(explained);

    const auto k0 = certify::iss_gains(with_K(damped(), linalg::Matrix(2)), damped_weights(), cg_damped);
    REQUIRE(k0.iss.has_value());
    CHECK(k0.iss->epsilon_capped);
    CHECK(k0.iss->epsilon == certify::epsilon_cap);
    CHECK(std::isfinite(k0.iss->C2));
}

TEST_CASE("epsilon search on diagonal matrices") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int k = 0; k < 50; ++k) {
        const double a = u(rng), b = u(rng), ca = u(rng), cb = u(rng);
        const auto e = certify::largest_boundary_epsilon(linalg::SymMatrix::diagonal({a, b}),
                                                         linalg::SymMatrix::diagonal({ca, cb}));
        const double exact = std::min(a / ca, b / cb);
        CHECK(std::abs(e.epsilon - exact) <= 2e-6 * exact);
        CHECK(e.epsilon <= exact * (1 + 1e-9));
    }
}

TEST_CASE("verdicts are invariant under J^2 -> c J^2") {
    const two_component::Parameters p;
    struct Case {
        model::SystemSpec spec;
        certify::WeightSpec w;
        certify::LipschitzValue cg;
        Mode mode;
    };
    const std::vector<Case> cases = {
        {damped(), damped_weights(), cg_damped, Mode::strict},
        {two_component::system(p, 0.75), two_component::reference_weights(p), cg_ex5, Mode::relaxed},
        {two_component::system(p, 0.75), two_component::reference_weights(p), cg_ex5, Mode::strict},
        {two_component::system(p, 0.0), two_component::reference_weights(p), cg_ex5, Mode::relaxed},
    };
    for (const auto& c : cases) {
        const auto base = certify::certify(c.spec, c.w, c.cg, c.mode);
        for (double k : {1e-3, 1.0, 1e3}) {
            CAPTURE(k);
            const auto s = certify::certify(c.spec, scaled(c.w, k), c.cg, c.mode);
            CHECK(s.verdict == base.verdict);
            CHECK(s.strict.pass == base.strict.pass);
            CHECK(s.relaxed.pass == base.relaxed.pass);
            CHECK(s.boundary_psd == base.boundary_psd);
            CHECK(s.gain == doctest::Approx(base.gain).epsilon(1e-12));
            CHECK(s.decay_rate_norm.has_value() == base.decay_rate_norm.has_value());
            if (s.decay_rate_norm)
                CHECK(*s.decay_rate_norm == doctest::Approx(*base.decay_rate_norm).epsilon(1e-9));
        }
    }
}

TEST_CASE("decreasing C_g never turns a pass into a fail") {
    const auto w = damped_weights();
    const auto f = model::sample_coefficients(damped(), model::Grid(256, 1.0), w.J2, w.D);
    for (auto mode : {Mode::strict, Mode::relaxed}) {
        bool passed = false;
        for (double cg = 0.5; cg >= 0.0; cg -= 0.005) {
            const bool pass = certify::check_interior(f, cg, mode).pass;
            CHECK_FALSE((passed && !pass));
            passed = passed || pass;
        }
        CHECK(passed);
    }
}

TEST_CASE("increasing |K_ij| never turns a boundary fail into a pass") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.2), bump(0.0, 0.3);
    const auto base = damped();
    const auto w = damped_weights();
    for (int trial = 0; trial < 200; ++trial) {
        linalg::Matrix K(2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) K(i, j) = u(rng);
        const bool psd = linalg::is_psd(certify::boundary_matrix(with_K(base, K), w));
        linalg::Matrix K2 = K;
        K2(trial % 2, (trial / 2) % 2) += bump(rng);
        const auto N2 = certify::boundary_matrix(with_K(base, K2), w);
        if (!psd) CHECK_FALSE(linalg::is_psd(N2));
    }
}

TEST_CASE("certified verdicts carry consistent margins") {
    const two_component::Parameters p;
    std::vector<certify::Certificate> certs = {
        certify::certify(damped(), damped_weights(), cg_damped, Mode::strict),
        certify::certify(two_component::system(p, 0.5), two_component::reference_weights(p), cg_ex5, Mode::relaxed),
        certify::certify(two_component::system(p, two_component::k_design(p)), two_component::reference_weights(p), cg_ex5,
                         Mode::relaxed),
    };
    for (const auto& c : certs) {
        REQUIRE(c.certified());
        CHECK(c.interior_margin > 0.0);
        CHECK(c.boundary_psd);
        if (c.verdict == Verdict::certified_strict) {
            REQUIRE(c.decay_rate_norm.has_value());
            CHECK(*c.decay_rate_norm > 0.0);
        }
    }
}

TEST_CASE("lambda_m is grid-insensitive for the bundled systems") {
    const two_component::Parameters p;
    const std::vector<std::pair<model::SystemSpec, certify::WeightSpec>> cases = {
        {damped(), damped_weights()}, {two_component::system(p, 0.75), two_component::reference_weights(p)}};
    for (const auto& [s, w] : cases) {
        certify::CertifyOptions a, b;
        a.cells = 256;
        b.cells = 512;
        const auto ca = certify::certify(s, w, cg_damped, Mode::strict, a);
        const auto cb = certify::certify(s, w, cg_damped, Mode::strict, b);
        CHECK(std::abs(ca.lambda_m - cb.lambda_m) < 1e-4);
        CHECK(ca.verdict == cb.verdict);
        for (int cells : {64, 128}) {
            certify::CertifyOptions o;
            o.cells = cells;
            CHECK(certify::certify(s, w, cg_damped, Mode::strict, o).verdict == cb.verdict);
        }
    }
}

TEST_CASE("estimated Lipschitz constants make certificates heuristic") {
    json j = model::system_to_json(damped());
    j["source"]["C_B"] = "estimate";
    const auto s = model::system_from_json(j);
    const auto cg = certify::resolve_cg(s, 3);
    CHECK(cg.provenance == certify::Provenance::estimated);
    CHECK(cg.value <= 0.05 + 1e-12);
    CHECK(cg.value > 0.03);
    const auto c = certify::certify(s, damped_weights(), cg, Mode::strict);
    CHECK(c.assurance() == "heuristic");
    CHECK_FALSE(c.warnings.empty());

    CHECK(certify::resolve_cg(damped()).provenance == certify::Provenance::certified);
    CHECK(certify::resolve_cg(damped()).value == 0.05);

    // With a linear split, the constant of B - M u is estimated on request.
    j = model::system_to_json(damped());
    j["source"]["M"] = json::array({json::array({"0", "0.05"}), json::array({"0.05", "0"})});
    j["source"]["C_g"] = "estimate";
    const auto split = certify::resolve_cg(model::system_from_json(j), 3);
    CHECK(split.provenance == certify::Provenance::estimated);
    CHECK(split.value <= 0.1 + 1e-12);  // |0.05 (cos s - 1)| <= 0.1
    CHECK(split.value > 0.05);
}

TEST_CASE("weights files") {
    CHECK_THROWS_AS(certify::weights_from_json({{"D", {"1", "1"}}}, 2), model::ConfigError);
    CHECK_THROWS_AS(certify::weights_from_json({{"J2", {"1", "1"}}, {"M", nullptr}}, 2), model::ConfigError);
    CHECK_THROWS_AS(certify::weights_from_json({{"J2", {"1"}}}, 2), model::ConfigError);
    const auto w = certify::weights_from_json({{"J2", {"1", "2"}}}, 2);
    CHECK(w.D.size() == 2);
    CHECK(w.D[0].evaluate(expr::Scope{}) == 1.0);

    const auto neg = certify::weights_from_json({{"J2", {"1 - 2*x", "1"}}}, 2);
    CHECK_THROWS_AS(certify::certify(damped(), neg, cg_damped, Mode::strict), model::ConfigError);
}

TEST_CASE("certificate JSON") {
    const auto c = certify::iss_gains(damped(), damped_weights(), cg_damped);
    const json j = certify::certificate_to_json(c);
    for (const char* key : {"tool", "version", "system", "kind", "mode", "verdict", "assurance", "grid",
                            "lambda_m", "lambda_m_refined", "C_g", "interior", "interior_margin",
                            "boundary", "decay_rate_norm", "gain", "warnings", "notes", "iss"}) {
        CAPTURE(key);
        CHECK(j.contains(key));
    }
    CHECK(j["verdict"] == "certified-strict");
    CHECK(j["iss"]["C1"].get<double>() == doctest::Approx(std::exp(0.5)));
    CHECK(j["grid"]["cells"] == 512);
}
