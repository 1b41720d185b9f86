#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hyperstab/two_component.hpp"
#include "hyperstab/report.hpp"
#include "hyperstab/synth.hpp"

using namespace hyperstab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string data = HYPERSTAB_DATA_DIR;
const std::string schemas = HYPERSTAB_SCHEMA_DIR;

json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

/// Validator for the JSON Schema subset used by the bundled schemas.
class SchemaChecker {
public:
    explicit SchemaChecker(json root) : root_(std::move(root)) {}

    std::vector<std::string> errors(const json& v) {
        errors_.clear();
        check(root_, v, "$");
        return errors_;
    }

private:
    json root_;
    std::vector<std::string> errors_;

    static bool has_type(const json& v, const std::string& t) {
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "integer") return v.is_number_integer();
        if (t == "number") return v.is_number();
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        return false;
    }

    void check(const json& s, const json& v, const std::string& at) {
        if (s.contains("$ref")) {
            const std::string ref = s["$ref"];
            REQUIRE(ref.rfind("#/$defs/", 0) == 0);
            check(root_["$defs"][ref.substr(8)], v, at);
        }
        if (s.contains("type")) {
            bool ok = false;
            if (s["type"].is_array()) {
                for (const auto& t : s["type"]) ok |= has_type(v, t);
            } else {
                ok = has_type(v, s["type"]);
            }
            if (!ok) return fail(at, "type");
        }
        if (s.contains("const") && v != s["const"]) fail(at, "const");
        if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), v) == s["enum"].end())
            fail(at, "enum");
        if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>())
            fail(at, "minimum");
        if (s.contains("exclusiveMinimum") && v.is_number() &&
            v.get<double>() <= s["exclusiveMinimum"].get<double>())
            fail(at, "exclusiveMinimum");
        if (s.contains("oneOf")) {
            int matches = 0;
            for (const auto& alt : s["oneOf"]) {
                SchemaChecker sub(root_);
                sub.check(alt, v, at);
                matches += sub.errors_.empty();
            }
            if (matches != 1) fail(at, "oneOf");
        }
        if (v.is_object()) {
            for (const auto& key : s.value("required", json::array()))
                if (!v.contains(key.get<std::string>())) fail(at + "." + key.get<std::string>(), "required");
            const json props = s.value("properties", json::object());
            for (const auto& [key, val] : v.items()) {
                if (props.contains(key)) {
                    check(props[key], val, at + "." + key);
                } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
                    fail(at + "." + key, "additionalProperties");
                }
            }
        }
        if (v.is_array() && s.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], at + "[" + std::to_string(i) + "]");
    }

    void fail(const std::string& at, const std::string& rule) { errors_.push_back(at + ": " + rule); }
};

sim::Trajectory short_run() {
    const two_component::Parameters p;
    sim::SimOptions o;
    o.snapshot_times = {0.0, 0.25};
    o.output_samples = 50;
    return sim::simulate(two_component::system(p, 0.75), two_component::decay_initial_data(), 1.0, model::Grid(40, 1.0),
                         {}, std::nullopt, o);
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hyperstab_report_" + name);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("fmt17 round-trips doubles") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> e(-300, 300), m(-1, 1);
    for (int i = 0; i < 2000; ++i) {
        const double v = m(rng) * std::pow(10.0, e(rng));
        CHECK(std::strtod(report::fmt17(v).c_str(), nullptr) == v);
    }
    CHECK(std::strtod(report::fmt17(0.1).c_str(), nullptr) == 0.1);
}

TEST_CASE("trajectory CSV") {
    const auto tr = short_run();
    std::ostringstream out;
    report::write_trajectory_csv(out, tr);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == report::trajectory_header);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(row, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
        REQUIRE(v.size() == 5);
        CHECK(v[0] == tr.samples[rows].t);
        CHECK(v[1] == tr.samples[rows].l2_norm);
        CHECK(v[2] == tr.samples[rows].lyapunov_v);
        ++rows;
    }
    CHECK(rows == tr.samples.size());
}

TEST_CASE("snapshot files") {
    const auto tr = short_run();
    const auto dir = scratch("snap");
    const auto files = report::write_snapshots((dir / "snap").string(), tr);
    REQUIRE(files.size() == 2);
    std::ifstream in(files[1]);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,u_1,u_2");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 41);
    CHECK(files[1].find("_t0.25.csv") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("SVG plot") {
    const auto tr = short_run();
    const std::string svg = report::svg_plot({{"a", "blue", &tr}, {"b", "red", &tr}}, "norms");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::size_t polylines = 0;
    for (std::size_t at = 0; (at = svg.find("<polyline", at)) != std::string::npos; ++at) ++polylines;
    CHECK(polylines == 2);
    CHECK(svg.find("norms") != std::string::npos);
    CHECK(svg.find("http://") == svg.find("http://www.w3.org/2000/svg"));  // no external assets
}

TEST_CASE("certificates match the certificate schema") {
    SchemaChecker schema(read_json(schemas + "/certificate.schema.json"));
    const auto sd = model::load_system(data + "/damped_exchange.json");
    const auto wd = certify::load_weights(data + "/damped_exchange_weights.json", 2);
    const certify::LipschitzValue cg{0.05, certify::Provenance::certified};
    const two_component::Parameters p;
    std::vector<certify::Certificate> certs = {
        certify::certify(sd, wd, cg, certify::Mode::strict),
        certify::iss_gains(sd, wd, cg),
        certify::iss_gains(two_component::system(p, 0.75), two_component::reference_weights(p), two_component::lipschitz(p)),
        certify::certify(two_component::system(p, 0.75), two_component::reference_weights(p), two_component::lipschitz(p),
                         certify::Mode::relaxed),
        certify::certify(two_component::system(p, 0.0), two_component::reference_weights(p), two_component::lipschitz(p),
                         certify::Mode::strict),
    };
    for (const auto& c : certs) {
        const auto errs = schema.errors(certify::certificate_to_json(c));
        for (const auto& e : errs) FAIL_CHECK(e);
        CHECK(errs.empty());
    }
    // The checker itself rejects a broken document.
    json bad = certify::certificate_to_json(certs[0]);
    bad["verdict"] = "maybe";
    bad.erase("gain");
    CHECK(schema.errors(bad).size() == 2);
}

TEST_CASE("systems and weights match their schemas") {
    SchemaChecker sys(read_json(schemas + "/system.schema.json"));
    SchemaChecker wts(read_json(schemas + "/weights.schema.json"));
    for (const char* name : {"damped_exchange.json", "two_component.json", "infeasible.json"}) {
        CAPTURE(name);
        const json j = read_json(data + "/" + name);
        CHECK(sys.errors(j).empty());
        CHECK(sys.errors(model::system_to_json(model::system_from_json(j))).empty());
    }
    for (const char* name : {"damped_exchange_weights.json", "two_component_weights.json"}) {
        CAPTURE(name);
        CHECK(wts.errors(read_json(data + "/" + name)).empty());
    }
    const auto sd = model::load_system(data + "/damped_exchange.json");
    const auto r = synth::synthesize(sd, {0.05, certify::Provenance::certified}, certify::Mode::strict, {2, 3}, 1);
    CHECK(wts.errors(certify::weights_to_json(r.weights)).empty());

    json bad = read_json(data + "/damped_exchange.json");
    bad["extra"] = 1;
    bad["boundary"]["K"][0][1] = -1.0;
    CHECK(sys.errors(bad).size() == 2);
}
