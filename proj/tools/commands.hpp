#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hyperstab/certify.hpp"

namespace hyperstab::cli {

enum ExitCode : int { certified = 0, rejected = 1, input_error = 2, blow_up = 3 };

struct Global {
    int grid = 0;  // 0: command default
    std::uint64_t seed = 0;
    std::string out;
    std::string mode = "strict";
    bool mode_given = false;
    bool json = false;
};

struct CheckArgs {
    std::string system;
    std::string weights;
    std::optional<double> cg;
};

struct SynthArgs {
    std::string system;
    int multistarts = 16;
    int iterations = 40;
    std::string trace;
    std::optional<double> cg;
};

struct SimArgs {
    std::string system;
    std::vector<std::string> initial;
    double T = 10.0;
    std::string weights;
    std::string disturbances;
    std::vector<std::string> d1;
    std::vector<std::string> d2;
    std::string svg;
    std::string snapshot_prefix;
    std::vector<double> snapshots;
    double cfl = 0.0;
    std::vector<double> fit_window;
};

struct IssArgs {
    std::string system;
    std::string weights;
    std::string disturbances;
    std::vector<std::string> d1;
    std::vector<std::string> d2;
    std::vector<std::string> initial;
    double T = 40.0;
    std::optional<double> cg;
};

struct ReproduceArgs {
    double T = 30.0;
};

struct SweepArgs {
    std::string template_path;
    std::string placeholder = "{p}";
    std::vector<std::string> values;
    std::string weights;
    std::vector<std::string> initial;
    double T = 10.0;
};

int cmd_check(const Global& g, const CheckArgs& a);
int cmd_synth(const Global& g, const SynthArgs& a);
int cmd_simulate(const Global& g, const SimArgs& a);
int cmd_iss(const Global& g, const IssArgs& a);
int cmd_reproduce_example(const Global& g, const ReproduceArgs& a);
int cmd_sweep(const Global& g, const SweepArgs& a);

}  // namespace hyperstab::cli
