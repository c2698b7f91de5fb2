#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smpkit/examples.hpp"

namespace smpkit {

enum class Command { simulate, solve_adjoint, check_smp, run_example_cmd, validate };

std::string command_name(Command command);

/// Where the problem comes from: a built-in example id or an inline scalar
/// problem description.
struct ProblemSource {
    std::optional<ExampleId> example;
    json inline_problem; // null unless inline
};

/// Control selection: a named example candidate or a constant value.
struct ControlSource {
    std::optional<std::string> candidate;
    std::optional<double> constant;
};

struct Numerics {
    int steps = 200;
    int paths = 10000;
    double ode_step = 1e-3;
    int picard_iters = 20;
    double tol_stat = 1e-9;
    bool tol_auto = true; // "auto": 1e-9 for analytic adjoints, propagated for regression
    double tol_ode = 1e-8;
};

struct RunConfig {
    Command command = Command::run_example_cmd;
    ProblemSource problem;
    ControlSource control;
    Numerics numerics;
    std::uint64_t seed = 42;
    int threads = 1;
    std::string output_dir; // empty: no artifacts
    bool format_json = true;
    bool format_csv = false;
};

/// Parses and validates a config document. Unknown keys anywhere are an
/// error naming the key; missing keys get documented defaults.
RunConfig parse_config(const json& document);
RunConfig parse_config_file(const std::string& path);

/// Inverse of parse_config up to default filling: parse(to_json(c)) == c.
json to_json(const RunConfig& config);

/// Builds the problem (and candidate controls where the source is an
/// example). For inline problems the returned case has the inline spec, no
/// candidates and no reference objects.
ExampleCase materialize_problem(const ProblemSource& source);

/// Builds a scalar problem from the inline JSON description.
ProblemSpec parse_inline_problem(const json& document);

} // namespace smpkit
