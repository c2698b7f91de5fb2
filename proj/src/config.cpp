#include "smpkit/config.hpp"

#include <fstream>
#include <set>

#include "smpkit/errors.hpp"

namespace smpkit {

std::string command_name(Command command) {
    switch (command) {
        case Command::simulate: return "simulate";
        case Command::solve_adjoint: return "solve-adjoint";
        case Command::check_smp: return "check-smp";
        case Command::run_example_cmd: return "run-example";
        case Command::validate: return "validate";
    }
    return "unknown";
}

namespace {

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : object.items()) {
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

Command parse_command(const std::string& name) {
    if (name == "simulate") return Command::simulate;
    if (name == "solve-adjoint") return Command::solve_adjoint;
    if (name == "check-smp") return Command::check_smp;
    if (name == "run-example") return Command::run_example_cmd;
    if (name == "validate") return Command::validate;
    throw ConfigError("unknown command '" + name +
                      "' (expected simulate, solve-adjoint, check-smp, run-example, validate)");
}

int require_positive_int(const json& value, const std::string& key) {
    if (!value.is_number_integer() || value.get<long long>() < 1)
        throw ConfigError("'" + key + "' must be an integer >= 1");
    return value.get<int>();
}

double require_positive(const json& value, const std::string& key) {
    if (!value.is_number() || !(value.get<double>() > 0.0))
        throw ConfigError("'" + key + "' must be a positive number");
    return value.get<double>();
}

} // namespace

RunConfig parse_config(const json& document) {
    reject_unknown_keys(document,
                        {"command", "problem", "control", "numerics", "seed", "threads",
                         "output", "formats"},
                        "config");
    RunConfig config;
    if (!document.contains("command"))
        throw ConfigError("config is missing required key 'command'");
    config.command = parse_command(document.at("command").get<std::string>());

    if (!document.contains("problem"))
        throw ConfigError("config is missing required key 'problem'");
    const json& problem = document.at("problem");
    if (problem.is_string()) {
        const auto id = parse_example_id(problem.get<std::string>());
        if (!id)
            throw ConfigError("unknown example id '" + problem.get<std::string>() +
                              "' (expected concave_41, nonsmooth_42, quadratic_loss_43, "
                              "nonconcave_44)");
        config.problem.example = *id;
    } else if (problem.is_object()) {
        config.problem.inline_problem = problem;
        parse_inline_problem(problem); // validate now, fail early
    } else {
        throw ConfigError("'problem' must be an example id string or an inline object");
    }

    if (document.contains("control")) {
        const json& control = document.at("control");
        if (control.is_string()) {
            config.control.candidate = control.get<std::string>();
        } else if (control.is_object()) {
            reject_unknown_keys(control, {"constant"}, "control");
            if (!control.contains("constant"))
                throw ConfigError("inline control needs a 'constant' value");
            config.control.constant = control.at("constant").get<double>();
        } else {
            throw ConfigError("'control' must be a candidate name or {\"constant\": value}");
        }
    }

    if (document.contains("numerics")) {
        const json& numerics = document.at("numerics");
        reject_unknown_keys(numerics,
                            {"steps", "paths", "ode_step", "picard_iters", "tol_stat", "tol_ode"},
                            "numerics");
        if (numerics.contains("steps"))
            config.numerics.steps = require_positive_int(numerics.at("steps"), "steps");
        if (numerics.contains("paths"))
            config.numerics.paths = require_positive_int(numerics.at("paths"), "paths");
        if (numerics.contains("ode_step"))
            config.numerics.ode_step = require_positive(numerics.at("ode_step"), "ode_step");
        if (numerics.contains("picard_iters"))
            config.numerics.picard_iters =
                require_positive_int(numerics.at("picard_iters"), "picard_iters");
        if (numerics.contains("tol_stat")) {
            const json& tol = numerics.at("tol_stat");
            if (tol.is_string()) {
                if (tol.get<std::string>() != "auto")
                    throw ConfigError("'tol_stat' must be a positive number or \"auto\"");
                config.numerics.tol_auto = true;
            } else {
                config.numerics.tol_stat = require_positive(tol, "tol_stat");
                config.numerics.tol_auto = false;
            }
        }
        if (numerics.contains("tol_ode"))
            config.numerics.tol_ode = require_positive(numerics.at("tol_ode"), "tol_ode");
    }

    if (document.contains("seed")) {
        if (!document.at("seed").is_number_integer())
            throw ConfigError("'seed' must be an integer");
        config.seed = document.at("seed").get<std::uint64_t>();
    }
    if (document.contains("threads"))
        config.threads = require_positive_int(document.at("threads"), "threads");
    if (document.contains("output")) config.output_dir = document.at("output").get<std::string>();
    if (document.contains("formats")) {
        config.format_json = false;
        config.format_csv = false;
        for (const auto& fmt : document.at("formats")) {
            const std::string name = fmt.get<std::string>();
            if (name == "json")
                config.format_json = true;
            else if (name == "csv")
                config.format_csv = true;
            else
                throw ConfigError("unknown format '" + name + "' (expected json or csv)");
        }
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json document;
    try {
        in >> document;
    } catch (const json::parse_error& err) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + err.what());
    }
    return parse_config(document);
}

json to_json(const RunConfig& config) {
    json out;
    out["command"] = command_name(config.command);
    if (config.problem.example)
        out["problem"] = example_id_name(*config.problem.example);
    else
        out["problem"] = config.problem.inline_problem;
    if (config.control.candidate)
        out["control"] = *config.control.candidate;
    else if (config.control.constant)
        out["control"] = json{{"constant", *config.control.constant}};
    json numerics;
    numerics["steps"] = config.numerics.steps;
    numerics["paths"] = config.numerics.paths;
    numerics["ode_step"] = config.numerics.ode_step;
    numerics["picard_iters"] = config.numerics.picard_iters;
    if (config.numerics.tol_auto)
        numerics["tol_stat"] = "auto";
    else
        numerics["tol_stat"] = config.numerics.tol_stat;
    numerics["tol_ode"] = config.numerics.tol_ode;
    out["numerics"] = std::move(numerics);
    out["seed"] = config.seed;
    out["threads"] = config.threads;
    if (!config.output_dir.empty()) out["output"] = config.output_dir;
    json formats = json::array();
    if (config.format_json) formats.push_back("json");
    if (config.format_csv) formats.push_back("csv");
    out["formats"] = std::move(formats);
    return out;
}

namespace {

ScalarAffineQuadratic parse_terms(const json& object, const std::string& where,
                                  const std::set<std::string>& allowed) {
    reject_unknown_keys(object, allowed, where);
    ScalarAffineQuadratic terms;
    auto get = [&object](const char* key) {
        return object.contains(key) ? object.at(key).get<double>() : 0.0;
    };
    terms.c0 = get("const");
    terms.cx = get("x");
    terms.cu = get("u");
    terms.cxx = get("xx");
    terms.cuu = get("uu");
    terms.cabs = get("abs_u");
    return terms;
}

} // namespace

ProblemSpec parse_inline_problem(const json& document) {
    reject_unknown_keys(document,
                        {"horizon", "x0", "initial_regime", "generator", "control_box",
                         "regimes"},
                        "problem");
    for (const char* key : {"horizon", "x0", "generator", "control_box", "regimes"})
        if (!document.contains(key))
            throw ConfigError(std::string("inline problem is missing key '") + key + "'");

    const double horizon = require_positive(document.at("horizon"), "horizon");
    const double x0 = document.at("x0").get<double>();
    const int initial_regime =
        document.contains("initial_regime") ? document.at("initial_regime").get<int>() : 0;

    const json& gen = document.at("generator");
    if (!gen.is_array() || gen.empty()) throw ConfigError("'generator' must be a square matrix");
    const int d = static_cast<int>(gen.size());
    Eigen::MatrixXd rates(d, d);
    for (int i = 0; i < d; ++i) {
        if (!gen.at(i).is_array() || static_cast<int>(gen.at(i).size()) != d)
            throw ConfigError("'generator' must be a square matrix");
        for (int j = 0; j < d; ++j) rates(i, j) = gen.at(i).at(j).get<double>();
    }
    GeneratorMatrix generator(rates);
    if (initial_regime < 0 || initial_regime >= d)
        throw ConfigError("'initial_regime' outside the generator's state range");

    const json& box = document.at("control_box");
    if (!box.is_array() || box.size() != 1 || !box.at(0).is_array() || box.at(0).size() != 2)
        throw ConfigError("'control_box' must be [[lower, upper]] for the scalar control");
    const double lo = box.at(0).at(0).is_null() ? -std::numeric_limits<double>::infinity()
                                                : box.at(0).at(0).get<double>();
    const double hi = box.at(0).at(1).is_null() ? std::numeric_limits<double>::infinity()
                                                : box.at(0).at(1).get<double>();

    const json& regimes = document.at("regimes");
    if (!regimes.is_array() || static_cast<int>(regimes.size()) != d)
        throw ConfigError("'regimes' must list one coefficient block per generator state");
    std::vector<ScalarRegimeCoefficients> blocks(d);
    for (int i = 0; i < d; ++i) {
        const json& block = regimes.at(i);
        reject_unknown_keys(block, {"drift", "diffusion", "running_cost", "terminal_cost"},
                            "regimes[" + std::to_string(i) + "]");
        if (block.contains("drift"))
            blocks[i].drift = parse_terms(block.at("drift"), "drift", {"const", "x", "u"});
        if (block.contains("diffusion"))
            blocks[i].diffusion =
                parse_terms(block.at("diffusion"), "diffusion", {"const", "x", "u", "abs_u"});
        if (block.contains("running_cost"))
            blocks[i].running_cost = parse_terms(block.at("running_cost"), "running_cost",
                                                 {"const", "x", "u", "xx", "uu", "abs_u"});
        if (block.contains("terminal_cost"))
            blocks[i].terminal_cost =
                parse_terms(block.at("terminal_cost"), "terminal_cost", {"const", "x", "xx"});
    }
    return make_scalar_problem(generator, horizon, x0, initial_regime,
                               ConvexBox::scalar(lo, hi), std::move(blocks));
}

ExampleCase materialize_problem(const ProblemSource& source) {
    if (source.example) return build_example(*source.example);
    ExampleCase out;
    out.name = "inline";
    out.spec = parse_inline_problem(source.inline_problem);
    return out;
}

} // namespace smpkit
