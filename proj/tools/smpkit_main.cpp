#include <CLI11.hpp>
#include <iostream>

#include "smpkit/execute.hpp"

namespace {

struct CliFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> steps;
    std::optional<int> threads;
    std::string output;
    std::string formats;
    std::string problem;
    std::string control;
};

void apply_flags(smpkit::json& document, const CliFlags& flags) {
    if (!flags.problem.empty()) document["problem"] = flags.problem;
    if (!flags.control.empty()) document["control"] = flags.control;
    if (flags.seed) document["seed"] = *flags.seed;
    if (flags.threads) document["threads"] = *flags.threads;
    if (!flags.output.empty()) document["output"] = flags.output;
    if (flags.paths || flags.steps) {
        if (!document.contains("numerics")) document["numerics"] = smpkit::json::object();
        if (flags.paths) document["numerics"]["paths"] = *flags.paths;
        if (flags.steps) document["numerics"]["steps"] = *flags.steps;
    }
    if (!flags.formats.empty()) {
        smpkit::json list = smpkit::json::array();
        std::string token;
        std::istringstream stream(flags.formats);
        while (std::getline(stream, token, ',')) list.push_back(token);
        document["formats"] = std::move(list);
    }
}

int run(const smpkit::json& document) {
    smpkit::RunConfig config;
    try {
        config = smpkit::parse_config(document);
    } catch (const std::exception& error) {
        std::cerr << "config error: " << error.what() << "\n";
        return 2;
    }
    const smpkit::ExecutionResult result = smpkit::execute(config);
    const std::string table = smpkit::summary_table(result.report);
    if (!config.output_dir.empty()) {
        std::cout << table;
    } else {
        std::cerr << table;
        std::cout << result.report.dump(2) << "\n";
    }
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak stationarity checks for regime-switching diffusion control"};
    app.require_subcommand(1);

    CliFlags flags;
    app.add_option("--config", flags.config_path, "JSON config file");
    app.add_option("--seed", flags.seed, "master seed");
    app.add_option("--paths", flags.paths, "Monte Carlo paths");
    app.add_option("--steps", flags.steps, "time-grid steps");
    app.add_option("--threads", flags.threads, "worker threads");
    app.add_option("--output", flags.output, "artifact directory");
    app.add_option("--format", flags.formats, "comma-separated: json,csv");

    auto* simulate = app.add_subcommand("simulate", "simulate paths and estimate the cost");
    simulate->add_option("--problem", flags.problem, "example id");
    simulate->add_option("--control", flags.control, "candidate control name");

    auto* adjoint = app.add_subcommand("solve-adjoint", "solve the backward adjoint equation");
    adjoint->add_option("--problem", flags.problem, "example id");
    adjoint->add_option("--control", flags.control, "candidate control name");

    auto* check = app.add_subcommand("check-smp", "run the stationarity checker");
    check->add_option("--problem", flags.problem, "example id");
    check->add_option("--control", flags.control, "candidate control name");

    auto* run_example_cmd = app.add_subcommand("run-example", "full benchmark orchestration");
    std::string example_id;
    run_example_cmd->add_option("id", example_id, "example id")->required(false);

    auto* validate = app.add_subcommand("validate", "validate a config and its problem");
    std::string validate_path;
    validate->add_option("config", validate_path, "config file to validate")->required(false);

    CLI11_PARSE(app, argc, argv);

    smpkit::json document;
    const std::string config_source =
        (app.got_subcommand("validate") && !validate_path.empty()) ? validate_path
                                                                   : flags.config_path;
    if (!config_source.empty()) {
        std::ifstream in(config_source);
        if (!in) {
            std::cerr << "config error: cannot open '" << config_source << "'\n";
            return 2;
        }
        try {
            in >> document;
        } catch (const std::exception& error) {
            std::cerr << "config error: " << error.what() << "\n";
            return 2;
        }
    } else {
        document = smpkit::json::object();
    }

    if (app.got_subcommand("simulate")) document["command"] = "simulate";
    if (app.got_subcommand("solve-adjoint")) document["command"] = "solve-adjoint";
    if (app.got_subcommand("check-smp")) document["command"] = "check-smp";
    if (app.got_subcommand("run-example")) {
        document["command"] = "run-example";
        if (!example_id.empty()) document["problem"] = example_id;
    }
    if (app.got_subcommand("validate")) document["command"] = "validate";

    apply_flags(document, flags);
    (void)simulate;
    (void)adjoint;
    (void)check;
    return run(document);
}
