#include "smpkit/execute.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "smpkit/errors.hpp"
#include "smpkit/report.hpp"

namespace smpkit {

namespace {

struct Artifact {
    std::string filename;
    std::string content;
};

RunNumerics to_run_numerics(const RunConfig& config) {
    RunNumerics nn;
    nn.steps = config.numerics.steps;
    nn.paths = config.numerics.paths;
    nn.ode_step = config.numerics.ode_step;
    nn.picard_iters = config.numerics.picard_iters;
    nn.tol_stat = config.numerics.tol_stat;
    nn.tol_auto = config.numerics.tol_auto;
    nn.tol_ode = config.numerics.tol_ode;
    nn.threads = config.threads;
    return nn;
}

ControlSpec select_control(const ExampleCase& example, const RunConfig& config) {
    if (config.control.constant) return ControlSpec::constant("constant", *config.control.constant);
    if (config.control.candidate) {
        if (!config.problem.example)
            throw ConfigError("named candidate controls require an example problem");
        return example.candidate(*config.control.candidate);
    }
    if (config.problem.example) {
        const std::string fallback =
            example.optimal_candidate.empty() ? example.candidates.front().name
                                              : example.optimal_candidate;
        return example.candidate(fallback);
    }
    throw ConfigError("inline problems need a 'control' entry for this command");
}

json z_cross_section_means(const AdjointSolution& solution) {
    json out = json::array();
    const int steps = static_cast<int>(solution.z.size());
    for (int j = 0; j < steps; ++j) out.push_back(solution.z[j].col(0).mean());
    return out;
}

struct DispatchOutcome {
    json results;
    int exit_code = 0;
    std::vector<Artifact> artifacts;
};

DispatchOutcome dispatch(const RunConfig& config) {
    DispatchOutcome outcome;
    const ExampleCase example = materialize_problem(config.problem);
    const ProblemSpec& spec = example.spec;
    const RunNumerics nn = to_run_numerics(config);

    switch (config.command) {
        case Command::run_example_cmd: {
            if (!config.problem.example)
                throw ConfigError("run-example needs a built-in example id");
            outcome.results = run_example(example, nn, config.seed);
            outcome.exit_code = outcome.results.at("all_pass").get<bool>() ? 0 : 1;
            if (config.format_csv && example.has_ansatz) {
                std::ostringstream csv;
                write_ansatz_csv(csv, *example.phi,
                                 example.has_psi ? &*example.psi : nullptr);
                outcome.artifacts.push_back({"ansatz.csv", csv.str()});
            }
            break;
        }
        case Command::simulate: {
            const ControlSpec control = select_control(example, config);
            const SimOptions options{nn.steps, nn.paths, config.seed, config.threads, 1e8};
            const CostEstimate cost = estimate_cost_streaming(spec, control, options);
            outcome.results = json{{"control", control.name},
                                   {"steps", nn.steps},
                                   {"paths", nn.paths},
                                   {"cost", to_json(cost)}};
            if (config.format_csv) {
                SimOptions small = options;
                small.paths = std::min(options.paths, 100);
                const PathBundle bundle = simulate_forward(spec, control, small);
                std::ostringstream paths_csv, chain_csv;
                write_paths_csv(paths_csv, bundle);
                write_chain_csv(chain_csv, bundle);
                outcome.artifacts.push_back({"paths.csv", paths_csv.str()});
                outcome.artifacts.push_back({"chain.csv", chain_csv.str()});
            }
            break;
        }
        case Command::solve_adjoint: {
            const ControlSpec control = select_control(example, config);
            SimOptions options{nn.steps, std::min(nn.paths, 10000), config.seed, config.threads,
                               1e8};
            const PathBundle bundle = simulate_forward(spec, control, options);
            BsdeOptions bsde_options;
            bsde_options.picard_iters = nn.picard_iters;
            auto solution = std::make_shared<const AdjointSolution>(
                solve_bsde_backward(adjoint_bsde_for(spec), bundle, bsde_options));
            json results{{"control", control.name},
                         {"paths", options.paths},
                         {"steps", options.steps},
                         {"y0_mean", solution->y[0].col(0).mean()},
                         {"z_step_means", z_cross_section_means(*solution)},
                         {"picard_deltas", solution->picard_deltas}};
            if (example.has_ansatz) {
                results["curves"] = json{{"phi", ansatz_curve_json(*example.phi)}};
                if (example.has_psi)
                    results["curves"]["psi"] = ansatz_curve_json(*example.psi);
            }
            outcome.results = std::move(results);
            if (config.format_csv) {
                const AdjointValues values = adjoint_values_from_solution(
                    solution, bundle, spec.state_dim, spec.brownian_dim);
                std::ostringstream adjoint_csv;
                write_adjoint_csv(adjoint_csv, bundle, values, spec.state_dim,
                                  spec.brownian_dim);
                outcome.artifacts.push_back({"adjoint.csv", adjoint_csv.str()});
                if (example.has_ansatz) {
                    std::ostringstream ansatz_csv;
                    write_ansatz_csv(ansatz_csv, *example.phi,
                                     example.has_psi ? &*example.psi : nullptr);
                    outcome.artifacts.push_back({"ansatz.csv", ansatz_csv.str()});
                }
            }
            break;
        }
        case Command::check_smp: {
            const ControlSpec control = select_control(example, config);
            const SimOptions options{nn.steps, std::min(nn.paths, 5000), config.seed,
                                     config.threads, 1e8};
            const PathBundle bundle = simulate_forward(spec, control, options);

            AdjointValues adjoint;
            std::string adjoint_source;
            if (example.adjoint_builders.count(control.name)) {
                adjoint = example.analytic_adjoint(control.name, bundle);
                adjoint_source = "analytic";
            } else {
                BsdeOptions bsde_options;
                bsde_options.picard_iters = nn.picard_iters;
                auto solution = std::make_shared<const AdjointSolution>(
                    solve_bsde_backward(adjoint_bsde_for(spec), bundle, bsde_options));
                adjoint = adjoint_values_from_solution(solution, bundle, spec.state_dim,
                                                       spec.brownian_dim);
                adjoint_source = "regression";
            }

            NecessaryOptions nec;
            nec.tol = nn.tol_auto ? 1e-9 : nn.tol_stat;
            nec.propagate_adjoint_error = nn.tol_auto || adjoint_source == "regression";
            const HamiltonianSpec hamiltonian = example.hamiltonian();
            const StationarityReport report =
                check_necessary(spec, hamiltonian, adjoint, bundle, nec);
            const SufficiencyReport sufficiency =
                check_sufficient(spec, hamiltonian, adjoint, bundle, 500, config.seed + 1);
            outcome.results = json{{"control", control.name},
                                   {"adjoint_source", adjoint_source},
                                   {"necessary", to_json(report)},
                                   {"sufficient", to_json(sufficiency)}};
            outcome.exit_code = report.all_pass ? 0 : 1;
            break;
        }
        case Command::validate: {
            const ValidationReport report = validate_problem(spec, 500, config.seed);
            outcome.results = json{{"problem", example.name}, {"validation", to_json(report)}};
            outcome.exit_code = report.ok() ? 0 : 2;
            break;
        }
    }
    return outcome;
}

void write_artifacts(const RunConfig& config, const json& report,
                     const std::vector<Artifact>& artifacts) {
    if (config.output_dir.empty()) return;
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    if (config.format_json) {
        std::ofstream out(fs::path(config.output_dir) / "report.json");
        out << report.dump(2) << "\n";
    }
    for (const auto& artifact : artifacts) {
        std::ofstream out(fs::path(config.output_dir) / artifact.filename);
        out << artifact.content;
    }
}

void write_failure_marker(const RunConfig& config, const std::string& message) {
    if (config.output_dir.empty()) return;
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    std::ofstream out(fs::path(config.output_dir) / "FAILED");
    out << message << "\n";
}

} // namespace

ExecutionResult execute(const RunConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    json report;
    report["schema_version"] = "smp-kit/1";
    report["command"] = command_name(config.command);
    report["config"] = to_json(config);
    try {
        DispatchOutcome outcome = dispatch(config);
        report["results"] = std::move(outcome.results);
        report["timing_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
        write_artifacts(config, report, outcome.artifacts);
        return {std::move(report), outcome.exit_code};
    } catch (const std::exception& error) {
        report["error"] = error.what();
        report["timing_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - started)
                                  .count();
        write_failure_marker(config, error.what());
        return {std::move(report), 2};
    }
}

std::string summary_table(const json& report) {
    std::ostringstream out;
    out << std::left;
    if (report.contains("error")) {
        out << "ERROR  " << report.at("error").get<std::string>() << "\n";
        return out.str();
    }
    const json& results = report.at("results");
    if (results.contains("checks")) {
        for (const auto& check : results.at("checks")) {
            out << std::setw(34) << check.at("name").get<std::string>()
                << (check.at("pass").get<bool>() ? "PASS" : "FAIL") << "\n";
        }
        out << std::setw(34) << "overall"
            << (results.at("all_pass").get<bool>() ? "PASS" : "FAIL") << "\n";
    } else if (results.contains("necessary")) {
        const json& necessary = results.at("necessary");
        out << std::setw(34) << "stationarity"
            << (necessary.at("all_pass").get<bool>() ? "PASS" : "FAIL") << "  pass_fraction="
            << necessary.at("pass_fraction").get<double>()
            << "  max_violation=" << necessary.at("max_violation").get<double>() << "\n";
        if (results.contains("sufficient"))
            out << std::setw(34) << "sufficiency"
                << (results.at("sufficient").at("verdict").get<bool>() ? "PASS" : "FAIL")
                << "\n";
    } else if (results.contains("validation")) {
        out << std::setw(34) << "validation"
            << (results.at("validation").at("ok").get<bool>() ? "PASS" : "FAIL") << "\n";
    } else if (results.contains("cost")) {
        out << std::setw(34) << "cost"
            << results.at("cost").at("mean").get<double>() << " +/- "
            << results.at("cost").at("std_error").get<double>() << "\n";
    }
    return out.str();
}

} // namespace smpkit
