#pragma once

#include "smpkit/config.hpp"

namespace smpkit {

struct ExecutionResult {
    json report;   // schema_version / command / config / timing_ms / results (or error)
    int exit_code; // 0 checks pass, 1 check failures, 2 configuration or numerical errors
};

/// Runs one configured command end to end: builds the problem, dispatches to
/// the library, assembles the versioned report envelope and writes artifacts
/// to the output directory (report.json plus CSVs when requested). Failures
/// after partial output leave a FAILED marker file next to the artifacts.
/// The results payload is byte-reproducible for a fixed config, independent
/// of the thread count.
ExecutionResult execute(const RunConfig& config);

/// Aligned text summary of a report envelope (one line per check).
std::string summary_table(const json& report);

} // namespace smpkit
