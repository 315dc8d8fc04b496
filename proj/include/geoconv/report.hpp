#pragma once

// CSV artefacts of the ablation reports. Numbers are written with nine
// significant digits, so every value re-parses to the same float.

#include <filesystem>
#include <string>
#include <vector>

#include "geoconv/bench.hpp"

namespace geoconv {

std::string format_value(double v);

/// matrix.csv, normalized.csv, aggregates.csv, runs.csv and metadata.json in
/// `dir` (created if needed). Returns the written paths. Throws Error on IO
/// failure.
std::vector<std::filesystem::path> emit_report(const BenchReport& report, const std::filesystem::path& dir);
BenchReport read_report(const std::filesystem::path& dir);

/// greek.csv, greek_aggregates.csv, greek_runs.csv and greek_metadata.json.
std::vector<std::filesystem::path> emit_greek_report(const GreekReport& report, const std::filesystem::path& dir);
GreekReport read_greek_report(const std::filesystem::path& dir);

}  // namespace geoconv
