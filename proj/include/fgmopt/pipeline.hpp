#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fgmopt/config.hpp"

namespace fgmopt::cli {

/// One line of results.csv. `message` is empty except on error rows, whose
/// value field is left blank.
struct ResultRow {
    std::string experiment;
    std::string method;
    int d = 0;
    long n = 0;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
    std::string message;
};

/// "experiment,method,d,n,seed,metric,value,message"
const std::string& results_header();
/// Values print with %.17g; infinities as "inf" / "-inf".
std::string format_row(const ResultRow& row);

struct Cell {
    std::uint64_t seed = 0;
    std::string method;
};

/// Cells in execution order: seeds outer, methods inner.
std::vector<Cell> plan_cells(const RunConfig& config);
std::string describe_plan(const RunConfig& config);

/// Runs one (seed, method) cell. Any exception becomes a single "error" row.
/// When `trace_dir` is non-empty, ascent traces are written there.
std::vector<ResultRow> run_cell(const RunConfig& config, const Cell& cell,
                                const std::filesystem::path& trace_dir = {});

struct RunSummary {
    std::size_t cells = 0;
    std::size_t failed = 0;
};

/// Runs every cell on up to `workers` threads. Rows reach `results` in plan
/// order regardless of completion order; `timings` (optional) receives
/// "experiment,method,seed,seconds".
RunSummary run_pipeline(const RunConfig& config, std::ostream& results, int workers,
                        std::ostream* timings = nullptr,
                        const std::filesystem::path& trace_dir = {});

}  // namespace fgmopt::cli
