#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "misim/config.hpp"

namespace misim {

struct SweepEntry {
    std::string path;  // dotted path into the run-config document
    std::vector<nlohmann::json> values;
};

struct ExperimentSpec {
    std::string name = "experiment";
    nlohmann::json base;  // full run-config document
    std::vector<SweepEntry> sweeps;
    int repeats = 1;  // distinct seeds: base seed + repeat index
    std::filesystem::path outputs;
};

ExperimentSpec parse_experiment_spec(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct RunSummary {
    std::string id;
    std::string metrics_file;  // relative to the result directory
    std::uint64_t seed = 0;
    int repeat = 0;
    nlohmann::json point;  // resolved sweep values, path -> value
    double final_task_success = 0.0;
    double peak_task_success = 0.0;
    double mean_mask_fraction = 0.0;
    double mean_clip_fraction = 0.0;
    int reset_count = 0;
    int max_observed_gap = 0;
    int drops = 0;
    std::string error;  // empty on success
};

struct ExperimentResult {
    std::filesystem::path dir;
    std::vector<RunSummary> runs;
    int failed = 0;
};

// Runs the sweep cartesian product x repeats. Each run is serial and fully
// seeded; `jobs` only parallelizes across runs, so it cannot change any
// output byte. Writes runs/<id>.jsonl per run plus manifest.json; rerunning
// the same spec reproduces every file byte for byte.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

struct GridSpec {
    std::string name = "grid";
    nlohmann::json base;
    std::vector<double> mask_bounds;  // multiplicative discrepancy thresholds, > 1
    std::vector<double> clip_bounds;  // staleness thresholds as 1 + eps
    int repeats = 1;
    std::filesystem::path outputs;
};

GridSpec parse_grid_spec(const nlohmann::json& j);

struct GridRow {
    std::string name;
    double mask_bound = 0.0;
    double clip_bound = 0.0;
    double final_success = 0.0;
    double peak_success = 0.0;
    double mean_mask_fraction = 0.0;
    double mean_clip_fraction = 0.0;
};

struct GridResult {
    std::filesystem::path dir;
    std::vector<GridRow> rows;
};

// mask x clip comparison table; rows named like snap1003_1006
GridResult threshold_grid(const GridSpec& spec, int jobs = 1);

std::string grid_cell_name(double mask_bound, double clip_bound);

// Per-signal time series (TSV), reset markers, and a text summary for every
// run listed in the directory's manifest.
void emit_report(const std::filesystem::path& results_dir,
                 const std::filesystem::path& out_dir);

// dotted-path patch; the path must already exist in the document
nlohmann::json apply_config_path(nlohmann::json doc, const std::string& dotted,
                                 const nlohmann::json& value);

void write_metrics_jsonl(const std::vector<StepMetrics>& metrics,
                         const std::filesystem::path& path);
std::vector<StepMetrics> read_metrics_jsonl(const std::filesystem::path& path);

std::string file_checksum_hex(const std::filesystem::path& path);

}  // namespace misim
