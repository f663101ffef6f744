#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "misim/config.hpp"
#include "misim/errors.hpp"
#include "misim/experiment.hpp"
#include "misim/sim.hpp"
#include "misim/table.hpp"

namespace {

void print_run_summary(const misim::RunSummary& s) {
    std::printf("%s  seed=%llu  final_success=%.4f  peak=%.4f  mean_mask=%.4f"
                "  mean_clip=%.4f  resets=%d  max_gap=%d  drops=%d\n",
                s.id.c_str(), static_cast<unsigned long long>(s.seed),
                s.final_task_success, s.peak_task_success, s.mean_mask_fraction,
                s.mean_clip_fraction, s.reset_count, s.max_observed_gap, s.drops);
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            long long seed_override) {
    misim::RunConfig rc = misim::load_run_config(config_path);
    if (seed_override >= 0) rc.sim.seed = static_cast<std::uint64_t>(seed_override);

    if (!out_dir.empty()) {
        misim::ExperimentSpec spec;
        spec.name = "run";
        spec.base = misim::to_json(rc);
        spec.repeats = 1;
        spec.outputs = out_dir;
        const misim::ExperimentResult r = misim::run_experiment(spec, 1);
        if (r.failed > 0) {
            std::fprintf(stderr, "run failed: %s\n", r.runs[0].error.c_str());
            return 2;
        }
        print_run_summary(r.runs[0]);
        std::printf("metrics: %s\n",
                    (spec.outputs / r.runs[0].metrics_file).string().c_str());
        return 0;
    }

    const misim::SimResult res = misim::run_simulation(rc.sim, rc.task, rc.disc);
    double mean_rho = 0.0, min_rho = 1.0, mean_clip = 0.0, peak = 0.0;
    for (const misim::StepMetrics& m : res.metrics) {
        mean_rho += m.mask_fraction;
        min_rho = std::min(min_rho, m.mask_fraction);
        mean_clip += m.ppo_clip_fraction;
        peak = std::max(peak, m.task_success);
    }
    const double n = res.metrics.empty() ? 1.0 : static_cast<double>(res.metrics.size());
    std::printf("steps=%zu  final_success=%.4f  peak=%.4f  mean_mask=%.4f  min_mask=%.4f"
                "  mean_clip=%.4f  resets=%d  max_gap=%d  drops=%zu  wall_cost=%.2f\n",
                res.metrics.size(),
                res.metrics.empty() ? 0.0 : res.metrics.back().task_success, peak,
                mean_rho / n, min_rho, mean_clip / n, res.reset_count,
                res.max_observed_gap, res.drops.size(), res.total_cost.wall_time);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int jobs) {
    std::ifstream in(config_path);
    if (!in) throw misim::ConfigError("cannot open spec file " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw misim::ConfigError("spec parse error in " + config_path + ": " + e.what());
    }

    if (j.contains("mask_bounds") || j.contains("clip_bounds")) {
        misim::GridSpec spec = misim::parse_grid_spec(j);
        if (!out_dir.empty()) spec.outputs = out_dir;
        const misim::GridResult r = misim::threshold_grid(spec, jobs);
        std::printf("name\tfinal\tpeak\tmean_mask\tmean_clip\n");
        for (const misim::GridRow& row : r.rows)
            std::printf("%s\t%.4f\t%.4f\t%.4f\t%.4f\n", row.name.c_str(),
                        row.final_success, row.peak_success, row.mean_mask_fraction,
                        row.mean_clip_fraction);
        std::printf("results: %s\n", r.dir.string().c_str());
        return 0;
    }

    misim::ExperimentSpec spec = misim::parse_experiment_spec(j);
    if (!out_dir.empty()) spec.outputs = out_dir;
    const misim::ExperimentResult r = misim::run_experiment(spec, jobs);
    for (const misim::RunSummary& s : r.runs) {
        if (s.error.empty())
            print_run_summary(s);
        else
            std::printf("%s  FAILED: %s\n", s.id.c_str(), s.error.c_str());
    }
    std::printf("results: %s\n", r.dir.string().c_str());
    return r.failed > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale simulator for off-policy correction in asynchronous RL"};
    app.require_subcommand(1);

    std::string config_path, out_dir, results_dir;
    long long seed_override = -1;
    int jobs = 1;

    CLI::App* run = app.add_subcommand("run", "simulate one config");
    run->add_option("--config", config_path, "run config (JSON)")->required();
    run->add_option("--out", out_dir, "write metrics + manifest here");
    run->add_option("--seed", seed_override, "override the config seed");

    CLI::App* sweep =
        app.add_subcommand("sweep", "run an experiment spec or threshold grid");
    sweep->add_option("--config", config_path, "experiment/grid spec (JSON)")->required();
    sweep->add_option("--out", out_dir, "override the spec's output directory");
    sweep->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

    CLI::App* report = app.add_subcommand("report", "emit plot-ready series + summary");
    report->add_option("dir", results_dir, "results directory with manifest.json")
        ->required();
    report->add_option("--out", out_dir, "report output directory (default: <dir>/report)");

    CLI::App* validate =
        app.add_subcommand("validate-config", "parse and validate a run config");
    validate->add_option("--config", config_path, "run config (JSON)")->required();

    app.add_subcommand("table4", "print the effective-threshold table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed_override);
        if (sweep->parsed()) return cmd_sweep(config_path, out_dir, jobs);
        if (report->parsed()) {
            const std::filesystem::path dir = results_dir;
            const std::filesystem::path out =
                out_dir.empty() ? dir / "report" : std::filesystem::path(out_dir);
            misim::emit_report(dir, out);
            std::printf("report: %s\n", out.string().c_str());
            return 0;
        }
        if (validate->parsed()) {
            misim::load_run_config(config_path);
            std::printf("ok\n");
            return 0;
        }
        // table4
        std::fputs(misim::render_threshold_table(misim::build_threshold_table()).c_str(),
                   stdout);
        return 0;
    } catch (const misim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
