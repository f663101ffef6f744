#include "misim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "misim/errors.hpp"

namespace misim {

using nlohmann::json;

namespace {

void require_object(const json& j, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string("spec: ") + what + " must be an object");
}

std::vector<std::string> split_path(const std::string& dotted) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : dotted) {
        if (ch == '.') {
            if (cur.empty()) throw ConfigError("bad config path '" + dotted + "'");
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (cur.empty()) throw ConfigError("bad config path '" + dotted + "'");
    parts.push_back(cur);
    return parts;
}

}  // namespace

json apply_config_path(json doc, const std::string& dotted, const json& value) {
    const std::vector<std::string> parts = split_path(dotted);
    json* node = &doc;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object() || !node->contains(parts[i]))
            throw ConfigError("sweep path '" + dotted + "' does not resolve against the config");
        node = &node->at(parts[i]);
    }
    if (!node->is_object() || !node->contains(parts.back()))
        throw ConfigError("sweep path '" + dotted + "' does not resolve against the config");
    (*node)[parts.back()] = value;
    return doc;
}

void write_metrics_jsonl(const std::vector<StepMetrics>& metrics,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics file " + path.string());
    for (const StepMetrics& m : metrics) {
        json j;
        j["step"] = m.step;
        j["task_success"] = m.task_success;
        j["mask_fraction"] = m.mask_fraction;
        j["ppo_clip_fraction"] = m.ppo_clip_fraction;
        j["mean_version_gap"] = m.mean_version_gap;
        j["reset_events"] = m.reset_events;
        j["low_mask_streak"] = m.low_mask_streak;
        j["mean_reward"] = m.mean_reward;
        j["batch_tokens"] = m.batch_tokens;
        j["active_tokens"] = m.active_tokens;
        j["max_gap"] = m.max_gap;
        j["cost_wall"] = m.cost.wall_time;
        out << j.dump() << "\n";
    }
}

namespace {

// per-step records plus one trailing summary record
void write_run_jsonl(const SimResult& res, const std::filesystem::path& path) {
    write_metrics_jsonl(res.metrics, path);
    std::ofstream out(path, std::ios::app);
    json s;
    s["final_task_success"] = res.metrics.empty() ? 0.0 : res.metrics.back().task_success;
    s["steps"] = res.metrics.size();
    s["max_observed_gap"] = res.max_observed_gap;
    s["reset_count"] = res.reset_count;
    s["drops"] = res.drops.size();
    s["total_wall_cost"] = res.total_cost.wall_time;
    s["total_bytes_stored"] = res.total_cost.bytes_stored;
    json j;
    j["summary"] = std::move(s);
    out << j.dump() << "\n";
}

}  // namespace

std::vector<StepMetrics> read_metrics_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing metrics file " + path.string());
    std::vector<StepMetrics> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("corrupt metrics line in " + path.string() + ": " +
                                     e.what());
        }
        if (j.contains("summary")) continue;
        StepMetrics m;
        m.step = j.at("step").get<int>();
        m.task_success = j.at("task_success").get<double>();
        m.mask_fraction = j.at("mask_fraction").get<double>();
        m.ppo_clip_fraction = j.at("ppo_clip_fraction").get<double>();
        m.mean_version_gap = j.at("mean_version_gap").get<double>();
        m.reset_events = j.at("reset_events").get<int>();
        m.low_mask_streak = j.at("low_mask_streak").get<int>();
        m.mean_reward = j.at("mean_reward").get<double>();
        m.batch_tokens = j.at("batch_tokens").get<int>();
        m.active_tokens = j.at("active_tokens").get<int>();
        m.max_gap = j.at("max_gap").get<int>();
        m.cost.wall_time = j.at("cost_wall").get<double>();
        out.push_back(m);
    }
    return out;
}

std::string file_checksum_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot checksum " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    const std::uint64_t h = fnv1a64(data.data(), data.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentSpec parse_experiment_spec(const json& j) {
    require_object(j, "<root>");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "name" && k != "base" && k != "sweeps" && k != "repeats" && k != "outputs")
            throw ConfigError("spec: unknown key '" + k + "'");
    }
    ExperimentSpec s;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw ConfigError("spec: name must be a string");
        s.name = j.at("name").get<std::string>();
    }
    if (!j.contains("base")) throw ConfigError("spec: missing base config");
    s.base = j.at("base");
    parse_run_config(s.base);  // fail fast on a bad base
    if (j.contains("sweeps")) {
        if (!j.at("sweeps").is_array()) throw ConfigError("spec: sweeps must be an array");
        for (const json& e : j.at("sweeps")) {
            require_object(e, "sweep entry");
            for (auto it = e.begin(); it != e.end(); ++it)
                if (it.key() != "path" && it.key() != "values")
                    throw ConfigError("spec: unknown key '" + it.key() + "' in sweep entry");
            if (!e.contains("path") || !e.at("path").is_string())
                throw ConfigError("spec: sweep entry needs a string path");
            if (!e.contains("values") || !e.at("values").is_array() ||
                e.at("values").empty())
                throw ConfigError("spec: sweep entry needs a nonempty values array");
            SweepEntry se;
            se.path = e.at("path").get<std::string>();
            for (const json& v : e.at("values")) se.values.push_back(v);
            apply_config_path(s.base, se.path, se.values.front());  // path must resolve
            s.sweeps.push_back(std::move(se));
        }
    }
    if (j.contains("repeats")) {
        if (!j.at("repeats").is_number_integer())
            throw ConfigError("spec: repeats must be an integer");
        s.repeats = j.at("repeats").get<int>();
    }
    if (s.repeats < 1) throw ConfigError("spec: repeats must be >= 1");
    if (j.contains("outputs")) {
        if (!j.at("outputs").is_string()) throw ConfigError("spec: outputs must be a string");
        s.outputs = j.at("outputs").get<std::string>();
    }
    return s;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("spec parse error in " + path.string() + ": " + e.what());
    }
    return parse_experiment_spec(j);
}

namespace {

struct PlannedRun {
    std::string id;
    json config_doc;
    json point;
    std::uint64_t seed = 0;
    int repeat = 0;
};

std::string value_slug(const json& v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    std::string out;
    for (char ch : s)
        out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : 'p');
    return out;
}

std::string leaf_of(const std::string& dotted) {
    const auto pos = dotted.rfind('.');
    return pos == std::string::npos ? dotted : dotted.substr(pos + 1);
}

std::vector<PlannedRun> plan_runs(const ExperimentSpec& spec) {
    std::vector<std::vector<std::size_t>> points;  // index per sweep
    std::vector<std::size_t> idx(spec.sweeps.size(), 0);
    while (true) {
        points.push_back(idx);
        std::size_t k = spec.sweeps.size();
        while (k > 0) {
            --k;
            if (++idx[k] < spec.sweeps[k].values.size()) break;
            idx[k] = 0;
            if (k == 0) {
                k = SIZE_MAX;
                break;
            }
        }
        if (spec.sweeps.empty() || k == SIZE_MAX) break;
    }
    std::vector<PlannedRun> runs;
    for (std::size_t p = 0; p < points.size(); ++p) {
        json doc = spec.base;
        json point = json::object();
        std::string slug;
        for (std::size_t s = 0; s < spec.sweeps.size(); ++s) {
            const json& v = spec.sweeps[s].values[points[p][s]];
            doc = apply_config_path(doc, spec.sweeps[s].path, v);
            point[spec.sweeps[s].path] = v;
            if (!slug.empty()) slug += "_";
            slug += leaf_of(spec.sweeps[s].path) + value_slug(v);
        }
        for (int r = 0; r < spec.repeats; ++r) {
            PlannedRun pr;
            pr.id = spec.name + "_p" + std::to_string(p);
            if (!slug.empty()) pr.id += "_" + slug;
            pr.id += "_r" + std::to_string(r);
            pr.config_doc = doc;
            pr.point = point;
            pr.repeat = r;
            runs.push_back(std::move(pr));
        }
    }
    return runs;
}

void summarize(RunSummary& s, const SimResult& res) {
    double rho = 0.0, clip = 0.0, peak = 0.0;
    for (const StepMetrics& m : res.metrics) {
        rho += m.mask_fraction;
        clip += m.ppo_clip_fraction;
        peak = std::max(peak, m.task_success);
    }
    const double n = static_cast<double>(res.metrics.size());
    s.final_task_success = res.metrics.empty() ? 0.0 : res.metrics.back().task_success;
    s.peak_task_success = peak;
    s.mean_mask_fraction = n > 0 ? rho / n : 0.0;
    s.mean_clip_fraction = n > 0 ? clip / n : 0.0;
    s.reset_count = res.reset_count;
    s.max_observed_gap = res.max_observed_gap;
    s.drops = static_cast<int>(res.drops.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
    if (spec.outputs.empty()) throw ConfigError("spec: missing outputs directory");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    std::filesystem::create_directories(spec.outputs / "runs");

    std::vector<PlannedRun> plan = plan_runs(spec);
    ExperimentResult result;
    result.dir = spec.outputs;
    result.runs.resize(plan.size());

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= plan.size()) return;
            const PlannedRun& pr = plan[i];
            RunSummary& s = result.runs[i];
            s.id = pr.id;
            s.repeat = pr.repeat;
            s.point = pr.point;
            s.metrics_file = "runs/" + pr.id + ".jsonl";
            try {
                RunConfig rc = parse_run_config(pr.config_doc);
                rc.sim.seed += static_cast<std::uint64_t>(pr.repeat);
                s.seed = rc.sim.seed;
                const SimResult res = run_simulation(rc.sim, rc.task, rc.disc);
                write_run_jsonl(res, spec.outputs / s.metrics_file);
                summarize(s, res);
            } catch (const std::exception& e) {
                s.error = e.what();
            }
        }
    };
    if (jobs == 1 || plan.size() <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        const int n = std::min<int>(jobs, static_cast<int>(plan.size()));
        pool.reserve(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    json manifest;
    manifest["name"] = spec.name;
    manifest["repeats"] = spec.repeats;
    json runs = json::array();
    for (const RunSummary& s : result.runs) {
        json r;
        r["id"] = s.id;
        r["file"] = s.metrics_file;
        r["seed"] = s.seed;
        r["repeat"] = s.repeat;
        r["point"] = s.point;
        if (s.error.empty()) {
            r["checksum"] = file_checksum_hex(spec.outputs / s.metrics_file);
            r["final_task_success"] = s.final_task_success;
            r["peak_task_success"] = s.peak_task_success;
            r["mean_mask_fraction"] = s.mean_mask_fraction;
            r["mean_clip_fraction"] = s.mean_clip_fraction;
            r["reset_count"] = s.reset_count;
            r["max_observed_gap"] = s.max_observed_gap;
            r["drops"] = s.drops;
        } else {
            r["error"] = s.error;
            ++result.failed;
        }
        runs.push_back(std::move(r));
    }
    manifest["runs"] = std::move(runs);
    std::ofstream out(spec.outputs / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + spec.outputs.string());
    out << manifest.dump(2) << "\n";
    return result;
}

std::string grid_cell_name(double mask_bound, double clip_bound) {
    return "snap" + std::to_string(std::lround(mask_bound * 1000.0)) + "_" +
           std::to_string(std::lround(clip_bound * 1000.0));
}

GridSpec parse_grid_spec(const json& j) {
    require_object(j, "<root>");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "name" && k != "base" && k != "mask_bounds" && k != "clip_bounds" &&
            k != "repeats" && k != "outputs")
            throw ConfigError("grid spec: unknown key '" + k + "'");
    }
    GridSpec g;
    if (j.contains("name")) {
        if (!j.at("name").is_string()) throw ConfigError("grid spec: name must be a string");
        g.name = j.at("name").get<std::string>();
    }
    if (!j.contains("base")) throw ConfigError("grid spec: missing base config");
    g.base = j.at("base");
    parse_run_config(g.base);
    auto read_bounds = [&](const char* key, std::vector<double>& dst, double min_ok) {
        if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty())
            throw ConfigError(std::string("grid spec: ") + key +
                              " must be a nonempty number array");
        for (const json& v : j.at(key)) {
            if (!v.is_number()) throw ConfigError(std::string("grid spec: ") + key +
                                                  " must be a nonempty number array");
            const double d = v.get<double>();
            if (!(d > min_ok)) throw ConfigError(std::string("grid spec: ") + key +
                                                 " entries must be > 1");
            dst.push_back(d);
        }
    };
    read_bounds("mask_bounds", g.mask_bounds, 1.0);
    read_bounds("clip_bounds", g.clip_bounds, 1.0);
    if (j.contains("repeats")) {
        if (!j.at("repeats").is_number_integer())
            throw ConfigError("grid spec: repeats must be an integer");
        g.repeats = j.at("repeats").get<int>();
    }
    if (g.repeats < 1) throw ConfigError("grid spec: repeats must be >= 1");
    if (j.contains("outputs")) {
        if (!j.at("outputs").is_string())
            throw ConfigError("grid spec: outputs must be a string");
        g.outputs = std::string(j.at("outputs").get<std::string>());
    }
    return g;
}

GridResult threshold_grid(const GridSpec& spec, int jobs) {
    if (spec.outputs.empty()) throw ConfigError("grid spec: missing outputs directory");
    // the clip threshold patches both clip sides, so cells are planned here
    // rather than through the single-path sweep mechanism
    std::vector<PlannedRun> plan;
    for (double mb : spec.mask_bounds)
        for (double cb : spec.clip_bounds) {
            json doc = spec.base;
            // internal patches, not user paths: set directly so a base without
            // an explicit mis scope still grids
            json& mis = doc["mis"];
            mis["mask_form"] = "multiplicative";
            mis["disc_bound"] = mb;
            mis["clip_low"] = cb - 1.0;
            mis["clip_high"] = cb - 1.0;
            for (int r = 0; r < spec.repeats; ++r) {
                PlannedRun pr;
                pr.id = grid_cell_name(mb, cb) + "_r" + std::to_string(r);
                pr.config_doc = doc;
                pr.point["mask_bound"] = mb;
                pr.point["clip_bound"] = cb;
                pr.repeat = r;
                plan.push_back(std::move(pr));
            }
        }

    std::filesystem::create_directories(spec.outputs / "runs");
    std::vector<RunSummary> runs(plan.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= plan.size()) return;
            const PlannedRun& pr = plan[i];
            RunSummary& s = runs[i];
            s.id = pr.id;
            s.repeat = pr.repeat;
            s.point = pr.point;
            s.metrics_file = "runs/" + pr.id + ".jsonl";
            try {
                RunConfig rc = parse_run_config(pr.config_doc);
                rc.sim.seed += static_cast<std::uint64_t>(pr.repeat);
                s.seed = rc.sim.seed;
                const SimResult res = run_simulation(rc.sim, rc.task, rc.disc);
                write_run_jsonl(res, spec.outputs / s.metrics_file);
                summarize(s, res);
            } catch (const std::exception& e) {
                s.error = e.what();
            }
        }
    };
    if (jobs <= 1 || plan.size() <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        const int n = std::min<int>(jobs, static_cast<int>(plan.size()));
        for (int t = 0; t < n; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    GridResult result;
    result.dir = spec.outputs;
    for (std::size_t c = 0; c < plan.size(); c += static_cast<std::size_t>(spec.repeats)) {
        GridRow row;
        row.mask_bound = runs[c].point.at("mask_bound").get<double>();
        row.clip_bound = runs[c].point.at("clip_bound").get<double>();
        row.name = grid_cell_name(row.mask_bound, row.clip_bound);
        int ok = 0;
        for (int r = 0; r < spec.repeats; ++r) {
            const RunSummary& s = runs[c + static_cast<std::size_t>(r)];
            if (!s.error.empty())
                throw std::runtime_error("grid cell " + s.id + " failed: " + s.error);
            row.final_success += s.final_task_success;
            row.peak_success += s.peak_task_success;
            row.mean_mask_fraction += s.mean_mask_fraction;
            row.mean_clip_fraction += s.mean_clip_fraction;
            ++ok;
        }
        row.final_success /= ok;
        row.peak_success /= ok;
        row.mean_mask_fraction /= ok;
        row.mean_clip_fraction /= ok;
        result.rows.push_back(row);
    }

    json manifest;
    manifest["name"] = spec.name;
    manifest["repeats"] = spec.repeats;
    json jruns = json::array();
    for (const RunSummary& s : runs) {
        json r;
        r["id"] = s.id;
        r["file"] = s.metrics_file;
        r["seed"] = s.seed;
        r["repeat"] = s.repeat;
        r["point"] = s.point;
        r["checksum"] = file_checksum_hex(spec.outputs / s.metrics_file);
        r["final_task_success"] = s.final_task_success;
        r["peak_task_success"] = s.peak_task_success;
        r["mean_mask_fraction"] = s.mean_mask_fraction;
        r["mean_clip_fraction"] = s.mean_clip_fraction;
        r["reset_count"] = s.reset_count;
        r["max_observed_gap"] = s.max_observed_gap;
        r["drops"] = s.drops;
        jruns.push_back(std::move(r));
    }
    manifest["runs"] = std::move(jruns);

    std::ofstream tsv(spec.outputs / "grid.tsv");
    tsv << "name\tmask_bound\tclip_bound\tfinal_success\tpeak_success\tmean_mask_fraction"
           "\tmean_clip_fraction\n";
    for (const GridRow& row : result.rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%s\t%.4f\t%.4f\t%.6f\t%.6f\t%.6f\t%.6f\n",
                      row.name.c_str(), row.mask_bound, row.clip_bound, row.final_success,
                      row.peak_success, row.mean_mask_fraction, row.mean_clip_fraction);
        tsv << line;
    }
    tsv.close();
    manifest["grid_table"] = "grid.tsv";
    manifest["grid_table_checksum"] = file_checksum_hex(spec.outputs / "grid.tsv");
    std::ofstream out(spec.outputs / "manifest.json");
    out << manifest.dump(2) << "\n";
    return result;
}

void emit_report(const std::filesystem::path& results_dir,
                 const std::filesystem::path& out_dir) {
    const std::filesystem::path mpath = results_dir / "manifest.json";
    std::ifstream min(mpath);
    if (!min) throw std::runtime_error("missing manifest: " + mpath.string());
    json manifest;
    try {
        min >> manifest;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("corrupt manifest " + mpath.string() + ": " + e.what());
    }
    if (!manifest.contains("runs") || !manifest.at("runs").is_array())
        throw std::runtime_error("manifest has no runs array: " + mpath.string());
    std::filesystem::create_directories(out_dir);

    json report_manifest;
    json files = json::array();
    std::ostringstream summary;
    summary << "run\tsteps\tfinal_success\tpeak_success\tmin_mask\tmean_mask\tfinal_mask"
               "\tmean_clip\tresets\n";
    auto emit_series = [&](const std::filesystem::path& p, const std::string& header,
                           const std::vector<StepMetrics>& ms, auto field) {
        std::ofstream out(p);
        out << "step\t" << header << "\n";
        for (const StepMetrics& m : ms) out << m.step << "\t" << field(m) << "\n";
        out.close();
        json f;
        f["file"] = p.filename().string();
        f["checksum"] = file_checksum_hex(p);
        files.push_back(std::move(f));
    };

    for (const json& r : manifest.at("runs")) {
        if (r.contains("error")) continue;  // failed runs carry no metrics
        const std::string id = r.at("id").get<std::string>();
        const std::filesystem::path mfile = results_dir / r.at("file").get<std::string>();
        if (r.contains("checksum") &&
            r.at("checksum").get<std::string>() != file_checksum_hex(mfile))
            throw std::runtime_error("metrics checksum mismatch for " + mfile.string());
        const std::vector<StepMetrics> ms = read_metrics_jsonl(mfile);

        emit_series(out_dir / (id + ".task_success.tsv"), "task_success", ms,
                    [](const StepMetrics& m) { return m.task_success; });
        emit_series(out_dir / (id + ".mask_fraction.tsv"), "mask_fraction", ms,
                    [](const StepMetrics& m) { return m.mask_fraction; });
        emit_series(out_dir / (id + ".clip_fraction.tsv"), "ppo_clip_fraction", ms,
                    [](const StepMetrics& m) { return m.ppo_clip_fraction; });

        // reset markers: steps where the cumulative reset count increased
        {
            std::ofstream rf(out_dir / (id + ".resets.tsv"));
            rf << "step\treset_index\n";
            int prev = 0;
            for (const StepMetrics& m : ms) {
                for (int k = prev + 1; k <= m.reset_events; ++k)
                    rf << m.step << "\t" << k << "\n";
                prev = std::max(prev, m.reset_events);
            }
            rf.close();
            json f;
            f["file"] = id + ".resets.tsv";
            f["checksum"] = file_checksum_hex(out_dir / (id + ".resets.tsv"));
            files.push_back(std::move(f));
        }

        double mean_rho = 0.0, min_rho = ms.empty() ? 0.0 : 1e300, mean_clip = 0.0,
               peak = 0.0;
        for (const StepMetrics& m : ms) {
            mean_rho += m.mask_fraction;
            min_rho = std::min(min_rho, m.mask_fraction);
            mean_clip += m.ppo_clip_fraction;
            peak = std::max(peak, m.task_success);
        }
        const double n = ms.empty() ? 1.0 : static_cast<double>(ms.size());
        char line[512];
        std::snprintf(line, sizeof(line),
                      "%s\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%d\n", id.c_str(),
                      ms.size(), ms.empty() ? 0.0 : ms.back().task_success, peak,
                      ms.empty() ? 0.0 : min_rho, mean_rho / n,
                      ms.empty() ? 0.0 : ms.back().mask_fraction, mean_clip / n,
                      ms.empty() ? 0 : ms.back().reset_events);
        summary << line;
    }

    {
        std::ofstream sf(out_dir / "summary.txt");
        sf << summary.str();
    }
    json f;
    f["file"] = "summary.txt";
    f["checksum"] = file_checksum_hex(out_dir / "summary.txt");
    files.push_back(std::move(f));
    report_manifest["files"] = std::move(files);
    report_manifest["source"] = mpath.string();
    std::ofstream rm(out_dir / "report_manifest.json");
    rm << report_manifest.dump(2) << "\n";
}

}  // namespace misim
