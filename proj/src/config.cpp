#include "misim/config.hpp"

#include <fstream>

#include "misim/errors.hpp"

namespace misim {

using nlohmann::json;

const char* reward_mode_name(RewardMode m) {
    return m == RewardMode::terminal_token ? "terminal_token" : "mean_token";
}
const char* disc_mode_name(DiscMode m) {
    return m == DiscMode::deterministic_hash ? "deterministic_hash" : "seeded_noise";
}
const char* advantage_mode_name(AdvantageMode m) {
    return m == AdvantageMode::group_normalized ? "group_normalized" : "reward_minus_mean";
}
const char* mask_form_name(MaskForm m) {
    return m == MaskForm::multiplicative ? "multiplicative" : "additive";
}
const char* prox_interp_name(ProxInterp p) {
    return p == ProxInterp::loglinear ? "loglinear" : "arithmetic";
}
const char* alpha_rule_name(AlphaRule r) {
    return r == AlphaRule::per_gap ? "per_gap" : "fixed";
}
static const char* latency_kind_name(LatencyDist::Kind k) {
    switch (k) {
        case LatencyDist::Kind::fixed: return "fixed";
        case LatencyDist::Kind::uniform: return "uniform";
        case LatencyDist::Kind::exponential: return "exponential";
    }
    return "?";
}

MisVariant variant_from_name(const std::string& s) {
    for (MisVariant v :
         {MisVariant::ppo_standard, MisVariant::ppo_train_infer,
          MisVariant::decoupled_train_infer, MisVariant::ppo_ewma,
          MisVariant::ppo_ewma_train_infer, MisVariant::linear_prox,
          MisVariant::linear_prox_train_infer, MisVariant::decoupled_async})
        if (s == variant_name(v)) return v;
    throw ConfigError("unknown variant '" + s + "'");
}

StrategyKind strategy_from_name(const std::string& s) {
    for (StrategyKind k : {StrategyKind::snapshot, StrategyKind::dedicated_model,
                           StrategyKind::partial_interrupt, StrategyKind::none})
        if (s == strategy_name(k)) return k;
    throw ConfigError("unknown strategy '" + s + "'");
}

namespace {

[[noreturn]] void bad(const std::string& scope, const std::string& key,
                      const std::string& what) {
    throw ConfigError("config: " + scope + "." + key + " " + what);
}

void check_keys(const json& j, const std::string& scope,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: " + scope + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + scope);
    }
}

double get_num(const json& j, const std::string& scope, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) bad(scope, key, "must be a number");
    return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& scope, const char* key, int dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer()) bad(scope, key, "must be an integer");
    return j.at(key).get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& scope, const char* key,
                      std::uint64_t dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer()) bad(scope, key, "must be an integer");
    const auto v = j.at(key).get<std::int64_t>();
    if (v < 0) bad(scope, key, "must be non-negative");
    return static_cast<std::uint64_t>(v);
}

bool get_bool(const json& j, const std::string& scope, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_boolean()) bad(scope, key, "must be a boolean");
    return j.at(key).get<bool>();
}

std::string get_str(const json& j, const std::string& scope, const char* key,
                    const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_string()) bad(scope, key, "must be a string");
    return j.at(key).get<std::string>();
}

json latency_to_json(const LatencyDist& d) {
    json j;
    j["kind"] = latency_kind_name(d.kind);
    switch (d.kind) {
        case LatencyDist::Kind::fixed: j["value"] = d.a; break;
        case LatencyDist::Kind::uniform:
            j["low"] = d.a;
            j["high"] = d.b;
            break;
        case LatencyDist::Kind::exponential: j["mean"] = d.a; break;
    }
    return j;
}

LatencyDist latency_from_json(const json& j, const std::string& scope, LatencyDist dflt) {
    if (!j.is_object()) throw ConfigError("config: " + scope + " must be an object");
    const std::string kind = get_str(j, scope, "kind", latency_kind_name(dflt.kind));
    LatencyDist d;
    if (kind == "fixed") {
        check_keys(j, scope, {"kind", "value"});
        d.kind = LatencyDist::Kind::fixed;
        d.a = get_num(j, scope, "value", dflt.a);
        d.b = d.a;
    } else if (kind == "uniform") {
        check_keys(j, scope, {"kind", "low", "high"});
        d.kind = LatencyDist::Kind::uniform;
        d.a = get_num(j, scope, "low", dflt.a);
        d.b = get_num(j, scope, "high", dflt.b);
    } else if (kind == "exponential") {
        check_keys(j, scope, {"kind", "mean"});
        d.kind = LatencyDist::Kind::exponential;
        d.a = get_num(j, scope, "mean", dflt.a);
        d.b = d.a;
    } else {
        throw ConfigError("config: " + scope + ".kind unknown value '" + kind + "'");
    }
    return d;
}

}  // namespace

std::vector<double> default_reward_table(int num_contexts, int vocab_size) {
    std::vector<double> t(static_cast<std::size_t>(num_contexts) * vocab_size, 0.0);
    for (int c = 0; c < num_contexts; ++c) {
        const int best = (3 * c + 1) % vocab_size;
        int second = (3 * c + 5) % vocab_size;
        if (second == best) second = (second + 1) % vocab_size;
        t[static_cast<std::size_t>(c) * vocab_size + best] = 1.0;
        t[static_cast<std::size_t>(c) * vocab_size + second] = 0.5;
    }
    return t;
}

RunConfig default_run_config() {
    RunConfig rc;
    rc.task.num_contexts = 4;
    rc.task.vocab_size = 8;
    rc.task.horizon = 8;
    rc.task.reward_mode = RewardMode::mean_token;
    rc.task.reward_table = default_reward_table(4, 8);
    rc.task.reward_min = 0.0;
    rc.task.reward_max = 1.0;

    rc.disc.magnitude = 0.0;
    rc.disc.mode = DiscMode::deterministic_hash;
    rc.disc.seed = 7;

    rc.sim.num_workers = 4;
    rc.sim.max_version_gap = 3;
    rc.sim.rollout_latency = LatencyDist{LatencyDist::Kind::fixed, 1.0, 1.0};
    rc.sim.update_latency = LatencyDist{LatencyDist::Kind::fixed, 4.0, 4.0};
    rc.sim.batch_size = 8;
    rc.sim.group_size = 2;
    rc.sim.strategy = StrategyKind::snapshot;
    rc.sim.total_updates = 200;
    rc.sim.learning_rate = 0.1;
    rc.sim.seed = 1;
    return rc;
}

nlohmann::json to_json(const RunConfig& rc) {
    json t;
    t["num_contexts"] = rc.task.num_contexts;
    t["vocab_size"] = rc.task.vocab_size;
    t["horizon"] = rc.task.horizon;
    t["reward_mode"] = reward_mode_name(rc.task.reward_mode);
    t["reward_table"] = rc.task.reward_table;
    t["reward_min"] = rc.task.reward_min;
    t["reward_max"] = rc.task.reward_max;

    json d;
    d["magnitude"] = rc.disc.magnitude;
    d["mode"] = disc_mode_name(rc.disc.mode);
    d["seed"] = rc.disc.seed;

    const SimConfig& s = rc.sim;
    json sj;
    sj["num_workers"] = s.num_workers;
    sj["max_version_gap"] = s.max_version_gap;
    sj["rollout_latency"] = latency_to_json(s.rollout_latency);
    sj["update_latency"] = latency_to_json(s.update_latency);
    sj["batch_size"] = s.batch_size;
    sj["group_size"] = s.group_size;
    sj["partial_rollout"] = s.partial_rollout;
    sj["strategy"] = strategy_name(s.strategy);
    sj["snapshot_max_resident"] = s.snapshot_max_resident;
    sj["dedicated_overlap"] = s.dedicated_overlap;
    json cj;
    cj["save"] = s.cost.save_latency;
    cj["load"] = s.cost.load_latency;
    cj["restore"] = s.cost.restore_latency;
    cj["forward"] = s.cost.forward_latency;
    cj["storage_bytes"] = s.cost.storage_per_snapshot;
    sj["cost"] = cj;
    sj["advantage_mode"] = advantage_mode_name(s.advantage_mode);
    sj["advantage_std_guard"] = s.advantage_std_guard;
    sj["learning_rate"] = s.learning_rate;
    sj["total_updates"] = s.total_updates;
    sj["seed"] = s.seed;
    sj["record_trace"] = s.record_trace;
    sj["record_tokens"] = s.record_tokens;

    const MisConfig& m = s.mis;
    json mj;
    mj["variant"] = variant_name(m.variant);
    mj["clip_low"] = m.clip_low;
    mj["clip_high"] = m.clip_high;
    mj["mask_form"] = mask_form_name(m.mask_form);
    mj["disc_bound"] = m.disc_bound;
    mj["prox_interp"] = prox_interp_name(m.prox_interp);
    mj["alpha_rule"] = alpha_rule_name(m.alpha_rule);
    mj["fixed_alpha"] = m.fixed_alpha;
    mj["reparameterized_bounds"] = m.reparameterized_bounds;
    json ej;
    ej["beta"] = m.ewma.beta;
    ej["tau"] = m.ewma.tau;
    ej["normalized"] = m.ewma.normalized;
    ej["auto_reset"] = m.ewma.auto_reset;
    mj["ewma"] = ej;

    json j;
    j["task"] = t;
    j["discrepancy"] = d;
    j["sim"] = sj;
    j["mis"] = mj;
    return j;
}

RunConfig parse_run_config(const json& j) {
    check_keys(j, "<root>", {"task", "discrepancy", "sim", "mis"});
    RunConfig rc = default_run_config();

    if (j.contains("task")) {
        const json& t = j.at("task");
        check_keys(t, "task",
                   {"num_contexts", "vocab_size", "horizon", "reward_mode", "reward_table",
                    "reward_min", "reward_max"});
        rc.task.num_contexts = get_int(t, "task", "num_contexts", rc.task.num_contexts);
        rc.task.vocab_size = get_int(t, "task", "vocab_size", rc.task.vocab_size);
        rc.task.horizon = get_int(t, "task", "horizon", rc.task.horizon);
        const std::string rm =
            get_str(t, "task", "reward_mode", reward_mode_name(rc.task.reward_mode));
        if (rm == "terminal_token")
            rc.task.reward_mode = RewardMode::terminal_token;
        else if (rm == "mean_token")
            rc.task.reward_mode = RewardMode::mean_token;
        else
            bad("task", "reward_mode", "unknown value '" + rm + "'");
        rc.task.reward_min = get_num(t, "task", "reward_min", rc.task.reward_min);
        rc.task.reward_max = get_num(t, "task", "reward_max", rc.task.reward_max);
        if (t.contains("reward_table")) {
            const json& rt = t.at("reward_table");
            if (!rt.is_array()) bad("task", "reward_table", "must be an array of numbers");
            rc.task.reward_table.clear();
            for (const json& v : rt) {
                if (!v.is_number()) bad("task", "reward_table", "must be an array of numbers");
                rc.task.reward_table.push_back(v.get<double>());
            }
        } else {
            rc.task.reward_table =
                default_reward_table(rc.task.num_contexts, rc.task.vocab_size);
        }
    }

    if (j.contains("discrepancy")) {
        const json& d = j.at("discrepancy");
        check_keys(d, "discrepancy", {"magnitude", "mode", "seed"});
        rc.disc.magnitude = get_num(d, "discrepancy", "magnitude", rc.disc.magnitude);
        if (rc.disc.magnitude < 0.0) bad("discrepancy", "magnitude", "must be >= 0");
        const std::string dm =
            get_str(d, "discrepancy", "mode", disc_mode_name(rc.disc.mode));
        if (dm == "deterministic_hash")
            rc.disc.mode = DiscMode::deterministic_hash;
        else if (dm == "seeded_noise")
            rc.disc.mode = DiscMode::seeded_noise;
        else
            bad("discrepancy", "mode", "unknown value '" + dm + "'");
        rc.disc.seed = get_u64(d, "discrepancy", "seed", rc.disc.seed);
    }

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        check_keys(s, "sim",
                   {"num_workers", "max_version_gap", "rollout_latency", "update_latency",
                    "batch_size", "group_size", "partial_rollout", "strategy",
                    "snapshot_max_resident", "dedicated_overlap", "cost", "advantage_mode",
                    "advantage_std_guard", "learning_rate", "total_updates", "seed",
                    "record_trace", "record_tokens"});
        SimConfig& c = rc.sim;
        c.num_workers = get_int(s, "sim", "num_workers", c.num_workers);
        c.max_version_gap = get_int(s, "sim", "max_version_gap", c.max_version_gap);
        if (s.contains("rollout_latency"))
            c.rollout_latency =
                latency_from_json(s.at("rollout_latency"), "sim.rollout_latency",
                                  c.rollout_latency);
        if (s.contains("update_latency"))
            c.update_latency = latency_from_json(s.at("update_latency"), "sim.update_latency",
                                                 c.update_latency);
        c.batch_size = get_int(s, "sim", "batch_size", c.batch_size);
        c.group_size = get_int(s, "sim", "group_size", c.group_size);
        c.partial_rollout = get_bool(s, "sim", "partial_rollout", c.partial_rollout);
        c.strategy = strategy_from_name(
            get_str(s, "sim", "strategy", strategy_name(c.strategy)));
        c.snapshot_max_resident =
            get_int(s, "sim", "snapshot_max_resident", c.snapshot_max_resident);
        c.dedicated_overlap = get_bool(s, "sim", "dedicated_overlap", c.dedicated_overlap);
        if (s.contains("cost")) {
            const json& cj = s.at("cost");
            check_keys(cj, "sim.cost", {"save", "load", "restore", "forward", "storage_bytes"});
            c.cost.save_latency = get_num(cj, "sim.cost", "save", c.cost.save_latency);
            c.cost.load_latency = get_num(cj, "sim.cost", "load", c.cost.load_latency);
            c.cost.restore_latency = get_num(cj, "sim.cost", "restore", c.cost.restore_latency);
            c.cost.forward_latency = get_num(cj, "sim.cost", "forward", c.cost.forward_latency);
            c.cost.storage_per_snapshot =
                get_num(cj, "sim.cost", "storage_bytes", c.cost.storage_per_snapshot);
        }
        const std::string am =
            get_str(s, "sim", "advantage_mode", advantage_mode_name(c.advantage_mode));
        if (am == "group_normalized")
            c.advantage_mode = AdvantageMode::group_normalized;
        else if (am == "reward_minus_mean")
            c.advantage_mode = AdvantageMode::reward_minus_mean;
        else
            bad("sim", "advantage_mode", "unknown value '" + am + "'");
        c.advantage_std_guard = get_num(s, "sim", "advantage_std_guard", c.advantage_std_guard);
        c.learning_rate = get_num(s, "sim", "learning_rate", c.learning_rate);
        c.total_updates = get_int(s, "sim", "total_updates", c.total_updates);
        c.seed = get_u64(s, "sim", "seed", c.seed);
        c.record_trace = get_bool(s, "sim", "record_trace", c.record_trace);
        c.record_tokens = get_bool(s, "sim", "record_tokens", c.record_tokens);
    }

    if (j.contains("mis")) {
        const json& m = j.at("mis");
        check_keys(m, "mis",
                   {"variant", "clip_low", "clip_high", "mask_form", "disc_bound",
                    "prox_interp", "alpha_rule", "fixed_alpha", "reparameterized_bounds",
                    "ewma"});
        MisConfig& mc = rc.sim.mis;
        mc.variant = variant_from_name(get_str(m, "mis", "variant", variant_name(mc.variant)));
        mc.clip_low = get_num(m, "mis", "clip_low", mc.clip_low);
        mc.clip_high = get_num(m, "mis", "clip_high", mc.clip_high);
        const std::string mf = get_str(m, "mis", "mask_form", mask_form_name(mc.mask_form));
        if (mf == "multiplicative")
            mc.mask_form = MaskForm::multiplicative;
        else if (mf == "additive")
            mc.mask_form = MaskForm::additive;
        else
            bad("mis", "mask_form", "unknown value '" + mf + "'");
        mc.disc_bound = get_num(m, "mis", "disc_bound", mc.disc_bound);
        const std::string pi =
            get_str(m, "mis", "prox_interp", prox_interp_name(mc.prox_interp));
        if (pi == "loglinear")
            mc.prox_interp = ProxInterp::loglinear;
        else if (pi == "arithmetic")
            mc.prox_interp = ProxInterp::arithmetic;
        else
            bad("mis", "prox_interp", "unknown value '" + pi + "'");
        const std::string ar = get_str(m, "mis", "alpha_rule", alpha_rule_name(mc.alpha_rule));
        if (ar == "per_gap")
            mc.alpha_rule = AlphaRule::per_gap;
        else if (ar == "fixed")
            mc.alpha_rule = AlphaRule::fixed;
        else
            bad("mis", "alpha_rule", "unknown value '" + ar + "'");
        mc.fixed_alpha = get_num(m, "mis", "fixed_alpha", mc.fixed_alpha);
        mc.reparameterized_bounds =
            get_bool(m, "mis", "reparameterized_bounds", mc.reparameterized_bounds);
        if (m.contains("ewma")) {
            const json& e = m.at("ewma");
            check_keys(e, "mis.ewma", {"beta", "tau", "normalized", "auto_reset"});
            mc.ewma.beta = get_num(e, "mis.ewma", "beta", mc.ewma.beta);
            mc.ewma.tau = get_num(e, "mis.ewma", "tau", mc.ewma.tau);
            mc.ewma.normalized = get_bool(e, "mis.ewma", "normalized", mc.ewma.normalized);
            mc.ewma.auto_reset = get_bool(e, "mis.ewma", "auto_reset", mc.ewma.auto_reset);
        }
    }

    validate(rc.sim, rc.task);
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

void save_run_config(const RunConfig& rc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << to_json(rc).dump(2) << "\n";
}

}  // namespace misim
