#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "misim/sim.hpp"

namespace misim {

// Full description of one run. The JSON form is strict: unknown keys are
// rejected, known keys are optional and fall back to these defaults.
struct RunConfig {
    SyntheticTask task;
    DiscrepancyModel disc;
    SimConfig sim;
};

// peaked per-context reward table: one full-reward token, one half-reward token
std::vector<double> default_reward_table(int num_contexts, int vocab_size);

RunConfig default_run_config();

nlohmann::json to_json(const RunConfig& rc);
RunConfig parse_run_config(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& rc, const std::filesystem::path& path);

// enum <-> string mappings shared by config and reporting
const char* reward_mode_name(RewardMode m);
const char* disc_mode_name(DiscMode m);
const char* advantage_mode_name(AdvantageMode m);
const char* mask_form_name(MaskForm m);
const char* prox_interp_name(ProxInterp p);
const char* alpha_rule_name(AlphaRule r);

MisVariant variant_from_name(const std::string& s);
StrategyKind strategy_from_name(const std::string& s);

}  // namespace misim
