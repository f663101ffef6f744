#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misim/acquisition.hpp"
#include "misim/policy.hpp"
#include "misim/ratio.hpp"

namespace misim {

// sim-time distribution; every draw is a pure function of its key
struct LatencyDist {
    enum class Kind { fixed, uniform, exponential };
    Kind kind = Kind::fixed;
    double a = 1.0;  // fixed value / uniform low / exponential mean
    double b = 1.0;  // uniform high
    double draw(std::uint64_t seed, std::uint64_t tag, std::uint64_t k1,
                std::uint64_t k2) const;
};

enum class AdvantageMode { group_normalized, reward_minus_mean };

struct SimConfig {
    int num_workers = 4;
    int max_version_gap = 3;
    LatencyDist rollout_latency;  // per token
    LatencyDist update_latency;   // per trainer step
    int batch_size = 8;           // trajectories consumed per update
    int group_size = 2;           // trajectories per advantage group
    bool partial_rollout = false;
    StrategyKind strategy = StrategyKind::snapshot;
    int snapshot_max_resident = 5;
    bool dedicated_overlap = true;
    CostModel cost;
    MisConfig mis;
    AdvantageMode advantage_mode = AdvantageMode::group_normalized;
    double advantage_std_guard = 1e-6;
    double learning_rate = 0.1;
    int total_updates = 100;
    std::uint64_t seed = 1;
    bool record_trace = false;
    bool record_tokens = false;  // keep consumed tokens for post-run inspection
};

struct StepMetrics {
    int step = 0;                  // 1-based
    double task_success = 0.0;     // mean normalized episode reward
    double mask_fraction = 0.0;    // fraction of batch tokens active after all gates
    double ppo_clip_fraction = 0.0;  // fraction failing the clip-side gate
    double mean_version_gap = 0.0;
    int reset_events = 0;  // cumulative reference resets up to this step
    int low_mask_streak = 0;
    double mean_reward = 0.0;  // raw
    int batch_tokens = 0;
    int active_tokens = 0;
    int max_gap = 0;
    CostReport cost;
};

enum class SimEventKind {
    rollout_complete,
    rollout_partial,
    update_begin,
    update_end,
    interrupt,
    weights_sync,
};

const char* event_name(SimEventKind k);

struct SimEvent {
    double time = 0.0;
    SimEventKind kind = SimEventKind::rollout_complete;
    std::uint64_t seq = 0;  // processing order; total within a run
    std::uint64_t a = 0;    // trajectory index / step number
    std::uint64_t b = 0;    // version / payload
};

struct DropRecord {
    std::uint64_t traj_index = 0;
    std::string reason;
    int tokens = 0;
    std::uint64_t version_lo = 0;
    std::uint64_t version_hi = 0;
};

struct Conservation {
    std::int64_t tokens_generated = 0;
    std::int64_t tokens_consumed = 0;
    std::int64_t tokens_dropped = 0;
    std::int64_t tokens_unconsumed_end = 0;  // completed or in-flight at termination
    std::int64_t traj_started = 0;
    std::int64_t traj_consumed = 0;
    std::int64_t traj_dropped = 0;
    std::int64_t traj_unconsumed_end = 0;
};

struct SimResult {
    std::vector<StepMetrics> metrics;
    PolicyParams final_params;
    std::uint64_t final_version = 0;
    Conservation conservation;
    std::vector<DropRecord> drops;
    std::vector<SimEvent> trace;
    std::vector<TokenSample> consumed_tokens;  // populated when record_tokens
    std::vector<PolicyParams> published_versions;  // index == version
    int max_observed_gap = 0;
    int reset_count = 0;
    CostReport total_cost;
};

// group-relative advantages; sequence advantage is broadcast downstream
std::vector<double> compute_advantages(const std::vector<double>& rewards, int group_size,
                                       AdvantageMode mode = AdvantageMode::group_normalized,
                                       double std_guard = 1e-6);

struct TrainerState {
    PolicyParams params;
    std::uint64_t version = 0;
    EwmaState ewma;
    bool ewma_enabled = false;
};

// One gradient step over a prepared batch (advantages and any required
// reference log-probs already present). Ascends learning_rate * mean over
// batch tokens of weight * grad-logprob; bumps version; absorbs the new
// params into the reference when the variant uses one.
StepMetrics trainer_step(TrainerState& state, std::vector<TokenSample>& batch,
                         const MisConfig& mis, double learning_rate,
                         const SyntheticTask& task,
                         const std::vector<double>& episode_rewards);

void validate(const SimConfig& cfg, const SyntheticTask& task);

SimResult run_simulation(const SimConfig& cfg, const SyntheticTask& task,
                         const DiscrepancyModel& disc);

// Same per-step arithmetic with a strictly alternating generate/train loop;
// the degenerate pipeline (gap cap 1, no partial rollouts) must match it
// bit for bit.
SimResult run_synchronous_reference(const SimConfig& cfg, const SyntheticTask& task,
                                    const DiscrepancyModel& disc);

// deterministic event interleaving for schedule inspection
std::vector<SimEvent> inject_staleness_schedule(const SimConfig& cfg,
                                                const SyntheticTask& task,
                                                const DiscrepancyModel& disc);

}  // namespace misim
