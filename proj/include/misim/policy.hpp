#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misim/rng.hpp"
#include "misim/sample.hpp"

namespace misim {

// Tabular softmax policy: one weight row per context.
struct PolicyParams {
    int num_contexts = 0;
    int vocab_size = 0;
    std::vector<double> weights;  // size num_contexts * vocab_size

    static PolicyParams zeros(int num_contexts, int vocab_size);

    double* row(int context) { return weights.data() + static_cast<std::size_t>(context) * vocab_size; }
    const double* row(int context) const {
        return weights.data() + static_cast<std::size_t>(context) * vocab_size;
    }
    bool same_shape(const PolicyParams& o) const {
        return num_contexts == o.num_contexts && vocab_size == o.vocab_size;
    }
};

struct VersionedParams {
    std::uint64_t version = 0;
    PolicyParams params;
};

enum class DiscMode { deterministic_hash, seeded_noise };

// Systematic log-prob perturbation between the training-side and the
// inference-side evaluation of the same parameters. Pure in
// (seed, version, context, token), so re-evaluating never changes a value.
struct DiscrepancyModel {
    double magnitude = 0.0;
    DiscMode mode = DiscMode::deterministic_hash;
    std::uint64_t seed = 0;
};

enum class RewardMode { terminal_token, mean_token };

struct SyntheticTask {
    int num_contexts = 0;
    int vocab_size = 0;
    int horizon = 1;
    RewardMode reward_mode = RewardMode::terminal_token;
    std::vector<double> reward_table;  // num_contexts * vocab_size
    double reward_min = 0.0;           // declared range, used for normalization
    double reward_max = 1.0;
    std::uint64_t rng_seed = 0;

    double table_entry(int context, int token) const {
        return reward_table[static_cast<std::size_t>(context) * vocab_size + token];
    }
};

double logprob_train(const PolicyParams& params, int context, int token);

// full log-softmax row; the building block everything else shares
std::vector<double> logprob_train_row(const PolicyParams& params, int context);

// Inference-side log-probs: perturb the training row, renormalize. With
// magnitude 0 this returns the training row untouched (bit-identical).
std::vector<double> logprob_infer_row(const PolicyParams& params, int context,
                                      const DiscrepancyModel& disc,
                                      std::uint64_t version);

double logprob_infer(const PolicyParams& params, int context, int token,
                     const DiscrepancyModel& disc, std::uint64_t version);

// d logprob_train(context, token) / d weights, dense over all weights;
// nonzero only on the context row
std::vector<double> grad_logprob(const PolicyParams& params, int context, int token);

// row-only gradient: onehot(token) - softmax(row)
std::vector<double> grad_logprob_row(const PolicyParams& params, int context, int token);

// inverse-CDF draw over exp(logp_row); u in [0,1)
int draw_token(const std::vector<double>& logp_row, double u);

struct Episode {
    int context = 0;
    std::vector<TokenSample> tokens;
    double reward = 0.0;  // raw table reward
};

// Tokens are drawn from the inference-side distribution and each sample
// records the draw-time logp_infer and the params version.
Episode sample_episode(const VersionedParams& params, const SyntheticTask& task,
                       const DiscrepancyModel& disc, Rng& rng, int context);
Episode sample_episode(const VersionedParams& params, const SyntheticTask& task,
                       const DiscrepancyModel& disc, Rng& rng);

double episode_reward(const SyntheticTask& task, int context,
                      const std::vector<int>& tokens);

// maps a raw reward into [0,1] via the task's declared range
double normalized_reward(const SyntheticTask& task, double raw);

}  // namespace misim
