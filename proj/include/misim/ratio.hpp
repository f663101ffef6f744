#pragma once

#include <optional>
#include <string>

#include "misim/proxy.hpp"
#include "misim/sample.hpp"

namespace misim {

// Relative guard applied when ratios reconstructed from log space are
// compared against band edges; scaled outward so exact-boundary ratios
// never flip inactive from a last-bit rounding.
inline constexpr double kBoundaryGuard = 1e-12;

enum class MisVariant {
    ppo_standard,
    ppo_train_infer,
    decoupled_train_infer,
    ppo_ewma,
    ppo_ewma_train_infer,
    linear_prox,
    linear_prox_train_infer,
    decoupled_async,
};

enum class MaskForm { multiplicative, additive };
enum class ProxInterp { loglinear, arithmetic };
enum class AlphaRule { per_gap, fixed };

struct EwmaConfig {
    double beta = 0.75;
    double tau = 0.9;
    bool normalized = true;
    bool auto_reset = true;
};

struct MisConfig {
    MisVariant variant = MisVariant::ppo_standard;
    double clip_low = 0.2;
    double clip_high = 0.2;
    MaskForm mask_form = MaskForm::multiplicative;
    // multiplicative: band [1/disc_bound, disc_bound], disc_bound > 1
    // additive: band [1-disc_bound, 1+disc_bound], disc_bound in (0,1)
    double disc_bound = 1.01;
    ProxInterp prox_interp = ProxInterp::loglinear;
    AlphaRule alpha_rule = AlphaRule::per_gap;
    double fixed_alpha = 0.5;
    // interpolation variants only: drop the proxy and apply the equivalent
    // transformed bounds directly on the total ratio
    bool reparameterized_bounds = false;
    EwmaConfig ewma;
};

// log r_total is defined as log r_s + log r_d, so the decomposition identity
// holds bit-exactly by construction.
struct RatioTriple {
    double r_total = 1.0;
    double r_s = 1.0;
    double r_d = 1.0;
    double log_r_total = 0.0;
    double log_r_s = 0.0;
    double log_r_d = 0.0;
};

RatioTriple ratio_decompose(double logp_cur, double logp_old_train, double logp_old_infer);

// min(r*A, clamp(r, 1-clip_low, 1+clip_high)*A)
double ppo_clip_surrogate(double r, double A, double clip_low, double clip_high);

// A >= 0: active iff r <= 1+clip_high; A < 0: active iff r >= 1-clip_low.
// Boundaries inclusive.
bool ppo_active_mask(double r, double A, double clip_low, double clip_high);

// band membership for the discrepancy ratio; boundaries inclusive
bool discrepancy_mask(double r_d, const MisConfig& cfg);

struct MisResult {
    bool active = true;
    double weight = 0.0;
    double r1 = 1.0;      // ratio against the variant's update reference
    double r2 = 1.0;      // reference-vs-behavior ratio (1 when the variant has none)
    bool ppo_ok = true;   // passed the clip-side gate
    bool disc_ok = true;  // passed the discrepancy-side gate
};

// Per-token gate and gradient scale for one variant. logp_prox carries the
// variant's reference log-prob where one exists (EWMA reference, async
// reference); interpolation variants build their proxy internally.
// version_gap is the trainer-version minus rollout-version for this token.
MisResult mis_weight(const TokenSample& sample, double logp_cur,
                     std::optional<double> logp_prox, int version_gap,
                     const MisConfig& cfg);

bool variant_uses_ewma(MisVariant v);
bool variant_needs_train_old(MisVariant v);
bool variant_needs_prox(MisVariant v);
const char* variant_name(MisVariant v);

// transformed constraint region for the current mask/clip settings
EffectiveBounds effective_bounds_from_config(const MisConfig& cfg, double alpha);

}  // namespace misim
