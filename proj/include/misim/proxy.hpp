#pragma once

#include <filesystem>

#include "misim/policy.hpp"

namespace misim {

// behavior-policy interpolation weight for a version gap of n updates
double alpha_from_gap(int n);

// probability-space interpolation: alpha*p_old + (1-alpha)*p_cur
double linear_prox(double p_old_infer, double p_cur, double alpha);

// log-space interpolation: alpha*logp_old + (1-alpha)*logp_cur
double loglinear_prox(double logp_old_infer, double logp_cur, double alpha);

// Constraint region on the total ratio that reproduces masking the proxy
// discrepancy ratio and clipping the proxy staleness ratio.
struct EffectiveBounds {
    double mask_lo = 0.0;
    double mask_hi = 0.0;
    double clip_hi_pos = 0.0;  // upper bound when advantage >= 0
    double clip_lo_neg = 0.0;  // lower bound when advantage < 0
};

// mask [(1-e)^{1/(1-a)}, (1+e)^{1/(1-a)}], clip (1+-e)^{1/a}
EffectiveBounds effective_bounds_loglinear(double mask_eps, double clip_eps_low,
                                           double clip_eps_high, double alpha);

// mask 1 +- e/(1-a); clip a(1+-e)/(1-(1-a)(1+-e)). Throws SingularBound when
// the upper denominator is not positive.
EffectiveBounds effective_bounds_arithmetic(double mask_eps, double clip_eps_low,
                                            double clip_eps_high, double alpha);

// multiplicative-band variants: mask band given as [1/c, c]
EffectiveBounds effective_bounds_loglinear_mult(double mask_c, double clip_eps_low,
                                                double clip_eps_high, double alpha);
EffectiveBounds effective_bounds_arithmetic_mult(double mask_c, double clip_eps_low,
                                                 double clip_eps_high, double alpha);

// Normalized exponentially weighted average of actor states. weight_sum
// tracks sum_k beta^k since the last reset; the first absorb after init or
// reset is a literal copy so the reference starts exactly at the actor.
struct EwmaState {
    PolicyParams theta_prox;
    double weight_sum = 1.0;
    double beta = 0.75;
    double tau = 0.9;
    int step = 0;
    int reset_count = 0;
    bool normalized = true;  // false selects theta' = beta*theta' + (1-beta)*theta
    bool primed = false;
};

EwmaState ewma_init(double beta, double tau, bool normalized = true);

EwmaState ewma_update(EwmaState state, const PolicyParams& theta_t);

// center of mass of the weights, beta/(1-beta)
double ewma_center_of_mass(double beta);

// decay whose history spans a staleness window of W updates: W/(W+2)
double staleness_decay(double W);

// re-centers the reference on theta_t when the active fraction drops below tau
EwmaState maybe_reset(EwmaState state, double rho_t, const PolicyParams& theta_t);

// text checkpoint (JSON); doubles round-trip exactly
void save_ewma(const EwmaState& state, const std::filesystem::path& path);
EwmaState load_ewma(const std::filesystem::path& path);

}  // namespace misim
