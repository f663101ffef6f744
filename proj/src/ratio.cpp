#include "misim/ratio.hpp"

#include <algorithm>
#include <cmath>

#include "misim/errors.hpp"

namespace misim {

namespace {

void check_finite(double v, const char* name) {
    if (!std::isfinite(v))
        throw std::domain_error(std::string(name) + " must be finite");
}

bool within_upper(double r, double hi) { return r <= hi * (1.0 + kBoundaryGuard); }
bool within_lower(double r, double lo) { return r >= lo * (1.0 - kBoundaryGuard); }

}  // namespace

RatioTriple ratio_decompose(double logp_cur, double logp_old_train, double logp_old_infer) {
    check_finite(logp_cur, "logp_cur");
    check_finite(logp_old_train, "logp_old_train");
    check_finite(logp_old_infer, "logp_old_infer");
    RatioTriple t;
    t.log_r_s = logp_cur - logp_old_train;
    t.log_r_d = logp_old_train - logp_old_infer;
    t.log_r_total = t.log_r_s + t.log_r_d;
    t.r_s = std::exp(t.log_r_s);
    t.r_d = std::exp(t.log_r_d);
    t.r_total = std::exp(t.log_r_total);
    return t;
}

double ppo_clip_surrogate(double r, double A, double clip_low, double clip_high) {
    if (!(r > 0.0)) throw std::domain_error("ratio must be positive");
    check_finite(r, "r");
    const double clamped = std::clamp(r, 1.0 - clip_low, 1.0 + clip_high);
    return std::min(r * A, clamped * A);
}

bool ppo_active_mask(double r, double A, double clip_low, double clip_high) {
    if (!(r > 0.0)) throw std::domain_error("ratio must be positive");
    check_finite(r, "r");
    if (A >= 0.0) return within_upper(r, 1.0 + clip_high);
    return within_lower(r, 1.0 - clip_low);
}

bool discrepancy_mask(double r_d, const MisConfig& cfg) {
    if (!(r_d > 0.0)) throw std::domain_error("ratio must be positive");
    check_finite(r_d, "r_d");
    if (cfg.mask_form == MaskForm::multiplicative) {
        return within_lower(r_d, 1.0 / cfg.disc_bound) && within_upper(r_d, cfg.disc_bound);
    }
    return within_lower(r_d, 1.0 - cfg.disc_bound) && within_upper(r_d, 1.0 + cfg.disc_bound);
}

bool variant_uses_ewma(MisVariant v) {
    return v == MisVariant::ppo_ewma || v == MisVariant::ppo_ewma_train_infer;
}

bool variant_needs_train_old(MisVariant v) {
    return v == MisVariant::ppo_standard || v == MisVariant::decoupled_train_infer;
}

bool variant_needs_prox(MisVariant v) {
    return variant_uses_ewma(v) || v == MisVariant::decoupled_async;
}

const char* variant_name(MisVariant v) {
    switch (v) {
        case MisVariant::ppo_standard: return "ppo_standard";
        case MisVariant::ppo_train_infer: return "ppo_train_infer";
        case MisVariant::decoupled_train_infer: return "decoupled_train_infer";
        case MisVariant::ppo_ewma: return "ppo_ewma";
        case MisVariant::ppo_ewma_train_infer: return "ppo_ewma_train_infer";
        case MisVariant::linear_prox: return "linear_prox";
        case MisVariant::linear_prox_train_infer: return "linear_prox_train_infer";
        case MisVariant::decoupled_async: return "decoupled_async";
    }
    return "?";
}

EffectiveBounds effective_bounds_from_config(const MisConfig& cfg, double alpha) {
    if (cfg.prox_interp == ProxInterp::loglinear) {
        if (cfg.mask_form == MaskForm::multiplicative)
            return effective_bounds_loglinear_mult(cfg.disc_bound, cfg.clip_low,
                                                   cfg.clip_high, alpha);
        return effective_bounds_loglinear(cfg.disc_bound, cfg.clip_low, cfg.clip_high, alpha);
    }
    if (cfg.mask_form == MaskForm::multiplicative)
        return effective_bounds_arithmetic_mult(cfg.disc_bound, cfg.clip_low,
                                                cfg.clip_high, alpha);
    return effective_bounds_arithmetic(cfg.disc_bound, cfg.clip_low, cfg.clip_high, alpha);
}

namespace {

double require_train_old(const TokenSample& s, MisVariant v) {
    if (!s.logp_train_old)
        throw MissingOldLogit(variant_name(v), s.rollout_version);
    return *s.logp_train_old;
}

double require_prox(const TokenSample& s, const std::optional<double>& prox, MisVariant v) {
    if (!prox) throw MissingOldLogit(variant_name(v), s.rollout_version);
    return *prox;
}

// interpolation variants: r1 = cur/prox, r2 = prox/behavior, weight carries
// r2*r1 = total. The log-linear exponents are computed directly from the
// total log-ratio so the proxy route and the reparameterized route share
// every weight bit; only the gates differ.
MisResult interp_result(const TokenSample& s, double logp_cur, int version_gap,
                        const MisConfig& cfg, bool masked) {
    const double alpha = cfg.alpha_rule == AlphaRule::per_gap
                             ? alpha_from_gap(std::max(1, version_gap))
                             : cfg.fixed_alpha;
    MisResult out;
    double log_total;
    if (cfg.prox_interp == ProxInterp::loglinear) {
        const double L = logp_cur - s.logp_infer_old;
        const double lr1 = alpha * L;
        const double lr2 = (1.0 - alpha) * L;
        out.r1 = std::exp(lr1);
        out.r2 = std::exp(lr2);
        log_total = lr1 + lr2;
    } else {
        const double p_old = std::exp(s.logp_infer_old);
        const double p_cur = std::exp(logp_cur);
        const double prox = alpha * p_old + (1.0 - alpha) * p_cur;
        out.r1 = p_cur / prox;
        out.r2 = prox / p_old;
        log_total = std::log(out.r1) + std::log(out.r2);
    }
    const double r_total = cfg.prox_interp == ProxInterp::loglinear
                               ? std::exp(log_total)
                               : out.r1 * out.r2;
    if (cfg.reparameterized_bounds) {
        const EffectiveBounds b = effective_bounds_from_config(cfg, alpha);
        out.disc_ok = !masked || (within_lower(r_total, b.mask_lo) &&
                                  within_upper(r_total, b.mask_hi));
        out.ppo_ok = s.advantage >= 0.0 ? within_upper(r_total, b.clip_hi_pos)
                                        : within_lower(r_total, b.clip_lo_neg);
    } else {
        out.disc_ok = !masked || discrepancy_mask(out.r2, cfg);
        out.ppo_ok = ppo_active_mask(out.r1, s.advantage, cfg.clip_low, cfg.clip_high);
    }
    out.active = out.disc_ok && out.ppo_ok;
    out.weight = r_total * s.advantage;
    return out;
}

}  // namespace

MisResult mis_weight(const TokenSample& s, double logp_cur,
                     std::optional<double> logp_prox, int version_gap,
                     const MisConfig& cfg) {
    check_finite(logp_cur, "logp_cur");
    const double A = s.advantage;
    MisResult out;
    switch (cfg.variant) {
        case MisVariant::ppo_standard: {
            const double ref = require_train_old(s, cfg.variant);
            out.r1 = std::exp(logp_cur - ref);
            out.ppo_ok = ppo_active_mask(out.r1, A, cfg.clip_low, cfg.clip_high);
            out.active = out.ppo_ok;
            out.weight = out.r1 * A;
            return out;
        }
        case MisVariant::ppo_train_infer: {
            out.r1 = std::exp(logp_cur - s.logp_infer_old);
            out.ppo_ok = ppo_active_mask(out.r1, A, cfg.clip_low, cfg.clip_high);
            out.active = out.ppo_ok;
            out.weight = out.r1 * A;
            return out;
        }
        case MisVariant::decoupled_train_infer: {
            const double ref = require_train_old(s, cfg.variant);
            out.r1 = std::exp(logp_cur - ref);
            out.r2 = std::exp(ref - s.logp_infer_old);
            out.disc_ok = discrepancy_mask(out.r2, cfg);
            out.ppo_ok = ppo_active_mask(out.r1, A, cfg.clip_low, cfg.clip_high);
            out.active = out.disc_ok && out.ppo_ok;
            // indicator-only role for the discrepancy side: no r2 in the weight
            out.weight = out.r1 * A;
            return out;
        }
        case MisVariant::ppo_ewma:
        case MisVariant::ppo_ewma_train_infer: {
            const double ref = require_prox(s, logp_prox, cfg.variant);
            const double lr1 = logp_cur - ref;
            const double lr2 = ref - s.logp_infer_old;
            out.r1 = std::exp(lr1);
            out.r2 = std::exp(lr2);
            out.ppo_ok = ppo_active_mask(out.r1, A, cfg.clip_low, cfg.clip_high);
            out.disc_ok = cfg.variant == MisVariant::ppo_ewma_train_infer
                              ? discrepancy_mask(out.r2, cfg)
                              : true;
            out.active = out.disc_ok && out.ppo_ok;
            out.weight = std::exp(lr1 + lr2) * A;  // r2 rides along multiplicatively
            return out;
        }
        case MisVariant::linear_prox:
            return interp_result(s, logp_cur, version_gap, cfg, /*masked=*/false);
        case MisVariant::linear_prox_train_infer:
            return interp_result(s, logp_cur, version_gap, cfg, /*masked=*/true);
        case MisVariant::decoupled_async: {
            const double ref = require_prox(s, logp_prox, cfg.variant);
            out.r1 = std::exp(logp_cur - ref);
            out.r2 = std::exp(ref - s.logp_infer_old);
            out.disc_ok = discrepancy_mask(out.r2, cfg);
            out.ppo_ok = ppo_active_mask(out.r1, A, cfg.clip_low, cfg.clip_high);
            out.active = out.disc_ok && out.ppo_ok;
            out.weight = out.r1 * A;
            return out;
        }
    }
    throw std::domain_error("unknown variant");
}

}  // namespace misim
