#include "misim/proxy.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "misim/errors.hpp"

namespace misim {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("alpha must lie in (0,1), got " + std::to_string(alpha));
}

void check_eps(double eps, const char* name) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::domain_error(std::string(name) + " must lie in (0,1)");
}

}  // namespace

double alpha_from_gap(int n) {
    if (n < 1) throw std::domain_error("version gap must be >= 1, got " + std::to_string(n));
    return 1.0 / (n + 1);
}

double linear_prox(double p_old_infer, double p_cur, double alpha) {
    check_alpha(alpha);
    if (!(p_old_infer > 0.0 && p_old_infer <= 1.0) || !(p_cur > 0.0 && p_cur <= 1.0))
        throw std::domain_error("probabilities must lie in (0,1]");
    return alpha * p_old_infer + (1.0 - alpha) * p_cur;
}

double loglinear_prox(double logp_old_infer, double logp_cur, double alpha) {
    check_alpha(alpha);
    return alpha * logp_old_infer + (1.0 - alpha) * logp_cur;
}

EffectiveBounds effective_bounds_loglinear(double mask_eps, double clip_eps_low,
                                           double clip_eps_high, double alpha) {
    check_alpha(alpha);
    check_eps(mask_eps, "mask_eps");
    check_eps(clip_eps_low, "clip_eps_low");
    check_eps(clip_eps_high, "clip_eps_high");
    EffectiveBounds b;
    const double inv_mask = 1.0 / (1.0 - alpha);
    b.mask_lo = std::pow(1.0 - mask_eps, inv_mask);
    b.mask_hi = std::pow(1.0 + mask_eps, inv_mask);
    b.clip_hi_pos = std::pow(1.0 + clip_eps_high, 1.0 / alpha);
    b.clip_lo_neg = std::pow(1.0 - clip_eps_low, 1.0 / alpha);
    return b;
}

EffectiveBounds effective_bounds_arithmetic(double mask_eps, double clip_eps_low,
                                            double clip_eps_high, double alpha) {
    check_alpha(alpha);
    check_eps(mask_eps, "mask_eps");
    check_eps(clip_eps_low, "clip_eps_low");
    check_eps(clip_eps_high, "clip_eps_high");
    EffectiveBounds b;
    b.mask_lo = 1.0 - mask_eps / (1.0 - alpha);
    b.mask_hi = 1.0 + mask_eps / (1.0 - alpha);
    const double den_hi = 1.0 - (1.0 - alpha) * (1.0 + clip_eps_high);
    if (den_hi <= 0.0)
        throw SingularBound("arithmetic clip bound degenerates: (1-alpha)*(1+eps) >= 1 at alpha=" +
                            std::to_string(alpha) + ", eps=" + std::to_string(clip_eps_high));
    b.clip_hi_pos = alpha * (1.0 + clip_eps_high) / den_hi;
    // lower denominator 1-(1-a)(1-e) >= a > 0, cannot degenerate in-domain
    b.clip_lo_neg = alpha * (1.0 - clip_eps_low) / (1.0 - (1.0 - alpha) * (1.0 - clip_eps_low));
    return b;
}

EffectiveBounds effective_bounds_loglinear_mult(double mask_c, double clip_eps_low,
                                                double clip_eps_high, double alpha) {
    check_alpha(alpha);
    if (!(mask_c > 1.0)) throw std::domain_error("multiplicative mask bound must be > 1");
    check_eps(clip_eps_low, "clip_eps_low");
    check_eps(clip_eps_high, "clip_eps_high");
    EffectiveBounds b;
    const double inv_mask = 1.0 / (1.0 - alpha);
    b.mask_lo = std::pow(1.0 / mask_c, inv_mask);
    b.mask_hi = std::pow(mask_c, inv_mask);
    b.clip_hi_pos = std::pow(1.0 + clip_eps_high, 1.0 / alpha);
    b.clip_lo_neg = std::pow(1.0 - clip_eps_low, 1.0 / alpha);
    return b;
}

EffectiveBounds effective_bounds_arithmetic_mult(double mask_c, double clip_eps_low,
                                                 double clip_eps_high, double alpha) {
    check_alpha(alpha);
    if (!(mask_c > 1.0)) throw std::domain_error("multiplicative mask bound must be > 1");
    EffectiveBounds b;
    // r2 = a + (1-a) r is increasing in r, so the band maps endpoint-wise
    b.mask_lo = (1.0 / mask_c - alpha) / (1.0 - alpha);
    b.mask_hi = (mask_c - alpha) / (1.0 - alpha);
    const EffectiveBounds clip =
        effective_bounds_arithmetic(0.5, clip_eps_low, clip_eps_high, alpha);
    b.clip_hi_pos = clip.clip_hi_pos;
    b.clip_lo_neg = clip.clip_lo_neg;
    return b;
}

EwmaState ewma_init(double beta, double tau, bool normalized) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0,1)");
    if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau must lie in (0,1)");
    EwmaState s;
    s.beta = beta;
    s.tau = tau;
    s.normalized = normalized;
    return s;
}

EwmaState ewma_update(EwmaState state, const PolicyParams& theta_t) {
    if (state.primed && !state.theta_prox.same_shape(theta_t))
        throw std::domain_error("ewma_update: parameter shape mismatch");
    if (!state.primed) {
        // first absorb is a copy: the reference starts exactly at the actor
        state.theta_prox = theta_t;
        state.weight_sum = 1.0;
        state.step += 1;
        state.primed = true;
        return state;
    }
    state.step += 1;
    const double w_new = 1.0 + state.beta * state.weight_sum;
    if (state.normalized) {
        const double a = 1.0 / w_new;
        const double b = state.beta * (state.weight_sum / w_new);
        double* prox = state.theta_prox.weights.data();
        const double* th = theta_t.weights.data();
        const std::size_t n = state.theta_prox.weights.size();
        for (std::size_t i = 0; i < n; ++i) prox[i] = a * th[i] + b * prox[i];
    } else {
        const double b = state.beta;
        double* prox = state.theta_prox.weights.data();
        const double* th = theta_t.weights.data();
        const std::size_t n = state.theta_prox.weights.size();
        for (std::size_t i = 0; i < n; ++i) prox[i] = b * prox[i] + (1.0 - b) * th[i];
    }
    state.weight_sum = w_new;
    return state;
}

double ewma_center_of_mass(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0,1)");
    return beta / (1.0 - beta);
}

double staleness_decay(double W) {
    if (!(W > 0.0)) throw std::domain_error("window must be positive");
    return W / (W + 2.0);
}

EwmaState maybe_reset(EwmaState state, double rho_t, const PolicyParams& theta_t) {
    if (rho_t < state.tau) {
        state.theta_prox = theta_t;
        state.weight_sum = 1.0;
        state.reset_count += 1;
        state.primed = true;
    }
    return state;
}

void save_ewma(const EwmaState& state, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = 1;
    j["beta"] = state.beta;
    j["tau"] = state.tau;
    j["step"] = state.step;
    j["weight_sum"] = state.weight_sum;
    j["reset_count"] = state.reset_count;
    j["normalized"] = state.normalized;
    j["primed"] = state.primed;
    j["num_contexts"] = state.theta_prox.num_contexts;
    j["vocab_size"] = state.theta_prox.vocab_size;
    j["weights"] = state.theta_prox.weights;
    std::ofstream out(path);
    if (!out) throw SnapshotIoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

EwmaState load_ewma(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SnapshotIoError("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.value("format", 0) != 1)
        throw SnapshotIoError("unsupported checkpoint format in " + path.string());
    EwmaState s = ewma_init(j.at("beta").get<double>(), j.at("tau").get<double>(),
                            j.at("normalized").get<bool>());
    s.step = j.at("step").get<int>();
    s.weight_sum = j.at("weight_sum").get<double>();
    s.reset_count = j.at("reset_count").get<int>();
    s.primed = j.at("primed").get<bool>();
    s.theta_prox.num_contexts = j.at("num_contexts").get<int>();
    s.theta_prox.vocab_size = j.at("vocab_size").get<int>();
    s.theta_prox.weights = j.at("weights").get<std::vector<double>>();
    return s;
}

}  // namespace misim
