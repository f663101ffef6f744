#include "misim/policy.hpp"

#include <algorithm>
#include <cmath>

#include "misim/errors.hpp"

namespace misim {

namespace {

void check_range(const PolicyParams& params, int context, int token) {
    if (context < 0 || context >= params.num_contexts)
        throw std::domain_error("context " + std::to_string(context) + " out of range [0, " +
                                std::to_string(params.num_contexts) + ")");
    if (token < 0 || token >= params.vocab_size)
        throw std::domain_error("token " + std::to_string(token) + " out of range [0, " +
                                std::to_string(params.vocab_size) + ")");
}

// max-shifted log-sum-exp over a raw weight row
double log_sum_exp(const double* w, int n) {
    double m = w[0];
    for (int i = 1; i < n; ++i) m = std::max(m, w[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(w[i] - m);
    return m + std::log(s);
}

constexpr double kPi = 3.14159265358979323846;

// perturbation in [-magnitude, magnitude], pure in (seed, version, context, token)
double perturbation(const DiscrepancyModel& disc, std::uint64_t version, int context,
                    int token) {
    if (disc.magnitude == 0.0) return 0.0;
    const std::uint64_t bits =
        mix64(disc.seed, version, static_cast<std::uint64_t>(context),
              static_cast<std::uint64_t>(token));
    if (disc.mode == DiscMode::deterministic_hash) {
        return (2.0 * unit_from_bits(bits) - 1.0) * disc.magnitude;
    }
    // seeded_noise: gaussian with sigma = magnitude/3, clamped to +-magnitude
    // (clamping keeps the documented |infer - train| <= 2*magnitude envelope)
    double u1 = unit_from_bits(bits);
    double u2 = unit_from_bits(mix64(bits, 0x6e6f697365ULL));
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    return std::clamp(g * (disc.magnitude / 3.0), -disc.magnitude, disc.magnitude);
}

}  // namespace

PolicyParams PolicyParams::zeros(int num_contexts, int vocab_size) {
    PolicyParams p;
    p.num_contexts = num_contexts;
    p.vocab_size = vocab_size;
    p.weights.assign(static_cast<std::size_t>(num_contexts) * vocab_size, 0.0);
    return p;
}

std::vector<double> logprob_train_row(const PolicyParams& params, int context) {
    check_range(params, context, 0);
    const double* w = params.row(context);
    const int n = params.vocab_size;
    const double lse = log_sum_exp(w, n);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = w[i] - lse;
    return out;
}

double logprob_train(const PolicyParams& params, int context, int token) {
    check_range(params, context, token);
    const double* w = params.row(context);
    return w[token] - log_sum_exp(w, params.vocab_size);
}

std::vector<double> logprob_infer_row(const PolicyParams& params, int context,
                                      const DiscrepancyModel& disc,
                                      std::uint64_t version) {
    std::vector<double> row = logprob_train_row(params, context);
    if (disc.magnitude == 0.0) return row;  // zero-perturbation identity, bitwise
    const int n = params.vocab_size;
    for (int i = 0; i < n; ++i)
        row[static_cast<std::size_t>(i)] += perturbation(disc, version, context, i);
    const double lse = log_sum_exp(row.data(), n);
    for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] -= lse;
    return row;
}

double logprob_infer(const PolicyParams& params, int context, int token,
                     const DiscrepancyModel& disc, std::uint64_t version) {
    check_range(params, context, token);
    return logprob_infer_row(params, context, disc, version)[static_cast<std::size_t>(token)];
}

std::vector<double> grad_logprob_row(const PolicyParams& params, int context, int token) {
    check_range(params, context, token);
    std::vector<double> row = logprob_train_row(params, context);
    for (double& v : row) v = -std::exp(v);
    row[static_cast<std::size_t>(token)] += 1.0;
    return row;
}

std::vector<double> grad_logprob(const PolicyParams& params, int context, int token) {
    std::vector<double> g(params.weights.size(), 0.0);
    const std::vector<double> row = grad_logprob_row(params, context, token);
    std::copy(row.begin(), row.end(),
              g.begin() + static_cast<std::size_t>(context) * params.vocab_size);
    return g;
}

int draw_token(const std::vector<double>& logp_row, double u) {
    double acc = 0.0;
    const int n = static_cast<int>(logp_row.size());
    for (int i = 0; i < n; ++i) {
        acc += std::exp(logp_row[static_cast<std::size_t>(i)]);
        if (u < acc) return i;
    }
    return n - 1;  // u landed in the rounding tail
}

Episode sample_episode(const VersionedParams& vp, const SyntheticTask& task,
                       const DiscrepancyModel& disc, Rng& rng, int context) {
    if (task.horizon < 1) throw std::domain_error("horizon must be >= 1");
    check_range(vp.params, context, 0);
    Episode ep;
    ep.context = context;
    const std::vector<double> row =
        logprob_infer_row(vp.params, context, disc, vp.version);
    std::vector<int> toks;
    toks.reserve(static_cast<std::size_t>(task.horizon));
    for (int pos = 0; pos < task.horizon; ++pos) {
        const int tok = draw_token(row, rng.next_uniform());
        toks.push_back(tok);
        TokenSample s;
        s.context = context;
        s.token = tok;
        s.rollout_version = vp.version;
        s.logp_infer_old = row[static_cast<std::size_t>(tok)];
        s.position = pos;
        ep.tokens.push_back(s);
    }
    ep.reward = episode_reward(task, context, toks);
    return ep;
}

Episode sample_episode(const VersionedParams& vp, const SyntheticTask& task,
                       const DiscrepancyModel& disc, Rng& rng) {
    const int context = static_cast<int>(rng.next_below(
        static_cast<std::uint64_t>(task.num_contexts)));
    return sample_episode(vp, task, disc, rng, context);
}

double episode_reward(const SyntheticTask& task, int context,
                      const std::vector<int>& tokens) {
    if (tokens.empty()) return 0.0;
    if (task.reward_mode == RewardMode::terminal_token)
        return task.table_entry(context, tokens.back());
    double s = 0.0;
    for (int t : tokens) s += task.table_entry(context, t);
    return s / static_cast<double>(tokens.size());
}

double normalized_reward(const SyntheticTask& task, double raw) {
    const double span = task.reward_max - task.reward_min;
    if (span <= 0.0) return 0.0;
    return std::clamp((raw - task.reward_min) / span, 0.0, 1.0);
}

}  // namespace misim
