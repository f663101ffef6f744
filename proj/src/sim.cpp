#include "misim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>
#include <set>

#include "misim/errors.hpp"

namespace misim {

namespace {

constexpr std::uint64_t kTagContext = 0xC1;
constexpr std::uint64_t kTagToken = 0x7C;
constexpr std::uint64_t kTagRolloutLat = 0x51;
constexpr std::uint64_t kTagUpdateLat = 0x52;

int context_of_group(std::uint64_t seed, std::uint64_t group, int num_contexts) {
    return static_cast<int>(hash_unit(seed, kTagContext, group, 0) *
                            static_cast<double>(num_contexts));
}

}  // namespace

double LatencyDist::draw(std::uint64_t seed, std::uint64_t tag, std::uint64_t k1,
                         std::uint64_t k2) const {
    switch (kind) {
        case Kind::fixed:
            return a;
        case Kind::uniform:
            return a + (b - a) * hash_unit(seed, tag, k1, k2);
        case Kind::exponential: {
            const double u = hash_unit(seed, tag, k1, k2);
            return -a * std::log1p(-u);
        }
    }
    return a;
}

const char* event_name(SimEventKind k) {
    switch (k) {
        case SimEventKind::rollout_complete: return "rollout_complete";
        case SimEventKind::rollout_partial: return "rollout_partial";
        case SimEventKind::update_begin: return "update_begin";
        case SimEventKind::update_end: return "update_end";
        case SimEventKind::interrupt: return "interrupt";
        case SimEventKind::weights_sync: return "weights_sync";
    }
    return "?";
}

std::vector<double> compute_advantages(const std::vector<double>& rewards, int group_size,
                                       AdvantageMode mode, double std_guard) {
    if (group_size < 1) throw ConfigError("group_size must be >= 1");
    if (rewards.empty() || rewards.size() % static_cast<std::size_t>(group_size) != 0)
        throw ConfigError("reward list length must be a positive multiple of group_size");
    if (mode == AdvantageMode::group_normalized && group_size < 2)
        throw ConfigError("group-normalized advantages need group_size >= 2");
    std::vector<double> out(rewards.size());
    const std::size_t g = static_cast<std::size_t>(group_size);
    for (std::size_t base = 0; base < rewards.size(); base += g) {
        double mean = 0.0;
        for (std::size_t i = 0; i < g; ++i) mean += rewards[base + i];
        mean /= static_cast<double>(g);
        if (mode == AdvantageMode::reward_minus_mean) {
            for (std::size_t i = 0; i < g; ++i) out[base + i] = rewards[base + i] - mean;
            continue;
        }
        double var = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
            const double d = rewards[base + i] - mean;
            var += d * d;
        }
        const double std = std::sqrt(var / static_cast<double>(g));
        for (std::size_t i = 0; i < g; ++i)
            out[base + i] = (rewards[base + i] - mean) / (std + std_guard);
    }
    return out;
}

StepMetrics trainer_step(TrainerState& st, std::vector<TokenSample>& batch,
                         const MisConfig& mis, double learning_rate,
                         const SyntheticTask& task,
                         const std::vector<double>& episode_rewards) {
    if (batch.empty()) throw ProtocolError("trainer_step: empty batch");
    const int vocab = st.params.vocab_size;
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(st.params.num_contexts));
    std::vector<std::vector<double>> prox_rows(rows.size());
    auto row_of = [&](int c) -> const std::vector<double>& {
        auto& r = rows[static_cast<std::size_t>(c)];
        if (r.empty()) r = logprob_train_row(st.params, c);
        return r;
    };
    auto prox_row_of = [&](int c) -> const std::vector<double>& {
        auto& r = prox_rows[static_cast<std::size_t>(c)];
        if (r.empty()) r = logprob_train_row(st.ewma.theta_prox, c);
        return r;
    };

    std::vector<double> gbuf(st.params.weights.size(), 0.0);
    int active = 0;
    int clipped = 0;
    double gap_sum = 0.0;
    int gap_max = 0;
    for (TokenSample& s : batch) {
        const std::vector<double>& row = row_of(s.context);
        const double logp_cur = row[static_cast<std::size_t>(s.token)];
        std::optional<double> prox;
        if (variant_uses_ewma(mis.variant)) {
            if (!st.ewma_enabled)
                throw ProtocolError("trainer_step: variant needs a reference but none is enabled");
            prox = prox_row_of(s.context)[static_cast<std::size_t>(s.token)];
        } else if (mis.variant == MisVariant::decoupled_async) {
            // the only reference an asynchronous consumer has is itself
            prox = logp_cur;
        }
        if (s.rollout_version > st.version)
            throw ProtocolError("trainer_step: sample from the future");
        const int gap = static_cast<int>(st.version - s.rollout_version);
        gap_sum += gap;
        gap_max = std::max(gap_max, gap);
        const MisResult r = mis_weight(s, logp_cur, prox, gap, mis);
        if (!r.ppo_ok) ++clipped;
        if (r.active) {
            ++active;
            double* g = gbuf.data() + static_cast<std::size_t>(s.context) * vocab;
            for (int j = 0; j < vocab; ++j)
                g[j] += r.weight *
                        ((j == s.token ? 1.0 : 0.0) - std::exp(row[static_cast<std::size_t>(j)]));
        }
    }
    const double scale = learning_rate / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < gbuf.size(); ++i) st.params.weights[i] += scale * gbuf[i];
    st.version += 1;

    const double rho = static_cast<double>(active) / static_cast<double>(batch.size());
    if (st.ewma_enabled) {
        st.ewma = ewma_update(std::move(st.ewma), st.params);
        if (mis.ewma.auto_reset)
            st.ewma = maybe_reset(std::move(st.ewma), rho, st.params);
    }

    StepMetrics m;
    m.mask_fraction = rho;
    m.ppo_clip_fraction = static_cast<double>(clipped) / static_cast<double>(batch.size());
    m.batch_tokens = static_cast<int>(batch.size());
    m.active_tokens = active;
    m.mean_version_gap = gap_sum / static_cast<double>(batch.size());
    m.max_gap = gap_max;
    m.reset_events = st.ewma_enabled ? st.ewma.reset_count : 0;
    if (!episode_rewards.empty()) {
        double rsum = 0.0, nsum = 0.0;
        for (double r : episode_rewards) {
            rsum += r;
            nsum += normalized_reward(task, r);
        }
        m.mean_reward = rsum / static_cast<double>(episode_rewards.size());
        m.task_success = nsum / static_cast<double>(episode_rewards.size());
    }
    return m;
}

void validate(const SimConfig& cfg, const SyntheticTask& task) {
    if (task.num_contexts < 1 || task.vocab_size < 1)
        throw ConfigError("task shape must be positive");
    if (task.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (task.reward_table.size() !=
        static_cast<std::size_t>(task.num_contexts) * task.vocab_size)
        throw ConfigError("reward table must have num_contexts*vocab_size entries");
    if (!(task.reward_max > task.reward_min))
        throw ConfigError("reward range must be nonempty");
    for (double r : task.reward_table)
        if (r < task.reward_min || r > task.reward_max)
            throw ConfigError("reward table entry outside the declared range");
    if (cfg.num_workers < 1) throw ConfigError("num_workers must be >= 1");
    if (cfg.max_version_gap < 1) throw ConfigError("max_version_gap must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.group_size < 1) throw ConfigError("group_size must be >= 1");
    if (cfg.batch_size % cfg.group_size != 0)
        throw ConfigError("batch_size must be divisible by group_size");
    if (cfg.advantage_mode == AdvantageMode::group_normalized && cfg.group_size < 2)
        throw ConfigError("group-normalized advantages need group_size >= 2");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (cfg.total_updates < 1) throw ConfigError("total_updates must be >= 1");
    if (cfg.snapshot_max_resident < 1)
        throw ConfigError("snapshot_max_resident must be >= 1");
    if (cfg.strategy == StrategyKind::partial_interrupt && !cfg.partial_rollout)
        throw ConfigError("partial_interrupt strategy requires partial_rollout=true");
    const MisConfig& mis = cfg.mis;
    if (!(mis.clip_low > 0.0 && mis.clip_low < 1.0) ||
        !(mis.clip_high > 0.0 && mis.clip_high < 1.0))
        throw ConfigError("clip bounds must lie in (0,1)");
    if (mis.mask_form == MaskForm::multiplicative) {
        if (!(mis.disc_bound > 1.0))
            throw ConfigError("multiplicative discrepancy bound must be > 1");
    } else if (!(mis.disc_bound > 0.0 && mis.disc_bound < 1.0)) {
        throw ConfigError("additive discrepancy bound must lie in (0,1)");
    }
    if (mis.alpha_rule == AlphaRule::fixed &&
        !(mis.fixed_alpha > 0.0 && mis.fixed_alpha < 1.0))
        throw ConfigError("fixed_alpha must lie in (0,1)");
    if (!(mis.ewma.beta > 0.0 && mis.ewma.beta < 1.0))
        throw ConfigError("ewma beta must lie in (0,1)");
    if (!(mis.ewma.tau > 0.0 && mis.ewma.tau < 1.0))
        throw ConfigError("ewma tau must lie in (0,1)");
    auto check_lat = [](const LatencyDist& d, const char* name) {
        if (d.a < 0.0 || (d.kind == LatencyDist::Kind::uniform && d.b < d.a))
            throw ConfigError(std::string(name) + ": invalid latency parameters");
    };
    check_lat(cfg.rollout_latency, "rollout_latency");
    check_lat(cfg.update_latency, "update_latency");
    if (cfg.cost.save_latency < 0 || cfg.cost.load_latency < 0 ||
        cfg.cost.restore_latency < 0 || cfg.cost.forward_latency < 0 ||
        cfg.cost.storage_per_snapshot < 0)
        throw ConfigError("cost model entries must be non-negative");
}

namespace {

struct Traj {
    std::uint64_t index = 0;
    int context = 0;
    std::vector<TokenSample> tokens;
    bool complete = false;
    bool consumed = false;
    bool dropped = false;
};

struct Worker {
    bool busy = false;
    std::uint64_t traj = 0;
    std::uint64_t version = 0;
    double pause_until = 0.0;
};

struct Ev {
    double time = 0.0;
    int prio = 0;  // update_end applies before token ticks at equal time
    std::uint64_t seq = 0;
    int kind = 0;  // 0 update_end, 1 token tick
    std::uint64_t a = 0;
};

struct EvAfter {
    bool operator()(const Ev& x, const Ev& y) const {
        if (x.time != y.time) return x.time > y.time;
        if (x.prio != y.prio) return x.prio > y.prio;
        return x.seq > y.seq;
    }
};

class AsyncSim {
public:
    AsyncSim(const SimConfig& cfg, const SyntheticTask& task, const DiscrepancyModel& disc)
        : cfg_(cfg),
          task_(task),
          disc_(disc),
          store_(cfg.snapshot_max_resident, cfg.cost) {}

    SimResult run() {
        init();
        std::uint64_t pops = 0;
        const std::uint64_t pop_limit =
            50'000'000ULL + 1'000'000ULL * static_cast<std::uint64_t>(cfg_.total_updates);
        while (completed_updates_ < cfg_.total_updates) {
            if (heap_.empty())
                throw ProtocolError("simulation stalled: no events while updates remain");
            if (++pops > pop_limit)
                throw ProtocolError("simulation made no progress within the event budget");
            const Ev ev = heap_.top();
            heap_.pop();
            now_ = ev.time;
            if (ev.kind == 0)
                on_update_end(ev.a);
            else
                on_tick(static_cast<int>(ev.a));
        }
        return finalize();
    }

private:
    void log(SimEventKind kind, std::uint64_t a, std::uint64_t b) {
        if (!cfg_.record_trace) return;
        SimEvent e;
        e.time = now_;
        e.kind = kind;
        e.seq = trace_.size();
        e.a = a;
        e.b = b;
        result_trace_push(e);
    }
    void result_trace_push(const SimEvent& e) { trace_.push_back(e); }

    std::uint64_t admission_window() const {
        return static_cast<std::uint64_t>(cfg_.batch_size) *
                   (static_cast<std::uint64_t>(completed_updates_) +
                    static_cast<std::uint64_t>(cfg_.max_version_gap)) +
               dropped_traj_;
    }

    void push_tick(int worker, double t) {
        heap_.push(Ev{t, 1, seq_++, 1, static_cast<std::uint64_t>(worker)});
    }

    void init() {
        validate(cfg_, task_);
        trainer_.params = PolicyParams::zeros(task_.num_contexts, task_.vocab_size);
        trainer_.version = 0;
        trainer_.ewma_enabled = variant_uses_ewma(cfg_.mis.variant);
        if (trainer_.ewma_enabled) {
            trainer_.ewma = ewma_init(cfg_.mis.ewma.beta, cfg_.mis.ewma.tau,
                                      cfg_.mis.ewma.normalized);
            trainer_.ewma = ewma_update(std::move(trainer_.ewma), trainer_.params);
        }
        published_.push_back(trainer_.params);
        if (cfg_.strategy == StrategyKind::snapshot)
            pending_cost_ += store_.put(VersionedParams{0, trainer_.params});
        workers_.assign(static_cast<std::size_t>(cfg_.num_workers), Worker{});
        for (int w = 0; w < cfg_.num_workers; ++w) try_start(w, 0.0);
    }

    void try_start(int w, double t) {
        Worker& wk = workers_[static_cast<std::size_t>(w)];
        if (wk.busy) return;
        if (started_ >= admission_window()) return;
        const std::uint64_t idx = started_++;
        Traj tr;
        tr.index = idx;
        tr.context = context_of_group(
            cfg_.seed, idx / static_cast<std::uint64_t>(cfg_.group_size), task_.num_contexts);
        trajs_.push_back(std::move(tr));
        wk.busy = true;
        wk.traj = idx;
        wk.version = published_.size() - 1;
        push_tick(w, std::max(t, wk.pause_until) +
                         cfg_.rollout_latency.draw(cfg_.seed, kTagRolloutLat, idx, 0));
    }

    void wake_idle(double t) {
        for (int w = 0; w < cfg_.num_workers; ++w) try_start(w, t);
    }

    const std::vector<double>& infer_row(std::uint64_t version, int context) {
        const std::uint64_t key =
            version * static_cast<std::uint64_t>(task_.num_contexts) +
            static_cast<std::uint64_t>(context);
        auto it = row_cache_.find(key);
        if (it != row_cache_.end()) return it->second;
        return row_cache_
            .emplace(key, logprob_infer_row(published_[static_cast<std::size_t>(version)],
                                            context, disc_, version))
            .first->second;
    }

    void on_tick(int w) {
        Worker& wk = workers_[static_cast<std::size_t>(w)];
        if (now_ < wk.pause_until) {  // tick was scheduled before the pause landed
            heap_.push(Ev{wk.pause_until, 1, seq_++, 1, static_cast<std::uint64_t>(w)});
            return;
        }
        Traj& tr = trajs_[wk.traj];
        const int pos = static_cast<int>(tr.tokens.size());
        const std::vector<double>& row = infer_row(wk.version, tr.context);
        const double u = hash_unit(cfg_.seed, kTagToken, tr.index, static_cast<std::uint64_t>(pos));
        const int tok = draw_token(row, u);
        TokenSample s;
        s.context = tr.context;
        s.token = tok;
        s.rollout_version = wk.version;
        s.logp_infer_old = row[static_cast<std::size_t>(tok)];
        s.position = pos;
        s.traj_index = tr.index;
        tr.tokens.push_back(s);
        ++tokens_generated_;
        if (pos + 1 == task_.horizon) {
            tr.complete = true;
            log(SimEventKind::rollout_complete, tr.index, wk.version);
            wk.busy = false;
            try_start(w, now_);
            try_consume(now_);
        } else {
            push_tick(w, now_ + cfg_.rollout_latency.draw(cfg_.seed, kTagRolloutLat, tr.index,
                                                          static_cast<std::uint64_t>(pos + 1)));
        }
    }

    // drop-reason check for the group starting at trajectory index `base`
    std::string group_drop_reason(std::uint64_t base) {
        const std::uint64_t v_now = trainer_.version;
        for (std::uint64_t i = base; i < base + static_cast<std::uint64_t>(cfg_.group_size); ++i) {
            for (const TokenSample& s : trajs_[i].tokens) {
                if (v_now - s.rollout_version >
                    static_cast<std::uint64_t>(cfg_.max_version_gap))
                    return "staleness_overflow";
                switch (cfg_.strategy) {
                    case StrategyKind::snapshot:
                        if (!store_.resident(s.rollout_version))
                            return "snapshot_evicted:v=" + std::to_string(s.rollout_version);
                        break;
                    case StrategyKind::none:
                        if (variant_needs_train_old(cfg_.mis.variant) &&
                            s.rollout_version < v_now && !s.logp_train_old)
                            return "missing_old_logit:v=" + std::to_string(s.rollout_version);
                        break;
                    default:
                        break;  // dedicated archives every version; interrupt pre-fills
                }
            }
        }
        return {};
    }

    void drop_group(std::uint64_t base, const std::string& reason) {
        for (std::uint64_t i = base; i < base + static_cast<std::uint64_t>(cfg_.group_size); ++i) {
            Traj& tr = trajs_[i];
            tr.dropped = true;
            DropRecord d;
            d.traj_index = i;
            d.reason = group_drop_reason_for_traj(i, reason);
            d.tokens = static_cast<int>(tr.tokens.size());
            if (!tr.tokens.empty()) {
                d.version_lo = tr.tokens.front().rollout_version;
                d.version_hi = tr.tokens.front().rollout_version;
                for (const TokenSample& s : tr.tokens) {
                    d.version_lo = std::min(d.version_lo, s.rollout_version);
                    d.version_hi = std::max(d.version_hi, s.rollout_version);
                }
            }
            tokens_dropped_ += static_cast<std::int64_t>(tr.tokens.size());
            drops_.push_back(std::move(d));
        }
        dropped_traj_ += static_cast<std::uint64_t>(cfg_.group_size);
    }

    // the triggering trajectory keeps the root cause; companions are labeled as such
    std::string group_drop_reason_for_traj(std::uint64_t idx, const std::string& root) {
        const std::uint64_t v_now = trainer_.version;
        for (const TokenSample& s : trajs_[idx].tokens) {
            if (v_now - s.rollout_version > static_cast<std::uint64_t>(cfg_.max_version_gap))
                return root;
            if (cfg_.strategy == StrategyKind::snapshot && !store_.resident(s.rollout_version))
                return root;
            if (cfg_.strategy == StrategyKind::none &&
                variant_needs_train_old(cfg_.mis.variant) && s.rollout_version < v_now &&
                !s.logp_train_old)
                return root;
        }
        return "group_companion";
    }

    void try_consume(double t) {
        while (!trainer_busy_ && completed_updates_ < cfg_.total_updates) {
            const int groups_needed = cfg_.batch_size / cfg_.group_size;
            std::vector<std::uint64_t> picked;
            bool blocked = false;
            bool dropped_any = false;
            while (static_cast<int>(picked.size()) < groups_needed) {
                const std::uint64_t base = cursor_;
                const std::uint64_t end = base + static_cast<std::uint64_t>(cfg_.group_size);
                if (end > started_) {
                    blocked = true;
                    break;
                }
                if (trajs_[base].dropped) {  // a rewound scan must not re-drop
                    cursor_ = end;
                    continue;
                }
                bool all_complete = true;
                for (std::uint64_t i = base; i < end; ++i)
                    if (!trajs_[i].complete) {
                        all_complete = false;
                        break;
                    }
                if (!all_complete) {
                    blocked = true;
                    break;
                }
                const std::string reason = group_drop_reason(base);
                if (!reason.empty()) {
                    drop_group(base, reason);
                    cursor_ = end;
                    dropped_any = true;
                    continue;
                }
                picked.push_back(base);
                cursor_ = end;
            }
            if (blocked || static_cast<int>(picked.size()) < groups_needed) {
                // a partial scan must not consume its picks; rewind to the first pick
                if (!picked.empty()) cursor_ = picked.front();
                if (dropped_any) wake_idle(t);  // drops reopened admission slots
                return;
            }
            if (dropped_any) wake_idle(t);
            consume(picked, t);
        }
    }

    void consume(const std::vector<std::uint64_t>& group_bases, double t) {
        trainer_busy_ = true;
        const int step = completed_updates_ + 1;
        const std::uint64_t v_now = trainer_.version;
        CostReport step_cost = pending_cost_;
        pending_cost_ = CostReport{};

        std::vector<TokenSample> batch;
        std::vector<double> rewards;
        std::vector<std::uint64_t> batch_trajs;
        for (std::uint64_t base : group_bases)
            for (std::uint64_t i = base; i < base + static_cast<std::uint64_t>(cfg_.group_size);
                 ++i)
                batch_trajs.push_back(i);
        for (std::uint64_t i : batch_trajs) {
            Traj& tr = trajs_[i];
            std::vector<int> toks;
            toks.reserve(tr.tokens.size());
            for (const TokenSample& s : tr.tokens) toks.push_back(s.token);
            rewards.push_back(episode_reward(task_, tr.context, toks));
            for (const TokenSample& s : tr.tokens) batch.push_back(s);
        }

        const double dur = cfg_.update_latency.draw(cfg_.seed, kTagUpdateLat,
                                                    static_cast<std::uint64_t>(step), 0);
        const double t_end = t + dur;

        if (cfg_.strategy == StrategyKind::partial_interrupt) {
            log(SimEventKind::interrupt, static_cast<std::uint64_t>(step), v_now);
            std::vector<TokenSample*> unfilled;
            for (TokenSample& s : batch)
                if (!s.logp_train_old) unfilled.push_back(&s);
            for (Traj& tr : trajs_) {
                if (tr.consumed || tr.dropped) continue;
                bool in_batch = false;
                for (std::uint64_t i : batch_trajs)
                    if (i == tr.index) {
                        in_batch = true;
                        break;
                    }
                if (in_batch) continue;
                for (TokenSample& s : tr.tokens)
                    if (!s.logp_train_old) unfilled.push_back(&s);
            }
            const CostReport pass = partial_interrupt_pass(
                VersionedParams{v_now, trainer_.params},
                std::span<TokenSample*>(unfilled.data(), unfilled.size()), cfg_.cost);
            step_cost += pass;
            const double resume = std::max(t + pass.wall_time, t_end);
            for (Worker& wk : workers_) wk.pause_until = std::max(wk.pause_until, resume);
        }

        log(SimEventKind::update_begin, static_cast<std::uint64_t>(step), v_now);

        switch (cfg_.strategy) {
            case StrategyKind::snapshot:
                step_cost +=
                    recover_old_logits(store_, std::span<TokenSample>(batch.data(), batch.size()));
                break;
            case StrategyKind::dedicated_model: {
                std::set<std::uint64_t> versions;
                for (const TokenSample& s : batch) versions.insert(s.rollout_version);
                for (std::uint64_t v : versions) {
                    std::vector<std::size_t> idxs;
                    std::vector<TokenSample> seg;
                    for (std::size_t i = 0; i < batch.size(); ++i)
                        if (batch[i].rollout_version == v) {
                            idxs.push_back(i);
                            seg.push_back(batch[i]);
                        }
                    step_cost += dedicated_model_recover(
                        VersionedParams{v, published_[static_cast<std::size_t>(v)]},
                        std::span<TokenSample>(seg.data(), seg.size()), cfg_.cost, dur,
                        cfg_.dedicated_overlap);
                    for (std::size_t k = 0; k < idxs.size(); ++k)
                        batch[idxs[k]].logp_train_old = seg[k].logp_train_old;
                }
                break;
            }
            case StrategyKind::partial_interrupt:
                break;  // this step's pass and the earlier retire passes covered everything
            case StrategyKind::none:
                for (TokenSample& s : batch)
                    if (s.rollout_version == v_now && !s.logp_train_old)
                        s.logp_train_old = logprob_train(trainer_.params, s.context, s.token);
                break;
        }

        const std::vector<double> advs = compute_advantages(
            rewards, cfg_.group_size, cfg_.advantage_mode, cfg_.advantage_std_guard);
        {
            std::size_t ti = 0;
            for (std::size_t k = 0; k < batch_trajs.size(); ++k) {
                const Traj& tr = trajs_[batch_trajs[k]];
                for (std::size_t j = 0; j < tr.tokens.size(); ++j) batch[ti + j].advantage = advs[k];
                ti += tr.tokens.size();
            }
        }

        // in-loop staleness bound assertion on every consumed sample
        for (const TokenSample& s : batch)
            if (v_now - s.rollout_version > static_cast<std::uint64_t>(cfg_.max_version_gap))
                throw ProtocolError("consumed sample exceeds the version-gap bound");

        StepMetrics m = trainer_step(trainer_, batch, cfg_.mis, cfg_.learning_rate, task_,
                                     rewards);
        m.step = step;
        m.cost = step_cost;
        max_observed_gap_ = std::max(max_observed_gap_, m.max_gap);
        low_mask_streak_ = m.mask_fraction < cfg_.mis.ewma.tau ? low_mask_streak_ + 1 : 0;
        m.low_mask_streak = low_mask_streak_;

        for (std::uint64_t i : batch_trajs) {
            trajs_[i].consumed = true;
            tokens_consumed_ += static_cast<std::int64_t>(trajs_[i].tokens.size());
        }
        if (cfg_.record_tokens)
            for (const TokenSample& s : batch) consumed_tokens_.push_back(s);
        pending_metrics_ = std::move(m);
        heap_.push(Ev{t_end, 0, seq_++, 0, static_cast<std::uint64_t>(step)});
    }

    void on_update_end(std::uint64_t step) {
        published_.push_back(trainer_.params);
        if (cfg_.strategy == StrategyKind::snapshot)
            pending_metrics_.cost += store_.put(VersionedParams{trainer_.version, trainer_.params});
        completed_updates_ = static_cast<int>(step);
        log(SimEventKind::update_end, step, trainer_.version);
        log(SimEventKind::weights_sync, step, trainer_.version);
        if (cfg_.partial_rollout) {
            for (Worker& wk : workers_) {
                if (!wk.busy) continue;
                wk.version = trainer_.version;
                const Traj& tr = trajs_[wk.traj];
                if (!tr.tokens.empty() && !tr.complete)
                    log(SimEventKind::rollout_partial, tr.index, trainer_.version);
            }
        }
        metrics_.push_back(std::move(pending_metrics_));
        pending_metrics_ = StepMetrics{};
        trainer_busy_ = false;
        wake_idle(now_);
        try_consume(now_);
    }

    SimResult finalize() {
        SimResult res;
        res.metrics = std::move(metrics_);
        res.final_params = trainer_.params;
        res.final_version = trainer_.version;
        res.drops = std::move(drops_);
        res.trace = std::move(trace_);
        res.consumed_tokens = std::move(consumed_tokens_);
        res.max_observed_gap = max_observed_gap_;
        res.reset_count = trainer_.ewma_enabled ? trainer_.ewma.reset_count : 0;
        res.published_versions = std::move(published_);

        Conservation& c = res.conservation;
        c.tokens_generated = tokens_generated_;
        c.tokens_consumed = tokens_consumed_;
        c.tokens_dropped = tokens_dropped_;
        c.traj_started = static_cast<std::int64_t>(started_);
        for (const Traj& tr : trajs_) {
            if (tr.consumed) {
                ++c.traj_consumed;
            } else if (tr.dropped) {
                ++c.traj_dropped;
            } else {
                ++c.traj_unconsumed_end;
                c.tokens_unconsumed_end += static_cast<std::int64_t>(tr.tokens.size());
            }
        }
        if (c.tokens_generated !=
                c.tokens_consumed + c.tokens_dropped + c.tokens_unconsumed_end ||
            c.traj_started != c.traj_consumed + c.traj_dropped + c.traj_unconsumed_end)
            throw ProtocolError("sample conservation violated");
        for (const StepMetrics& m : res.metrics) res.total_cost += m.cost;
        return res;
    }

    SimConfig cfg_;
    SyntheticTask task_;
    DiscrepancyModel disc_;
    SnapshotStore store_;
    TrainerState trainer_;
    std::vector<PolicyParams> published_;
    std::deque<Traj> trajs_;
    std::vector<Worker> workers_;
    std::priority_queue<Ev, std::vector<Ev>, EvAfter> heap_;
    std::map<std::uint64_t, std::vector<double>> row_cache_;
    std::vector<StepMetrics> metrics_;
    StepMetrics pending_metrics_;
    std::vector<DropRecord> drops_;
    std::vector<SimEvent> trace_;
    std::vector<TokenSample> consumed_tokens_;
    CostReport pending_cost_;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;
    std::uint64_t started_ = 0;
    std::uint64_t cursor_ = 0;
    std::uint64_t dropped_traj_ = 0;
    int completed_updates_ = 0;
    bool trainer_busy_ = false;
    int max_observed_gap_ = 0;
    int low_mask_streak_ = 0;
    std::int64_t tokens_generated_ = 0;
    std::int64_t tokens_consumed_ = 0;
    std::int64_t tokens_dropped_ = 0;
};

}  // namespace

SimResult run_simulation(const SimConfig& cfg, const SyntheticTask& task,
                         const DiscrepancyModel& disc) {
    AsyncSim sim(cfg, task, disc);
    return sim.run();
}

SimResult run_synchronous_reference(const SimConfig& cfg, const SyntheticTask& task,
                                    const DiscrepancyModel& disc) {
    validate(cfg, task);
    TrainerState st;
    st.params = PolicyParams::zeros(task.num_contexts, task.vocab_size);
    st.version = 0;
    st.ewma_enabled = variant_uses_ewma(cfg.mis.variant);
    if (st.ewma_enabled) {
        st.ewma = ewma_init(cfg.mis.ewma.beta, cfg.mis.ewma.tau, cfg.mis.ewma.normalized);
        st.ewma = ewma_update(std::move(st.ewma), st.params);
    }
    SimResult res;
    res.published_versions.push_back(st.params);
    std::uint64_t started = 0;
    int streak = 0;
    for (int step = 1; step <= cfg.total_updates; ++step) {
        const std::uint64_t v = st.version;
        std::vector<TokenSample> batch;
        std::vector<double> rewards;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const std::uint64_t idx = started++;
            const int ctx = context_of_group(
                cfg.seed, idx / static_cast<std::uint64_t>(cfg.group_size), task.num_contexts);
            const std::vector<double> row = logprob_infer_row(st.params, ctx, disc, v);
            std::vector<int> toks;
            for (int pos = 0; pos < task.horizon; ++pos) {
                const double u =
                    hash_unit(cfg.seed, kTagToken, idx, static_cast<std::uint64_t>(pos));
                const int tok = draw_token(row, u);
                toks.push_back(tok);
                TokenSample s;
                s.context = ctx;
                s.token = tok;
                s.rollout_version = v;
                s.logp_infer_old = row[static_cast<std::size_t>(tok)];
                s.logp_train_old = logprob_train(st.params, ctx, tok);
                s.position = pos;
                s.traj_index = idx;
                batch.push_back(s);
            }
            rewards.push_back(episode_reward(task, ctx, toks));
        }
        const std::vector<double> advs = compute_advantages(
            rewards, cfg.group_size, cfg.advantage_mode, cfg.advantage_std_guard);
        for (std::size_t i = 0; i < batch.size(); ++i)
            batch[i].advantage = advs[i / static_cast<std::size_t>(task.horizon)];
        StepMetrics m = trainer_step(st, batch, cfg.mis, cfg.learning_rate, task, rewards);
        m.step = step;
        streak = m.mask_fraction < cfg.mis.ewma.tau ? streak + 1 : 0;
        m.low_mask_streak = streak;
        if (cfg.record_tokens)
            for (const TokenSample& s : batch) res.consumed_tokens.push_back(s);
        res.metrics.push_back(std::move(m));
        res.published_versions.push_back(st.params);
        res.conservation.tokens_generated +=
            static_cast<std::int64_t>(cfg.batch_size) * task.horizon;
        res.conservation.tokens_consumed +=
            static_cast<std::int64_t>(cfg.batch_size) * task.horizon;
        res.conservation.traj_started += cfg.batch_size;
        res.conservation.traj_consumed += cfg.batch_size;
    }
    res.final_params = st.params;
    res.final_version = st.version;
    res.reset_count = st.ewma_enabled ? st.ewma.reset_count : 0;
    return res;
}

std::vector<SimEvent> inject_staleness_schedule(const SimConfig& cfg,
                                                const SyntheticTask& task,
                                                const DiscrepancyModel& disc) {
    SimConfig traced = cfg;
    traced.record_trace = true;
    return run_simulation(traced, task, disc).trace;
}

}  // namespace misim
