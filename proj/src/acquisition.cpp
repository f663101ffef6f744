#include "misim/acquisition.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

#include "misim/errors.hpp"
#include "misim/rng.hpp"

namespace misim {

const char* strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::snapshot: return "snapshot";
        case StrategyKind::dedicated_model: return "dedicated_model";
        case StrategyKind::partial_interrupt: return "partial_interrupt";
        case StrategyKind::none: return "none";
    }
    return "?";
}

CostReport& CostReport::operator+=(const CostReport& o) {
    save_time += o.save_time;
    load_time += o.load_time;
    restore_time += o.restore_time;
    forward_time += o.forward_time;
    wall_time += o.wall_time;
    bytes_stored += o.bytes_stored;
    saves += o.saves;
    loads += o.loads;
    restores += o.restores;
    forwards += o.forwards;
    version_switches += o.version_switches;
    return *this;
}

SnapshotStore::SnapshotStore(int max_resident, CostModel cost)
    : max_resident_(max_resident), cost_(cost) {
    if (max_resident < 1) throw ConfigError("max_resident must be >= 1");
}

CostReport SnapshotStore::put(const VersionedParams& v) {
    if (!entries_.empty() && v.version <= entries_.rbegin()->first)
        throw ProtocolError("snapshot_put: version " + std::to_string(v.version) +
                            " is not above newest resident " +
                            std::to_string(entries_.rbegin()->first));
    entries_.emplace(v.version, v.params);
    while (static_cast<int>(entries_.size()) > max_resident_)
        entries_.erase(entries_.begin());  // oldest version first
    ++save_count_;
    cumulative_bytes_ += static_cast<std::int64_t>(cost_.storage_per_snapshot);
    CostReport r;
    r.saves = 1;
    r.save_time = cost_.save_latency;
    r.wall_time = cost_.save_latency;
    r.bytes_stored = static_cast<std::int64_t>(cost_.storage_per_snapshot);
    return r;
}

bool SnapshotStore::resident(std::uint64_t version) const {
    return entries_.count(version) != 0;
}

const PolicyParams& SnapshotStore::get(std::uint64_t version) const {
    auto it = entries_.find(version);
    if (it == entries_.end()) throw SnapshotEvicted(version);
    return it->second;
}

std::uint64_t SnapshotStore::newest_version() const {
    if (entries_.empty()) throw ProtocolError("snapshot store is empty");
    return entries_.rbegin()->first;
}

CostReport recover_old_logits(SnapshotStore& store, std::span<TokenSample> samples) {
    std::set<std::uint64_t> versions;
    for (const TokenSample& s : samples) versions.insert(s.rollout_version);
    // fail before mutating anything
    for (std::uint64_t v : versions)
        if (!store.resident(v)) throw SnapshotEvicted(v);

    CostReport r;
    for (std::uint64_t v : versions) {
        const PolicyParams& params = store.get(v);
        store.note_load();
        for (TokenSample& s : samples) {
            if (s.rollout_version != v) continue;
            s.logp_train_old = logprob_train(params, s.context, s.token);
        }
        r.loads += 1;
        r.restores += 1;
        r.forwards += 1;
        r.version_switches += 1;
        r.load_time += store.cost().load_latency;
        r.restore_time += store.cost().restore_latency;
        r.forward_time += store.cost().forward_latency;
    }
    r.wall_time = r.load_time + r.restore_time + r.forward_time;
    return r;
}

CostReport dedicated_model_recover(const VersionedParams& old_model,
                                   std::span<TokenSample> samples,
                                   const CostModel& cost, double update_time,
                                   bool overlap) {
    for (const TokenSample& s : samples)
        if (s.rollout_version != old_model.version)
            throw ProtocolError("dedicated_model_recover: sample version " +
                                std::to_string(s.rollout_version) +
                                " does not match model version " +
                                std::to_string(old_model.version));
    for (TokenSample& s : samples)
        s.logp_train_old = logprob_train(old_model.params, s.context, s.token);
    CostReport r;
    r.forwards = 1;
    r.forward_time = cost.forward_latency;
    r.wall_time = overlap
                      ? std::max(cost.forward_latency, update_time) + cost.restore_latency
                      : cost.forward_latency + update_time;
    return r;
}

CostReport partial_interrupt_pass(const VersionedParams& live,
                                  std::span<TokenSample*> inflight,
                                  const CostModel& cost) {
    int filled = 0;
    for (TokenSample* s : inflight) {
        if (s->logp_train_old) continue;
        if (s->rollout_version != live.version)
            throw ProtocolError(
                "partial_interrupt_pass: unfilled token at version " +
                std::to_string(s->rollout_version) + " but live version is " +
                std::to_string(live.version) + "; the pass for that version was skipped");
        s->logp_train_old = logprob_train(live.params, s->context, s->token);
        ++filled;
    }
    CostReport r;
    r.restores = 1;
    r.restore_time = cost.restore_latency;
    if (filled > 0) {
        r.forwards = 1;
        r.forward_time = cost.forward_latency;
    }
    r.wall_time = r.restore_time + r.forward_time;  // worker pause duration
    return r;
}

void save_snapshot_file(const VersionedParams& v, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SnapshotIoError("cannot open " + path.string() + " for writing");
    const char magic[4] = {'M', 'S', 'N', 'P'};
    const std::uint32_t format = 1;
    const std::uint64_t version = v.version;
    const std::uint32_t nc = static_cast<std::uint32_t>(v.params.num_contexts);
    const std::uint32_t vs = static_cast<std::uint32_t>(v.params.vocab_size);
    const std::uint64_t checksum =
        fnv1a64(v.params.weights.data(), v.params.weights.size() * sizeof(double));
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&format), sizeof format);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&nc), sizeof nc);
    out.write(reinterpret_cast<const char*>(&vs), sizeof vs);
    out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    out.write(reinterpret_cast<const char*>(v.params.weights.data()),
              static_cast<std::streamsize>(v.params.weights.size() * sizeof(double)));
    if (!out) throw SnapshotIoError("short write to " + path.string());
}

VersionedParams load_snapshot_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotIoError("cannot open " + path.string());
    char magic[4];
    std::uint32_t format = 0, nc = 0, vs = 0;
    std::uint64_t version = 0, checksum = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&format), sizeof format);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&nc), sizeof nc);
    in.read(reinterpret_cast<char*>(&vs), sizeof vs);
    in.read(reinterpret_cast<char*>(&checksum), sizeof checksum);
    if (!in || std::memcmp(magic, "MSNP", 4) != 0 || format != 1)
        throw SnapshotIoError("bad snapshot header in " + path.string());
    VersionedParams v;
    v.version = version;
    v.params.num_contexts = static_cast<int>(nc);
    v.params.vocab_size = static_cast<int>(vs);
    v.params.weights.resize(static_cast<std::size_t>(nc) * vs);
    in.read(reinterpret_cast<char*>(v.params.weights.data()),
            static_cast<std::streamsize>(v.params.weights.size() * sizeof(double)));
    if (!in) throw SnapshotIoError("truncated snapshot payload in " + path.string());
    const std::uint64_t actual =
        fnv1a64(v.params.weights.data(), v.params.weights.size() * sizeof(double));
    if (actual != checksum)
        throw SnapshotIoError("checksum mismatch in " + path.string());
    return v;
}

}  // namespace misim
