#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "misim/policy.hpp"
#include "misim/sample.hpp"

namespace misim {

enum class StrategyKind { snapshot, dedicated_model, partial_interrupt, none };

const char* strategy_name(StrategyKind k);

// Latencies are simulated-time units; defaults model a mid-size dense run.
struct CostModel {
    double save_latency = 3.95;
    double load_latency = 7.11;
    double restore_latency = 3.01;
    double forward_latency = 45.05;
    double storage_per_snapshot = 8.04e9;  // bytes
};

struct CostReport {
    double save_time = 0.0;
    double load_time = 0.0;
    double restore_time = 0.0;
    double forward_time = 0.0;
    double wall_time = 0.0;  // modeled elapsed time for the recovery stage
    std::int64_t bytes_stored = 0;
    int saves = 0;
    int loads = 0;
    int restores = 0;
    int forwards = 0;
    int version_switches = 0;

    CostReport& operator+=(const CostReport& o);
};

// Bounded archive of published parameter versions. Oldest-first eviction;
// a resident entry is the exact vector registered under that version.
class SnapshotStore {
public:
    SnapshotStore(int max_resident, CostModel cost);

    // versions must strictly increase across puts
    CostReport put(const VersionedParams& v);

    bool resident(std::uint64_t version) const;
    const PolicyParams& get(std::uint64_t version) const;  // throws SnapshotEvicted
    int resident_count() const { return static_cast<int>(entries_.size()); }
    std::uint64_t newest_version() const;

    const CostModel& cost() const { return cost_; }

    // lifetime accounting
    std::int64_t cumulative_bytes() const { return cumulative_bytes_; }
    int save_count() const { return save_count_; }
    int load_count() const { return load_count_; }
    void note_load() { ++load_count_; }

private:
    int max_resident_;
    CostModel cost_;
    std::map<std::uint64_t, PolicyParams> entries_;
    std::int64_t cumulative_bytes_ = 0;
    int save_count_ = 0;
    int load_count_ = 0;
};

// Fills logp_train_old for every sample from the archived parameters.
// Batches are grouped by rollout version (ascending); each distinct version
// costs one load + one restore (a version switch), plus one forward per
// version segment. Throws SnapshotEvicted before touching any sample.
CostReport recover_old_logits(SnapshotStore& store, std::span<TokenSample> samples);

// Single-version recovery on a standing old-policy model. With overlap the
// modeled wall time is max(forward, update_time) plus a version-switch
// restore; serial is the plain sum.
CostReport dedicated_model_recover(const VersionedParams& old_model,
                                   std::span<TokenSample> samples,
                                   const CostModel& cost, double update_time,
                                   bool overlap);

// Fills every still-unfilled token generated under live.version. Must run
// before that version's parameter update is applied; a sample from a newer
// version means the caller broke the protocol. wall_time reports the worker
// pause: restore plus one forward when anything was filled.
CostReport partial_interrupt_pass(const VersionedParams& live,
                                  std::span<TokenSample*> inflight,
                                  const CostModel& cost);

// container with header + checksum; load verifies the payload
void save_snapshot_file(const VersionedParams& v, const std::filesystem::path& path);
VersionedParams load_snapshot_file(const std::filesystem::path& path);

}  // namespace misim
