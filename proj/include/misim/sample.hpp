#pragma once

#include <cstdint>
#include <optional>

namespace misim {

// One generated token. logp_infer_old is recorded at draw time and never
// recomputed; logp_train_old stays empty until an acquisition strategy (or a
// gap-0 live fill) provides it.
struct TokenSample {
    int context = 0;
    int token = 0;
    std::uint64_t rollout_version = 0;
    double logp_infer_old = 0.0;
    std::optional<double> logp_train_old;
    double advantage = 0.0;
    int position = 0;            // index within the trajectory
    std::uint64_t traj_index = 0;  // global trajectory id, set by the simulator
};

}  // namespace misim
