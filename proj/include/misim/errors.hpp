#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace misim {

// Bad or inconsistent configuration. CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Sequencing violation in a stateful component (non-monotonic snapshot
// versions, recovery invoked after the version retired, ...).
class ProtocolError : public std::logic_error {
public:
    explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

// Arithmetic-interpolation clip bound degenerates: the transformed upper
// bound has a non-positive denominator, so no finite constraint exists.
class SingularBound : public std::domain_error {
public:
    explicit SingularBound(const std::string& what) : std::domain_error(what) {}
};

// A weight variant needed a reference log-prob that was never acquired.
class MissingOldLogit : public std::runtime_error {
public:
    MissingOldLogit(std::string variant, std::uint64_t version)
        : std::runtime_error("missing reference log-prob for variant '" + variant +
                             "' at rollout version " + std::to_string(version)),
          variant_name(std::move(variant)),
          rollout_version(version) {}

    std::string variant_name;
    std::uint64_t rollout_version;
};

// Requested snapshot version was already evicted from the store.
class SnapshotEvicted : public std::runtime_error {
public:
    explicit SnapshotEvicted(std::uint64_t version)
        : std::runtime_error("snapshot for version " + std::to_string(version) +
                             " was evicted"),
          version(version) {}

    std::uint64_t version;
};

// Corrupt or unreadable snapshot container file.
class SnapshotIoError : public std::runtime_error {
public:
    explicit SnapshotIoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace misim
