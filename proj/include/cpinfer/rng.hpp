#pragma once

#include <cstdint>

namespace cpinfer {

/// Identifies one reproducible random stream. Replicate b of any experiment
/// draws from stream_id = b, so results do not depend on scheduling.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    [[nodiscard]] SeedSpec with_stream(std::uint64_t stream) const { return {master_seed, stream}; }

    /// A new master seed for a labelled sub-experiment (grid cell, calibration
    /// pass, ...). Stream ids of the result start over at zero.
    [[nodiscard]] SeedSpec fork(std::uint64_t label) const;

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

/// xoshiro256** keyed by a SeedSpec. Value-like and cheap to construct, one per worker.
class Stream {
public:
    explicit Stream(SeedSpec seed);

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1).
    double uniform();

    /// Standard normal by inversion of a uniform.
    double normal();

private:
    std::uint64_t s_[4];
};

}  // namespace cpinfer
