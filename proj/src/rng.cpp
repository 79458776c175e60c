#include "cpinfer/rng.hpp"

#include "cpinfer/specfun.hpp"

namespace cpinfer {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) {
    std::uint64_t state = x;
    return splitmix64(state);
}

SeedSpec SeedSpec::fork(std::uint64_t label) const {
    const std::uint64_t key = mix64(mix64(master_seed) ^ mix64(stream_id + 0x632BE59BD9B4E019ULL));
    return {mix64(key + 0xD1B54A32D192ED03ULL * (label + 1)), 0};
}

Stream::Stream(SeedSpec seed) {
    std::uint64_t state = mix64(seed.master_seed) ^ mix64(seed.stream_id ^ 0xA0761D6478BD642FULL);
    for (auto& word : s_) word = splitmix64(state);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t Stream::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Stream::uniform() {
    // 53 random bits, centred in their cell so 0 and 1 are never produced.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() { return norm_quantile(uniform()); }

}  // namespace cpinfer
