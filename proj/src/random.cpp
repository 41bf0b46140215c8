#include "cmj/random.hpp"

#include <cmath>

namespace cmj {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// salt domains, so child(3) never collides with tagged(...) or ancestor(3)
constexpr std::uint64_t kChildDomain = 0x1000000000000000ULL;
constexpr std::uint64_t kAncestorDomain = 0x2000000000000000ULL;
constexpr std::uint64_t kTagDomain = 0x3000000000000000ULL;
constexpr std::uint64_t kStreamDomain = 0x4000000000000000ULL;

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    return finalize(state);
}

std::uint64_t mix_key(std::uint64_t key, std::uint64_t salt) {
    return finalize(finalize(key ^ 0x6A09E667F3BCC909ULL) + 0x9E3779B97F4A7C15ULL * (salt + 1));
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t st = seed;
    for (auto& w : s_) w = splitmix64(st);
}

Rng::result_type Rng::operator()() {
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

double Rng::uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

NoiseKey NoiseKey::replicate(std::uint64_t master_seed, std::uint64_t index) {
    return NoiseKey(mix_key(mix_key(master_seed, kTagDomain + static_cast<std::uint64_t>(Stream::replicate)), index));
}

NoiseKey NoiseKey::ancestor(std::uint64_t i) const { return NoiseKey(mix_key(v_, kAncestorDomain + i)); }

NoiseKey NoiseKey::child(std::uint64_t rank) const { return NoiseKey(mix_key(v_, kChildDomain + rank)); }

NoiseKey NoiseKey::tagged(Stream s) const {
    return NoiseKey(mix_key(v_, kTagDomain + static_cast<std::uint64_t>(s)));
}

Rng NoiseKey::rng(Stream s) const { return Rng(mix_key(v_, kStreamDomain + static_cast<std::uint64_t>(s))); }

double NoiseKey::uniform(Stream s) const {
    Rng r = rng(s);
    return r.uniform();
}

}  // namespace cmj
