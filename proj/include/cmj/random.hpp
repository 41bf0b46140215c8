#pragma once

#include <cstdint>
#include <limits>

namespace cmj {

std::uint64_t splitmix64(std::uint64_t& state);
// Order-sensitive hash of (key, salt); used to derive all sub-seeds.
std::uint64_t mix_key(std::uint64_t key, std::uint64_t salt);

// xoshiro256**; cheap to seed, which matters because every node gets its own.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform on the open interval (0,1).
    double uniform();
    double exponential(double rate);

private:
    std::uint64_t s_[4];
};

// Independent noise channels attached to one node.
enum class Stream : std::uint64_t {
    omega = 1,           // keep/label uniform
    offspring = 2,       // 𝒫
    offspring_star = 3,  // 𝒫*
    offspring_dagger = 4,// 𝒫†
    initial_age = 5,
    immigration = 6,     // uniform deciding an immigration
    replicate = 7,
};

// Counter-based key. A node's key is a pure function of (master seed,
// replicate, ancestor index, label), so two simulators walking the same label
// see exactly the same randomness.
class NoiseKey {
public:
    constexpr explicit NoiseKey(std::uint64_t v = 0) : v_(v) {}

    static NoiseKey replicate(std::uint64_t master_seed, std::uint64_t index);

    NoiseKey ancestor(std::uint64_t i) const;
    NoiseKey child(std::uint64_t rank) const;
    // A distinct node hanging off this one (fictitious particles in the coupling).
    NoiseKey tagged(Stream s) const;

    Rng rng(Stream s) const;
    double uniform(Stream s) const;

    constexpr std::uint64_t value() const { return v_; }
    friend constexpr bool operator==(NoiseKey, NoiseKey) = default;

private:
    std::uint64_t v_;
};

}  // namespace cmj
