#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace icmt {

/// Seeded generator used by every randomized strategy.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Bounded draws use Lemire's multiply-and-reject method on the raw
/// 64-bit output instead of std::uniform_int_distribution (whose algorithm is
/// implementation-defined), so runs reproduce across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a per-item seed from a run seed and a stable key (e.g. a test id).
std::uint64_t derive_seed(std::uint64_t base, std::string_view key) noexcept;

} // namespace icmt
