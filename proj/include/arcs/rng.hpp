#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <utility>

namespace arcs {

/// Source of uniform deviates in [0, 1). The design procedures only ever
/// consume randomness through this interface so tests can script the draws.
class UniformSource {
   public:
    virtual ~UniformSource() = default;
    virtual double uniform() = 0;
};

/// Independent sub-streams carved out of one replication stream. Every
/// replication consumes each sub-stream in a fixed order, so covariates and
/// noise are shared across methods for the same (seed, rep).
enum class Substream : std::uint32_t {
    covariates = 1,
    noise = 2,
    design = 3,
    selection = 4,
    user = 16,
};

/// Philox4x32-10 counter-based generator. The key is the 64-bit seed; the
/// upper half of the 128-bit counter holds (stream, substream), the lower
/// half the block index. Distinct (seed, stream, substream) triples never
/// overlap.
class Rng final : public UniformSource {
   public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint32_t stream = 0,
                 std::uint32_t substream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()();
    std::uint32_t next_u32();

    double uniform() override;
    double normal();
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

    template <class RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        auto n = static_cast<std::size_t>(std::distance(first, last));
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = below(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

    /// Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key);

   private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_;
    std::uint32_t substream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// stream(seed, rep) with a purpose-specific sub-stream.
inline Rng stream(std::uint64_t seed, std::uint64_t rep, Substream sub) {
    return Rng(seed, static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(sub));
}

}  // namespace arcs
