#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace gmmbench {

// 64-bit FNV-1a over an arbitrary byte sequence. This is the hash primitive
// behind the seed-derivation rule below; any implementation that reproduces
// it byte for byte reproduces the whole experiment tree.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffset = 14695981039346656037ULL;
    static constexpr std::uint64_t kPrime  = 1099511628211ULL;

    Fnv1a64& bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= kPrime;
        }
        return *this;
    }
    Fnv1a64& u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        return bytes(buf, 8);
    }
    Fnv1a64& f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        return u64(bits);
    }
    Fnv1a64& str(std::string_view s) { return bytes(s.data(), s.size()); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

// Seed-splitting rule used by the whole harness:
//   sub_seed = FNV-1a( master_seed LE64 || run_index LE64 || sweep_index LE64 || role_tag )
// Role tags are short ASCII strings ("system", "data", "split", "est:elm", ...).
// Seeds for quantities that do not depend on the sweep point pass sweep_index = 0.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index,
                                 std::uint64_t sweep_index, std::string_view role_tag) {
    return Fnv1a64{}.u64(master_seed).u64(run_index).u64(sweep_index).str(role_tag).value();
}

// Deterministic random stream. mt19937_64 output is pinned by the standard and
// the uniform/gaussian conversions below avoid std::*_distribution, whose
// sequences are implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform on [-1, 1).
    double uniform_sym() { return 2.0 * uniform() - 1.0; }

    // N(0, 1) via Box-Muller; consumes exactly two uniforms per draw.
    double gaussian() {
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    // Uniform integer in [0, bound). Modulo reduction; bias is irrelevant at
    // the sample counts used here and keeps the sequence trivially portable.
    std::uint64_t next_below(std::uint64_t bound) { return gen_() % bound; }

private:
    std::mt19937_64 gen_;
};

}  // namespace gmmbench
