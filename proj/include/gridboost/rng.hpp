#pragma once

#include <array>
#include <cstdint>

namespace gridboost {

// Counter-based uniforms (Philox4x32-10).  Every draw is addressed by
// (seed, stream_id, index); nothing is mutable except an optional cursor.
// This is what makes replicated runs, thread-count-independent reductions
// and per-term coupling reproducible: a consumer never "advances" a shared
// generator, it just names the draw it wants.

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter);

// 64-bit mixer (splitmix64 finalizer) used to spread stream ids.
std::uint64_t mix64(std::uint64_t x);

// Distinct sub-generator families.  Keeping these in one place avoids two
// modules accidentally sharing a stream.
enum class StreamPurpose : std::uint64_t {
    kPathTableau = 1,   // shared fine-grid innovations (coupled mode)
    kTermPath = 2,      // per-(term, replicate) innovations
    kSelect = 3,        // term selection in importance-sampling mode
    kSmooth = 4,        // terminal smoothing Gaussians
    kProbe = 5,         // diagnostics / certification sweeps
};

struct Stream {
    std::uint64_t key = 0;        // master seed
    std::uint64_t stream_id = 0;  // derived; see derive_stream
    std::uint64_t cursor = 0;

    // Stateless addressed access.
    double uniform_at(std::uint64_t index) const;
    double normal_at(std::uint64_t index) const;

    // Sequential convenience on top of the same addressing.
    double next_uniform() { return uniform_at(cursor++); }
    double next_normal() { return normal_at(cursor++); }
};

Stream derive_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
                     std::uint64_t b = 0);

// Standard normal quantile (Wichura's PPND16 rational approximations),
// accurate to ~1e-15 over (0,1); and the matching CDF via erfc.
double normal_quantile(double u);
double normal_cdf(double x);

}  // namespace gridboost
