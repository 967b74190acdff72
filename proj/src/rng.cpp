#include "gridboost/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridboost {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;  // sqrt(3) - 1
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void philox_round(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2,
                         std::uint32_t& c3, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM4x32A) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM4x32B) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    const std::uint32_t old_c3 = c3;
    c3 = lo0;
    c2 = hi0 ^ old_c3 ^ k1;
    c1 = lo1;
    // note: output lane order follows the reference sequence (hi1^c1^k0, lo1, hi0^c3^k1, lo0)
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::uint64_t key,
                                        const std::array<std::uint32_t, 4>& counter) {
    std::uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += kPhiloxW32A;
        k1 += kPhiloxW32B;
    }
    return {c0, c1, c2, c3};
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

Stream derive_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a,
                     std::uint64_t b) {
    Stream s;
    s.key = mix64(seed ^ 0xA5A5A5A55A5A5A5Aull);
    s.stream_id = mix64(mix64(mix64(static_cast<std::uint64_t>(purpose)) ^ a) ^ b);
    return s;
}

double Stream::uniform_at(std::uint64_t index) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    const auto out = philox4x32(key, ctr);
    // 53 significant bits, strictly inside (0,1) so the quantile never sees 0 or 1
    const std::uint64_t wide =
        (static_cast<std::uint64_t>(out[0]) << 32) | static_cast<std::uint64_t>(out[1]);
    return (static_cast<double>(wide >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal_at(std::uint64_t index) const { return normal_quantile(uniform_at(index)); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// PPND16: three rational approximations split at |p-1/2| = 0.425 and r = 5.
double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        if (u == 0.0) return -std::numeric_limits<double>::infinity();
        if (u == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("normal_quantile: argument outside [0,1]");
    }
    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = std::sqrt(-std::log(q < 0.0 ? u : 1.0 - u));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        z = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        z = num / den;
    }
    return q < 0.0 ? -z : z;
}

}  // namespace gridboost
