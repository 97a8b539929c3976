#pragma once

#include <cmath>
#include <cstdint>

#include "ddpca/types.hpp"

namespace ddpca {

/// 64-bit finalizer (MurmurHash3 fmix64). Pure integer arithmetic, so the
/// value is identical on every platform.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximations, accurate to ~1e-16 for u in (0,1)). Horner steps use
/// std::fma so the result does not depend on compiler contraction choices.
inline double normal_quantile(double u) {
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    double num = 2.5090809287301226727e+3;
    num = std::fma(num, r, 3.3430575583588128105e+4);
    num = std::fma(num, r, 6.7265770927008700853e+4);
    num = std::fma(num, r, 4.5921953931549871457e+4);
    num = std::fma(num, r, 1.3731693765509461125e+4);
    num = std::fma(num, r, 1.9715909503065514427e+3);
    num = std::fma(num, r, 1.3314166789178437745e+2);
    num = std::fma(num, r, 3.3871328727963666080e+0);
    double den = 5.2264952788528545610e+3;
    den = std::fma(den, r, 2.8729085735721942674e+4);
    den = std::fma(den, r, 3.9307895800092710610e+4);
    den = std::fma(den, r, 2.1213794301586595867e+4);
    den = std::fma(den, r, 5.3941960214247511077e+3);
    den = std::fma(den, r, 6.8718700749205790830e+2);
    den = std::fma(den, r, 4.2313330701600911252e+1);
    den = std::fma(den, r, 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    double num = 7.74545014278341407640e-4;
    num = std::fma(num, r, 2.27238449892691845833e-2);
    num = std::fma(num, r, 2.41780725177450611770e-1);
    num = std::fma(num, r, 1.27045825245236838258e+0);
    num = std::fma(num, r, 3.64784832476320460504e+0);
    num = std::fma(num, r, 5.76949722146069140550e+0);
    num = std::fma(num, r, 4.63033784615654529590e+0);
    num = std::fma(num, r, 1.42343711074968357734e+0);
    double den = 1.05075007164441684324e-9;
    den = std::fma(den, r, 5.47593808499534494600e-4);
    den = std::fma(den, r, 1.51986665636164571966e-2);
    den = std::fma(den, r, 1.48103976427480074590e-1);
    den = std::fma(den, r, 6.89767334985100004550e-1);
    den = std::fma(den, r, 1.67638483018380384940e+0);
    den = std::fma(den, r, 2.05319162663775882187e+0);
    den = std::fma(den, r, 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    double num = 2.01033439929228813265e-7;
    num = std::fma(num, r, 2.71155556874348757815e-5);
    num = std::fma(num, r, 1.24266094738807843860e-3);
    num = std::fma(num, r, 2.65321895265761230930e-2);
    num = std::fma(num, r, 2.96560571828504891230e-1);
    num = std::fma(num, r, 1.78482653991729133580e+0);
    num = std::fma(num, r, 5.46378491116411436990e+0);
    num = std::fma(num, r, 6.65790464350110377720e+0);
    double den = 2.04426310338993978564e-15;
    den = std::fma(den, r, 1.42151175831644588870e-7);
    den = std::fma(den, r, 1.84631831751005468180e-5);
    den = std::fma(den, r, 7.86869131145613259100e-4);
    den = std::fma(den, r, 1.48753612908506148525e-2);
    den = std::fma(den, r, 1.36929880922735805310e-1);
    den = std::fma(den, r, 5.99832206555887937690e-1);
    den = std::fma(den, r, 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

/// Counter-based random stream. A (master_seed, stream_index) pair fully
/// determines the draw sequence; streams with distinct indices are
/// independent, so Monte Carlo repetitions can run in any order or thread.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : key_(mix64(master_seed + 0x9e3779b97f4a7c15ULL * (stream_index + 1))) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ ^ mix64(counter_ * 0xda942042e4dd58b5ULL));
  }

  /// Uniform draw strictly inside (0, 1): (k + 0.5) * 2^-53 over 53-bit k.
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return normal_quantile(next_uniform()); }

  Vector<double> normals(Index n) {
    Vector<double> out(n);
    for (Index i = 0; i < n; ++i) out[i] = next_normal();
    return out;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ddpca
