#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace wrcm::rng {

// 128-bit run seed. Every random quantity in the artifact is a pure function
// of (seed, domain tag, replica, counter), so reruns are bit-identical and
// query order never matters.
struct Seed128 {
  uint64_t hi = 0;
  uint64_t lo = 0;

  static Seed128 from_string(const std::string& s);
  std::string to_hex() const;
  bool operator==(const Seed128&) const = default;
};

// Stafford mix13 finalizer; full avalanche per call.
constexpr uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr uint64_t hash_words(std::initializer_list<uint64_t> ws) {
  uint64_t h = 0x6a09e667f3bcc909ULL;
  for (uint64_t w : ws) h = mix64((h ^ w) + kGolden);
  return mix64(h + kGolden);
}

constexpr double to_unit(uint64_t x) {
  // 53 high bits -> [0,1)
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Independent randomness domains. Never reuse a tag for two purposes.
enum class Tag : uint64_t {
  points = 1,    // Poisson counts, positions, weights
  edge = 2,      // pair variates of the lazy edge oracle
  site = 3,      // lattice vertex states
  ghost = 4,     // copy-vertex (green) field
  thin = 5,      // intensity-coupling thinning variates
  resample = 6,  // single-coordinate resampling for influences
  experiment = 7,
  bootstrap = 8,
};

inline Seed128 derive_seed(Seed128 s, uint64_t salt_a, uint64_t salt_b = 0) {
  return Seed128{hash_words({s.hi, salt_a, salt_b, 0x5eedULL}),
                 hash_words({s.lo, salt_b, salt_a, 0xd0e5ULL})};
}

// Sequential counter-based stream.
class Stream {
 public:
  Stream(Seed128 s, Tag tag, uint64_t a = 0, uint64_t b = 0)
      : k0_(hash_words({s.hi, static_cast<uint64_t>(tag), a})),
        k1_(hash_words({s.lo, static_cast<uint64_t>(tag), b, a})) {}

  uint64_t next_u64() { return hash_words({k0_, k1_, ctr_++}); }
  double next_unit() { return to_unit(next_u64()); }
  double next_exp() { return -std::log1p(-next_unit()); }

  // unbiased integer in [0, n)
  uint64_t next_below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t rem = UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= UINT64_MAX - rem);
    return x % n;
  }

  uint64_t poisson(double mean);

 private:
  uint64_t poisson_inversion(double mean);
  uint64_t poisson_ptrd(double mean);

  uint64_t k0_, k1_;
  uint64_t ctr_ = 0;
};

// Keyed hash giving one uniform variate per index or per unordered index
// pair. Stateless: the same (seed, tag, salt, key) always yields the same
// variate regardless of who asks first. This is the lazy edge oracle.
class KeyedUniform {
 public:
  KeyedUniform() = default;
  KeyedUniform(Seed128 s, Tag tag, uint64_t salt = 0)
      : k0_(hash_words({s.hi, static_cast<uint64_t>(tag), salt})),
        k1_(hash_words({s.lo, salt, static_cast<uint64_t>(tag)})) {}

  double at(uint64_t key) const { return to_unit(hash_words({k0_, k1_, key})); }

  double at_pair(uint64_t i, uint64_t j) const {
    if (i > j) {
      uint64_t t = i;
      i = j;
      j = t;
    }
    return to_unit(hash_words({k0_, k1_, i, j}));
  }

 private:
  uint64_t k0_ = 0, k1_ = 0;
};

inline uint64_t Stream::poisson_inversion(double mean) {
  double l = std::exp(-mean);
  uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= next_unit();
  } while (p > l);
  return k - 1;
}

// Hoermann's transformed rejection with squeeze, for large means.
inline uint64_t Stream::poisson_ptrd(double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = next_unit() - 0.5;
    double v = next_unit();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<uint64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        k * loglam - mean - std::lgamma(k + 1.0))
      return static_cast<uint64_t>(k);
  }
}

inline uint64_t Stream::poisson(double mean) {
  if (mean < 0) throw std::invalid_argument("poisson: negative mean");
  if (mean == 0) return 0;
  if (mean < 30.0) return poisson_inversion(mean);
  return poisson_ptrd(mean);
}

// Accepts "0x" + up to 32 hex digits (128 bits) or a decimal value < 2^64.
inline Seed128 Seed128::from_string(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty seed string");
  Seed128 out;
  if (s.size() > 2 && (s[0] == '0') && (s[1] == 'x' || s[1] == 'X')) {
    std::string hex = s.substr(2);
    if (hex.empty() || hex.size() > 32)
      throw std::invalid_argument("seed hex must have 1..32 digits");
    std::string lo_part = hex.size() > 16 ? hex.substr(hex.size() - 16) : hex;
    std::string hi_part = hex.size() > 16 ? hex.substr(0, hex.size() - 16) : "";
    out.lo = std::stoull(lo_part, nullptr, 16);
    out.hi = hi_part.empty() ? 0 : std::stoull(hi_part, nullptr, 16);
  } else {
    out.lo = std::stoull(s, nullptr, 10);
    out.hi = 0;
  }
  return out;
}

inline std::string Seed128::to_hex() const {
  char buf[36];
  std::snprintf(buf, sizeof(buf), "0x%016llx%016llx",
                static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return std::string(buf);
}

}  // namespace wrcm::rng
