#include "subfield/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace subfield {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Poisson by PTRS (Hormann 1993), used for intensity >= 10.
std::uint64_t poisson_ptrs(RngStream& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
    const double rhs = -lambda + k * loglam - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::uint64_t>(k);
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += kGolden;
  return mix64(state);
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
  std::uint64_t key = mix64(seed ^ kGolden) ^ mix64(stream_id + 0x632BE59BD9B4E019ULL);
  for (auto& w : s_) w = splitmix64(key);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
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

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  has_cached_ = true;
  return u * f;
}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(seed_, mix64(stream_id_ * kGolden + mix64(index + 1)));
}

double sample_normal(RngStream& rng, double mean, double sd) {
  if (!(sd >= 0.0)) throw std::invalid_argument("sample_normal: sd must be >= 0");
  if (sd == 0.0) return mean;
  return mean + sd * rng.normal();
}

double sample_gamma(RngStream& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("sample_gamma: shape and rate must be > 0");
  if (shape < 1.0) {
    // Boost: G(shape) = G(shape + 1) * U^(1/shape), done in log space so that
    // tiny shapes underflow to the smallest positive value instead of 0.
    const double g = sample_gamma(rng, shape + 1.0, 1.0);
    const double log_x = std::log(g) + std::log(rng.uniform()) / shape - std::log(rate);
    const double x = std::exp(log_x);
    return x > 0.0 ? x : std::numeric_limits<double>::denorm_min();
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double z, v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v / rate;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

std::uint64_t sample_poisson(RngStream& rng, double intensity) {
  if (!(intensity >= 0.0)) throw std::invalid_argument("sample_poisson: intensity must be >= 0");
  if (intensity == 0.0) return 0;
  if (intensity >= 10.0) return poisson_ptrs(rng, intensity);
  const double limit = std::exp(-intensity);
  std::uint64_t k = 0;
  double prod = rng.uniform();
  while (prod > limit) {
    ++k;
    prod *= rng.uniform();
  }
  return k;
}

double sample_student_t(RngStream& rng, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("sample_student_t: dof must be > 0");
  const double z = rng.normal();
  const double chi2 = 2.0 * sample_gamma(rng, 0.5 * dof, 1.0);
  return z / std::sqrt(chi2 / dof);
}

void KahanAccumulator::add(double v) {
  const double t = sum_ + v;
  if (std::fabs(sum_) >= std::fabs(v))
    comp_ += (sum_ - t) + v;
  else
    comp_ += (v - t) + sum_;
  sum_ = t;
}

double compensated_sum(std::span<const double> values) {
  KahanAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace subfield
