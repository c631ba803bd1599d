#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace subfield {

// xoshiro256** stream keyed by (seed, stream_id). The four state words are
// produced by running splitmix64 from a key that mixes both labels, so any
// (seed, stream_id) pair can be constructed directly without advancing a
// parent generator. substream() derives a child label by mixing the parent
// label with a counter; children of distinct parents or counters do not
// collide except with negligible probability.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  // Standard normal (Marsaglia polar method, second variate cached).
  double normal();

  RngStream substream(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

double sample_normal(RngStream& rng, double mean, double sd);
double sample_gamma(RngStream& rng, double shape, double rate);
std::uint64_t sample_poisson(RngStream& rng, double intensity);
double sample_student_t(RngStream& rng, double dof);

// Neumaier-compensated sum; the order of terms matters only at rounding level.
double compensated_sum(std::span<const double> values);

class KahanAccumulator {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace subfield
