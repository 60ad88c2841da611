#include "rlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace rlab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
    : base_seed_(base_seed),
      stream_id_(stream_id),
      key_(mix64(mix64(base_seed + kGolden) ^ stream_id)) {}

std::uint64_t RngStream::next_u64() { return mix64(key_ + (++ctr_) * kGolden); }

double RngStream::uniform01() {
  for (;;) {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform01(); }

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  have_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  // Rejection sampling to avoid modulo bias.
  std::uint64_t limit = n * (~0ull / n);
  for (;;) {
    std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

RngStream RngStream::substream(std::uint64_t i) const {
  return RngStream(base_seed_, mix64(stream_id_ + kGolden) ^ (i + 1));
}

}  // namespace rlab
