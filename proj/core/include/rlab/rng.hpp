#pragma once

#include <cstdint>

namespace rlab {

/// Counter-based random stream. Two streams with distinct (base_seed,
/// stream_id) are independent; the same pair reproduces the identical
/// sequence regardless of thread count. Output is a pure function of
/// (base_seed, stream_id, counter), so parallel reproducibility holds by
/// construction.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform in (0, 1).
  double uniform01();
  double uniform(double a, double b);
  /// Standard normal via Box-Muller (deterministic, no library distributions).
  double normal();
  /// Integer uniform in [0, n).
  std::uint64_t next_below(std::uint64_t n);

  /// Derived independent stream; used to give each work unit its own stream.
  RngStream substream(std::uint64_t i) const;

 private:
  std::uint64_t base_seed_, stream_id_, key_;
  std::uint64_t ctr_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rlab
