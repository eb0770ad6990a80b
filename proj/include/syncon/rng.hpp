#pragma once

// Counter-based random streams.
//
// A stream is identified by (seed, replication, stream id). The n-th draw is
// a pure function of that key and n, so replications can be generated in any
// order, on any thread, and still reproduce bit for bit.

#include <cstdint>
#include <limits>

namespace syncon {

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
};

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(StreamKey key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal via Box-Muller; the second variate of each pair is kept.
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace syncon
