#include "syncon/rng.hpp"

#include <cmath>
#include <numbers>

namespace syncon {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterRng::CounterRng(StreamKey key, std::uint64_t stream) {
  std::uint64_t k = mix64(key.seed + kGolden);
  k = mix64(k ^ (key.replication + 0x632be59bd9b4e019ULL));
  k = mix64(k ^ (stream + 0x8cb92ba72f3d8dd7ULL));
  key_ = k;
}

CounterRng::result_type CounterRng::operator()() {
  // Two rounds of mixing over (key, counter); one round of SplitMix64 on a
  // keyed Weyl sequence is already a strong generator, the second decorrelates
  // neighbouring keys.
  const std::uint64_t x = key_ + kGolden * (++counter_);
  return mix64(mix64(x) ^ key_);
}

double CounterRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace syncon
