#include "powerfolio/rng.hpp"

#include <cmath>
#include <numbers>

namespace powerfolio {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c,
                         const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

// Map a 64-bit word to (0, 1): 53 mantissa bits plus a half-ulp offset so
// neither endpoint can be produced.
inline double u64_to_unit(std::uint64_t word) {
  return (static_cast<double>(word >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(counter, key);
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return counter;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      stream_{static_cast<std::uint32_t>(stream),
              static_cast<std::uint32_t>(stream >> 32)} {}

void CounterStream::refill() {
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32), stream_[0], stream_[1]};
  const auto words = philox4x32(counter, key_);
  buffer_[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  buffer_[1] = (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
  buffer_pos_ = 0;
  ++block_;
}

std::uint64_t CounterStream::next_u64() {
  if (buffer_pos_ >= 2) refill();
  return buffer_[buffer_pos_++];
}

double CounterStream::next_uniform() { return u64_to_unit(next_u64()); }

double CounterStream::next_normal() {
  if (has_pending_normal_) {
    has_pending_normal_ = false;
    return pending_normal_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  pending_normal_ = radius * std::sin(angle);
  has_pending_normal_ = true;
  return radius * std::cos(angle);
}

double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 16) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum(values.data(), values.size());
}

}  // namespace powerfolio
