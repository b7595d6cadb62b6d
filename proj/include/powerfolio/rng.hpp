#pragma once
// Counter-based random streams (Philox4x32-10, Salmon et al., SC 2011).
// A (seed, stream) pair addresses an independent sequence that can be
// generated in any order, so parallel and serial runs produce identical
// draws. Also home of the fixed-tree pairwise summation used wherever a
// reduction must not depend on worker count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace powerfolio {

/// One 10-round Philox4x32 block: 4 output words from a 128-bit counter and
/// a 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Sequential view of the (seed, stream) Philox sequence: 64-bit words,
/// uniforms in (0, 1), and standard normals via Box-Muller.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform draw strictly inside (0, 1); safe under log().
  double next_uniform();
  /// Standard normal draw; consumes uniforms in pairs.
  double next_normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffer_pos_ = 2;
  double pending_normal_ = 0.0;
  bool has_pending_normal_ = false;
};

/// Sum with a fixed reduction tree determined only by the range length, so
/// the result is bit-stable no matter how the values were produced.
double pairwise_sum(const double* data, std::size_t n);
double pairwise_sum(const std::vector<double>& values);

}  // namespace powerfolio
