#pragma once

// Counter-based Philox4x32-10 generator. A stream is identified by
// (seed, purpose, stream index); the block counter walks within the stream.
// Any draw is a pure function of its coordinates, so replicates evaluated in
// parallel or in any order see the same numbers as a serial run.

#include <array>
#include <cstdint>
#include <limits>

namespace grsir {

enum class StreamPurpose : std::uint32_t {
  Orthogonal = 1,  // random rotation Q
  Predictors = 2,  // X draws
  Noise = 3,       // response noise
  User = 4,
};

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; pairs are consumed in order.
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t purpose_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace grsir
