#pragma once

#include <array>
#include <cstdint>

namespace sgen {

/// Philox4x32-10 block function (counter-based, stateless).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// Gaussian substream keyed by the seed and addressed by (surrogate, band,
/// time). Draw j uses counter (j / 2, time, band, surrogate), so any stream
/// can be reproduced without touching the others.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t surrogate, std::uint32_t band, std::uint32_t time);

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by inversion of the uniform.
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t surrogate_, band_, time_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 2;  // uniforms consumed from buf_
};

NormalStream rng_stream(std::uint64_t seed, std::uint32_t surrogate, std::uint32_t band, std::uint32_t time);

/// Standard normal quantile.
double normal_quantile(double u);

}  // namespace sgen
