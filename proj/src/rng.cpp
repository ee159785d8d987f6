#include "sgen/rng.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace sgen {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint32_t surrogate, std::uint32_t band, std::uint32_t time)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      surrogate_(surrogate),
      band_(band),
      time_(time) {}

double NormalStream::uniform() {
  if (used_ == 2) {
    buf_ = philox4x32({block_++, time_, band_, surrogate_}, key_);
    used_ = 0;
  }
  const std::uint64_t bits = (static_cast<std::uint64_t>(buf_[2 * used_]) << 32) | buf_[2 * used_ + 1];
  ++used_;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::normal() { return normal_quantile(uniform()); }

NormalStream rng_stream(std::uint64_t seed, std::uint32_t surrogate, std::uint32_t band, std::uint32_t time) {
  return {seed, surrogate, band, time};
}

double normal_quantile(double u) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u); }

}  // namespace sgen
