#include "tsallis_lab/rng.hpp"

namespace tsallis_lab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double RngStream::uniform(std::uint64_t round, Purpose purpose, std::uint32_t lane) const {
  // One Philox block yields two doubles, so lanes come in pairs.
  const std::uint32_t block = lane >> 1;
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(round >> 32),
      (static_cast<std::uint32_t>(purpose) << 24) | (block & 0x00FFFFFFu),
      static_cast<std::uint32_t>(replication_)};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(master_seed_) ^ static_cast<std::uint32_t>(replication_ >> 32),
      static_cast<std::uint32_t>(master_seed_ >> 32)};
  const auto out = philox4x32(counter, key);
  const std::size_t half = (lane & 1u) ? 2 : 0;
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(out[half]) << 32) | static_cast<std::uint64_t>(out[half + 1]);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace tsallis_lab
