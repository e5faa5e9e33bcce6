#include "rxnsens/random.hpp"

#include <stdexcept>

namespace rxnsens {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
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

UniformStream::UniformStream(const StreamKey& key)
    : key_(key),
      philox_key_{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)},
      counter_word1_(0) {
  if (key.channel_index >= (1u << 28)) throw std::out_of_range("stream channel index too large");
  counter_word1_ = key.channel_index | (static_cast<std::uint32_t>(key.leg) << 28);
}

void UniformStream::refill() {
  if (block_ > 0xFFFFFFFFull) throw std::overflow_error("random stream exhausted");
  buffer_ = philox4x32({static_cast<std::uint32_t>(block_), counter_word1_,
                        static_cast<std::uint32_t>(key_.trajectory_index),
                        static_cast<std::uint32_t>(key_.trajectory_index >> 32)},
                       philox_key_);
  ++block_;
  used_ = 0;
}

std::uint64_t UniformStream::next_u64() {
  if (used_ >= 4) refill();
  const std::uint64_t value = (static_cast<std::uint64_t>(buffer_[used_]) << 32) | buffer_[used_ + 1];
  used_ += 2;
  return value;
}

std::pair<StreamKey, StreamKey> coupled_keys(Coupling coupling, FdScheme scheme, std::uint64_t seed,
                                             std::uint64_t trajectory_index, std::uint32_t channel_index) {
  StreamKey lower{seed, trajectory_index, channel_index, Leg::nominal};
  StreamKey upper = lower;
  if (coupling == Coupling::IRN) {
    upper.leg = Leg::perturbed_plus;
    if (scheme == FdScheme::two_sided) lower.leg = Leg::perturbed_minus;
  }
  return {lower, upper};
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(seed);
  for (const auto tag : tags) h = mix64(h ^ mix64(tag + 0x632BE59BD9B4E019ull));
  return h;
}

}  // namespace rxnsens
