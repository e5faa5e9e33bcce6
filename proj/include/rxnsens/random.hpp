#ifndef RXNSENS_RANDOM_HPP
#define RXNSENS_RANDOM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>

namespace rxnsens {

/// Which side of a finite-difference pair a stream feeds.
enum class Leg : std::uint8_t { nominal = 0, perturbed_plus = 1, perturbed_minus = 2 };

/// Coupling between the two legs of a finite-difference pair.
enum class Coupling : std::uint8_t { IRN, CRN, CRP };

enum class FdScheme : std::uint8_t { one_sided, two_sided };

/**
 * Identity of one random stream. Channel 0 is the uniform stream consumed by
 * the direct method; channel k >= 1 is the internal Poisson clock of
 * reaction k used by the random time change simulator.
 */
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t trajectory_index = 0;
  std::uint32_t channel_index = 0;
  Leg leg = Leg::nominal;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/**
 * Counter-based uniform source. The sequence is a pure function of the key:
 * block b of stream (seed, traj, channel, leg) is
 * philox(counter = {b, channel | leg << 28, traj_lo, traj_hi}, key = seed).
 */
class UniformStream {
 public:
  explicit UniformStream(const StreamKey& key);

  /// Uniform variate in the open interval (0, 1) on a 2^-52 grid. With 53 bits
  /// the top value (2^53 - 1/2) 2^-53 would round to exactly 1.
  double next() {
    const std::uint64_t bits = next_u64() >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
  }

  /// Unit-rate exponential variate.
  double exponential() { return -std::log(next()); }

  std::uint64_t next_u64();

  const StreamKey& key() const { return key_; }

 private:
  void refill();

  StreamKey key_;
  std::array<std::uint32_t, 2> philox_key_;
  std::uint32_t counter_word1_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;  // in 32-bit words
};

inline UniformStream open_stream(const StreamKey& key) { return UniformStream(key); }

/**
 * Stream keys for the (lower, upper) legs of a finite-difference pair.
 *
 * CRN and CRP give both legs the same key, so their sequences coincide; for
 * CRP pass channel k >= 1 to get the shared clock of reaction k. IRN gives
 * the legs distinct Leg values, hence independent sequences.
 */
std::pair<StreamKey, StreamKey> coupled_keys(Coupling coupling, FdScheme scheme, std::uint64_t seed,
                                             std::uint64_t trajectory_index, std::uint32_t channel_index = 0);

/// Convenience wrapper: CRN keys for a one-sided pair.
inline std::pair<StreamKey, StreamKey> crn_keys(std::uint64_t seed, std::uint64_t trajectory_index) {
  return coupled_keys(Coupling::CRN, FdScheme::one_sided, seed, trajectory_index);
}

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent master seed for a sub-experiment from a list of tags.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

}  // namespace rxnsens

#endif  // RXNSENS_RANDOM_HPP
