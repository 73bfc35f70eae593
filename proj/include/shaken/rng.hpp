#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace shaken {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output is a pure
// function of (counter, key), so every random number in the simulation is
// addressed rather than drawn in execution order.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// Independent randomness domains. Each consumer owns one so that, e.g., the
// bond draws of an FK sweep never alias the heat-bath uniforms of the same
// step number.
enum class Stream : std::uint32_t {
  forward_dynamics = 1,
  past_dynamics = 2,
  bonds = 3,
  clusters = 4,
  initial_state = 5,
  seeds = 6,
};

// Counter-based generator: u(seed, stream, step, index).
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Philox4x32::Counter block(Stream stream, std::uint64_t step, std::uint64_t index) const {
    if (index > 0xFFFFFFFFull) throw std::out_of_range("CounterRng: index exceeds 32 bits");
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream),
                                  static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    return Philox4x32::apply(ctr, key);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform(Stream stream, std::uint64_t step, std::uint64_t index) const {
    const auto out = block(stream, step, index);
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  std::uint64_t bits64(Stream stream, std::uint64_t step, std::uint64_t index) const {
    const auto out = block(stream, step, index);
    return std::uint64_t{out[0]} << 32 | out[1];
  }

  // Seed of the i-th independent child generator.
  CounterRng child(std::uint64_t i) const { return CounterRng(bits64(Stream::seeds, 0, i)); }

 private:
  std::uint64_t seed_ = 0;
};

}  // namespace shaken
