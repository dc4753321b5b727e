#pragma once

#include <cmath>
#include <cstdint>

// Counter-based deterministic random streams. Every draw is keyed on the run
// seed plus structural coordinates (agent, day, turn, purpose), so results are
// independent of evaluation order and identical across platforms.

namespace wardlab::rng {

constexpr std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix(a ^ splitmix(b));
}

constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t a = 0,
                            std::uint64_t b = 0, std::uint64_t c = 0,
                            std::uint64_t d = 0) {
  return mix(mix(mix(mix(seed, a), b), c), d);
}

// Sequential stream seeded from a key. State advances splitmix-style.
class Stream {
 public:
  explicit Stream(std::uint64_t k) : state_(k) {}

  std::uint64_t next() {
    state_ = splitmix(state_);
    return state_;
  }

  // uniform in [0, 1)
  double unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, n); n must be > 0
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(next() % n);
  }

  // standard normal via Box-Muller (one value per call, second discarded)
  double gauss() {
    double u1 = unit();
    double u2 = unit();
    while (u1 <= 0.0) u1 = unit();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Purpose tags keep per-turn draws for different decisions independent.
enum class Purpose : std::uint64_t {
  action_kind = 1,
  whisper_target = 2,
  sexual_emit = 3,
  protective_emit = 4,
  template_pick = 5,
  keyword_pick = 6,
  vote = 7,
};

inline Stream turn_stream(std::uint64_t run_seed, int agent, int day, int turn,
                          Purpose purpose) {
  return Stream(key(run_seed, static_cast<std::uint64_t>(agent),
                    static_cast<std::uint64_t>(day),
                    static_cast<std::uint64_t>(turn),
                    static_cast<std::uint64_t>(purpose)));
}

}  // namespace wardlab::rng
