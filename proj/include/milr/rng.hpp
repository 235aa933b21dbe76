#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace milr {

// Seeded stream. Sub-streams are derived by hashing (seed, keys...) through
// seed_seq, so a sweep worker keyed by (arch, seed index) never shares state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) { reseed({}); }

  std::uint64_t seed() const { return seed_; }

  Rng derive(std::initializer_list<std::uint64_t> keys) const {
    Rng r(seed_);
    r.reseed(keys);
    return r;
  }

  double normal() { return normal_(engine_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(engine_); }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  void reseed(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    for (auto k : keys) {
      words.push_back(static_cast<std::uint32_t>(k));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    words.push_back(static_cast<std::uint32_t>(keys.size()));
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
    normal_.reset();
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace milr
