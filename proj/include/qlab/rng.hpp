#pragma once
#include <cstdint>
#include <random>

namespace qlab {

// Deterministic per-(seed, stream) generator. Stream k of master seed s
// always yields the same draw sequence on a given platform, so ensemble
// sample k can be regenerated in isolation. Parallel code gives each
// sample its own stream and never shares engines between threads.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t master_seed, std::uint64_t stream_id = 0)
      : master_(master_seed), stream_(stream_id),
        engine_(mix(master_seed, stream_id)) {}

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

  double uniform() {  // [0,1)
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  double gaussian() {
    return std::normal_distribution<double>(0.0, 1.0)(engine_);
  }
  std::uint64_t integer(std::uint64_t bound) {  // [0,bound)
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) ^ splitmix(~stream));
  }

  std::uint64_t master_, stream_;
  std::mt19937_64 engine_;
};

}  // namespace qlab
