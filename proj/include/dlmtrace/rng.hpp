#pragma once

#include <cstdint>
#include <string_view>

namespace dlmtrace {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
std::uint64_t splitmix64(std::uint64_t x);

/// Combines two 64-bit values into one well-mixed key.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// 64-bit FNV-1a hash of a string, passed through splitmix64.
std::uint64_t hash_string(std::string_view s);

/// Counter-based generator. The i-th draw of substream `stream` under `key`
/// is splitmix64(k + (i + 1) * 0x9E3779B97F4A7C15) with k = mix_seed(key,
/// stream). Any (key, stream, i) triple can be evaluated independently, so
/// results do not depend on scheduling or on how many draws other streams
/// consumed.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (cosine branch only, two draws each).
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dlmtrace
