#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace archpipe {

// 64-bit FNV-1a. Used for prompt hashes in the audit trail and for deriving
// per-scene RNG streams; stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex16(std::uint64_t v);

// SplitMix64 stream. All pipeline randomness goes through this generator so
// that outputs are reproducible independent of the standard library build.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Uniform double in [0, 1).
  double next_unit();

 private:
  std::uint64_t state_;
};

// Seed for a (scene, stage) substream of the global run seed.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view scene_id,
                          std::string_view stage);

// In-place Fisher-Yates with a SplitMix64 stream; deterministic everywhere.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with(std::string_view text, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);

// Lowercased alphanumeric tokens; any non-alphanumeric byte separates.
std::vector<std::string> alnum_tokens(std::string_view s);

// Whitespace-separated word count (used for answer-length statistics).
std::size_t word_count(std::string_view s);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(std::string_view text);

void log_warn(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace archpipe
