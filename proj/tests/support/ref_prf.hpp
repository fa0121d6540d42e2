#pragma once

#include <cstdint>

namespace pvea::testing {

// Reference xorshift-multiply generator written from its definition, for
// cross-checking the library's generator and everything derived from it.
struct RefPrf {
  std::uint64_t s;
  explicit RefPrf(std::uint64_t seed) : s(seed == 0 ? 1 : seed) {}
  std::uint64_t next() {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return s * 0x2545F4914F6CDD1Dull;
  }
};

inline std::uint64_t ref_fold(const std::uint8_t* b) {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  for (int i = 0; i < 8; ++i) {
    hi = (hi << 8) | b[i];
    lo = (lo << 8) | b[8 + i];
  }
  return hi ^ lo;
}

inline RefPrf ref_derive(const std::uint8_t* key, const std::uint8_t* uid, std::uint32_t gop, std::uint64_t tag) {
  RefPrf p(ref_fold(key) ^ ref_fold(uid) ^ gop ^ tag);
  for (int i = 0; i < 8; ++i) p.next();
  return p;
}

}  // namespace pvea::testing
