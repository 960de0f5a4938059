#pragma once

#include <bit>
#include <cstdint>
#include <string>

namespace relobi {

// Codeword storage. Groups are limited to 128 bits including check bits.
using Bits = unsigned __int128;

inline constexpr unsigned kMaxCodewordBits = 128;

constexpr Bits bit_mask(unsigned width) {
  return width >= 128 ? ~Bits{0} : ((Bits{1} << width) - 1);
}

constexpr uint64_t mask64(unsigned width) {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

constexpr int popcount(Bits v) {
  return std::popcount(static_cast<uint64_t>(v)) +
         std::popcount(static_cast<uint64_t>(v >> 64));
}

constexpr bool parity(Bits v) { return popcount(v) & 1; }

constexpr bool test_bit(Bits v, unsigned i) { return (v >> i) & 1; }

// Number of bits needed to hold the values 0 .. n-1.
constexpr unsigned bits_for(uint64_t n) {
  return n <= 1 ? 0 : static_cast<unsigned>(std::bit_width(n - 1));
}

// Bitwise 2-out-of-3 majority.
template <class T>
constexpr T majority(T a, T b, T c) {
  return (a & b) | (a & c) | (b & c);
}

inline std::string to_hex(Bits v) {
  static constexpr char digits[] = "0123456789abcdef";
  if (v == 0) return "0x0";
  std::string out;
  while (v != 0) {
    out.insert(out.begin(), digits[static_cast<unsigned>(v & 0xf)]);
    v >>= 4;
  }
  return "0x" + out;
}

// splitmix64 finalizer
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace relobi
