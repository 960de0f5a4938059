#pragma once

#include <cstdint>

#include "relobi/crossbar.hpp"

namespace relobi::testing {

inline SystemConfig small_system(unsigned n, unsigned m, Design d = Design::relobi) {
  SystemConfig c;
  c.topology.n_managers = n;
  c.topology.n_subordinates = m;
  c.topology.map = AddressMap::uniform(m);
  c.design = d;
  return c;
}

// One splitmix64 output for state x, written out independently of the library.
inline uint64_t splitmix64(uint64_t x) {
  uint64_t z = x + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace relobi::testing
