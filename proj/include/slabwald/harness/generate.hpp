#pragma once

// Seeded random electrolyte configurations.
//
// Generator: splitmix64. Each call advances the state by 0x9E3779B97F4A7C15
// and mixes it:
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// The initial state is the seed. A uniform double in [0, 1) is (x >> 11) * 2^-53.
// Species are placed in the listed order; each particle draws x, y, z in turn,
// scaled by Lx, Ly and H.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "../core.hpp"

namespace slabwald::harness {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

struct Species {
  int count = 0;
  double valence = 0.0;
};

using Composition = std::vector<Species>;

/// 13 divalent cations and 26 monovalent anions.
inline Composition default_composition() { return {{13, 2.0}, {26, -1.0}}; }

/// Parses "count:valence" entries separated by commas, e.g. "13:2,26:-1".
inline Composition parse_composition(const std::string& text) {
  Composition out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw validation_error("composition entry '" + item + "' is not count:valence");
    }
    try {
      Species s{std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))};
      if (s.count < 0) throw validation_error("negative species count");
      out.push_back(s);
    } catch (const std::logic_error&) {
      throw validation_error("composition entry '" + item + "' is not count:valence");
    }
  }
  return out;
}

inline ChargeSystem gen_system(std::uint64_t seed, const Composition& composition,
                               const Cell& cell) {
  double total = 0.0, qmax = 0.0;
  int n = 0;
  for (const auto& s : composition) {
    total += s.count * s.valence;
    qmax = std::max(qmax, std::abs(s.valence));
    n += s.count;
  }
  if (n == 0) throw validation_error("composition holds no particles");
  if (std::abs(total) > 1e-12 * qmax) throw validation_error("composition is not charge neutral");
  SplitMix64 rng(seed);
  std::vector<Vec3> pos;
  std::vector<double> q;
  for (const auto& s : composition) {
    for (int k = 0; k < s.count; ++k) {
      Vec3 r;
      r.x = rng.uniform() * cell.Lx;
      r.y = rng.uniform() * cell.Ly;
      r.z = rng.uniform() * cell.H;
      pos.push_back(r);
      q.push_back(s.valence);
    }
  }
  return {std::move(pos), std::move(q), cell};
}

}  // namespace slabwald::harness
