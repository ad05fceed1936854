// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pf {

// Deterministic generator: std::mt19937_64 (fully specified by the standard)
// with hand-rolled conversions, so a seed yields the same stream on every
// conforming platform. std::uniform_real_distribution is avoided because
// its output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::size_t below(std::size_t n);

  // Standard normal via Box-Muller; no cached spare so the stream position
  // depends only on call count.
  double normal();

  // Derive an independent child stream (e.g. one per model component).
  Rng split() { return Rng(next_u64() ^ 0x9E3779B97F4A7C15ULL); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace pf
