#pragma once

#include <cstdint>
#include <string>

#include "pear/linalg.hpp"

namespace pear {

struct SizesExceedData : std::runtime_error {
  explicit SizesExceedData(const std::string& what) : std::runtime_error(what) {}
};

struct GenConfig {
  int p = 5;   // feature dimension
  int d = 0;   // cost dimension
  int deg = 2;
  double noise_half_width = 0.0;  // costs scaled by U(1 - w, 1 + w); 0 disables
  std::uint64_t seed = 0;
  int train = 1000;
  int val = 500;
  int test = 500;
  double bernoulli = 0.5;  // density of the binary mixing matrix

  int total() const { return train + val + test; }
};

/// Synthetic features and costs. Costs follow
///   c_ij = [ (1/3.5^deg) * ((B x_i)_j / sqrt(p) + 3)^deg + 1 ] * eps_ij
/// with x ~ N(0, I_p), B binary, and eps the multiplicative noise.
struct Dataset {
  Matrix B;  // d x p, entries in {0, 1}
  Matrix X;  // count x p
  Matrix C;  // count x d
  GenConfig config;

  int count() const { return static_cast<int>(X.rows()); }
};

struct SplitView {
  int begin = 0;
  int count = 0;
};

struct Splits {
  SplitView train, val, test;
};

/// Noise-free polynomial kernel of the cost mapping:
///   (1/3.5^deg) * (bx / sqrt(p) + 3)^deg + 1
/// where bx is one entry of B x.
double cost_mapping(double bx, int p, int deg);

/// Deterministic per seed; independent substreams drive B, X and eps.
Dataset generate(const GenConfig& cfg);

/// Contiguous disjoint ranges in generation order.
Splits split(const Dataset& ds, int train, int val, int test);
inline Splits split(const Dataset& ds) {
  return split(ds, ds.config.train, ds.config.val, ds.config.test);
}

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace pear
