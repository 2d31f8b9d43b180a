#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

#include "topiclab/types.hpp"

namespace topiclab::rng {

// Derives a child stream key from a master seed and a path of tags.
// All randomness in the library flows through keys built this way, so any
// unit of work (document, sample, restart, EM iteration) owns a stream that
// is independent of scheduling and worker count.
std::uint64_t substream_key(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// xoshiro256++ seeded from a 64-bit key via splitmix64.
class Stream {
 public:
  explicit Stream(std::uint64_t key);

  std::uint64_t next_u64();
  // Uniform on [0,1) with 53-bit resolution.
  double uniform();
  // Standard normal (Marsaglia polar method, caches the spare deviate).
  double normal();
  // Gamma(shape, scale=1), shape > 0 (Marsaglia-Tsang; boosted for shape < 1).
  double gamma(double shape);
  double beta(double a, double b);
  // Exact Binomial(n, p); inversion for small n*p, BTRD rejection otherwise.
  std::int64_t binomial(std::int64_t n, double p);
  // Exact Poisson(mean); gamma-interarrival reduction for large means.
  std::int64_t poisson(double mean);

  // Dirichlet(alpha) via gamma normalization. `order` variants draw the
  // gammas following the given index traversal, which keeps the output
  // equivariant under relabelings that permute `alpha` and `order` together.
  Vector dirichlet(const Vector& alpha);
  void dirichlet_ordered(const Vector& alpha, std::span<const int> order, Vector& out);

  // Multinomial(n, p) by conditional binomials, visiting categories in
  // decreasing-probability order (ties by index). For distinct probabilities
  // the draw commutes with category relabeling.
  void multinomial(std::int64_t n, const Vector& p, std::span<std::int64_t> out);

  // Uniform point on the unit sphere in R^k.
  Vector unit_sphere(int k);

 private:
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace topiclab::rng
