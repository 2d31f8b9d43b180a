#pragma once

#include <cstdint>
#include <vector>

#include "topiclab/types.hpp"

namespace topiclab::scatter {

struct ScatterVerdict {
  enum class Condition { SS, AlphaBetaSS };
  Condition condition = Condition::SS;
  double alpha = 0.0;  // AlphaBetaSS only
  double beta = 0.0;   // AlphaBetaSS only
  int samples_used = 0;
  int failures = 0;
  double failure_fraction = 0.0;
  std::vector<Vector> witnesses;  // up to 10 failing points, in sample order
  double tolerance = 0.0;

  bool falsified() const { return failures > 0; }
};

// Randomized (S1) check: m points uniform on the insphere boundary
// bd K* intersected with the simplex, each tested for membership in conv(W).
// Zero failures is evidence for (S1); (S2) is not certified here.
ScatterVerdict check_ss(const MixingMatrix& w, int m, double tol, std::uint64_t seed,
                        int threads = 1);

// (S1) as above, plus randomized falsification of (S3): m unit vectors x;
// x is a counterexample iff x lies in the alpha-enlargements of cone(W)* and
// bd K but in no beta-cone about a coordinate axis (max_f x_f < sqrt(1-beta^2)).
ScatterVerdict check_alpha_beta_ss(const MixingMatrix& w, double alpha, double beta, int m,
                                   std::uint64_t seed, double tol = 1e-8, int threads = 1);

// k(k-1) columns (1-x) e_i + x e_j over ordered pairs i != j; provably
// sufficiently scattered for 0 <= x < 1/k.
MixingMatrix make_corner_pattern_weights(int k, double x);

}  // namespace topiclab::scatter
