#include "topiclab/scatter.hpp"

#include <cmath>

#include "topiclab/geometry.hpp"
#include "topiclab/parallel.hpp"
#include "topiclab/rng.hpp"

namespace topiclab::scatter {

namespace {

constexpr std::uint64_t kTagSphere = 0x737068657265ULL;
constexpr int kMaxWitnesses = 10;

void require_weights_on_simplex(const MixingMatrix& w) {
  require_column_stochastic(w.m, "scatter check: W columns must lie in the simplex");
}

void collect_witnesses(ScatterVerdict& verdict, const std::vector<char>& failed,
                       const std::vector<Vector>& points) {
  for (std::size_t i = 0; i < failed.size(); ++i) {
    if (!failed[i]) continue;
    ++verdict.failures;
    if (static_cast<int>(verdict.witnesses.size()) < kMaxWitnesses)
      verdict.witnesses.push_back(points[i]);
  }
}

}  // namespace

ScatterVerdict check_ss(const MixingMatrix& w, int m, double tol, std::uint64_t seed,
                        int threads) {
  require_weights_on_simplex(w);
  const int k = static_cast<int>(w.num_topics());
  if (k < 3) throw UsageError("check_ss: need k >= 3");
  if (m < 1) throw UsageError("check_ss: need at least one sample");
  if (tol < 0.0) throw UsageError("check_ss: tolerance must be >= 0");

  const auto points = geometry::sample_insphere_boundary(k, m, seed);
  std::vector<char> failed(static_cast<std::size_t>(m), 0);
  parallel_for(m, threads, [&](int, int i) {
    if (!geometry::membership(points[static_cast<std::size_t>(i)], w.m, tol))
      failed[static_cast<std::size_t>(i)] = 1;
  });

  ScatterVerdict verdict;
  verdict.condition = ScatterVerdict::Condition::SS;
  verdict.samples_used = m;
  verdict.tolerance = tol;
  collect_witnesses(verdict, failed, points);
  verdict.failure_fraction = static_cast<double>(verdict.failures) / static_cast<double>(m);
  return verdict;
}

ScatterVerdict check_alpha_beta_ss(const MixingMatrix& w, double alpha, double beta, int m,
                                   std::uint64_t seed, double tol, int threads) {
  require_weights_on_simplex(w);
  const int k = static_cast<int>(w.num_topics());
  if (k < 3) throw UsageError("check_alpha_beta_ss: need k >= 3");
  if (m < 1) throw UsageError("check_alpha_beta_ss: need at least one sample");
  if (alpha < 0.0) throw UsageError("check_alpha_beta_ss: alpha must be >= 0");
  if (beta < 0.0 || beta >= 1.0)
    throw UsageError("check_alpha_beta_ss: requires 0 <= beta < 1 (beta-cones cover the sphere at 1)");

  // (S1): insphere-boundary containment, as in check_ss.
  const auto s1_points = geometry::sample_insphere_boundary(k, m, seed);
  std::vector<char> s1_failed(static_cast<std::size_t>(m), 0);
  parallel_for(m, threads, [&](int, int i) {
    if (!geometry::membership(s1_points[static_cast<std::size_t>(i)], w.m, tol))
      s1_failed[static_cast<std::size_t>(i)] = 1;
  });

  // (S3): a unit vector x falsifies it iff it lies in both alpha-enlargements
  // yet outside every beta-cone around a coordinate axis. For unit x the
  // beta-cone test has the closed form max_f x_f >= sqrt(1 - beta^2).
  const double axis_floor = std::sqrt(1.0 - beta * beta);
  std::vector<Vector> s3_points(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    rng::Stream st(rng::substream_key(seed, {kTagSphere, static_cast<std::uint64_t>(i)}));
    s3_points[static_cast<std::size_t>(i)] = st.unit_sphere(k);
  }
  std::vector<char> s3_failed(static_cast<std::size_t>(m), 0);
  parallel_for(m, threads, [&](int, int i) {
    const Vector& x = s3_points[static_cast<std::size_t>(i)];
    const Vector xw = w.m.transpose() * x;
    if ((xw.array() < -alpha).any()) return;            // outside [cone(W)*]^alpha
    if (std::abs(1.0 - x.sum()) > alpha) return;        // outside [bd K]^alpha
    if (x.maxCoeff() >= axis_floor) return;             // inside a beta-cone
    s3_failed[static_cast<std::size_t>(i)] = 1;
  });

  ScatterVerdict verdict;
  verdict.condition = ScatterVerdict::Condition::AlphaBetaSS;
  verdict.alpha = alpha;
  verdict.beta = beta;
  verdict.samples_used = 2 * m;
  verdict.tolerance = tol;
  collect_witnesses(verdict, s1_failed, s1_points);
  collect_witnesses(verdict, s3_failed, s3_points);
  verdict.failure_fraction =
      static_cast<double>(verdict.failures) / static_cast<double>(verdict.samples_used);
  return verdict;
}

MixingMatrix make_corner_pattern_weights(int k, double x) {
  if (k < 2) throw UsageError("corner pattern: need k >= 2");
  if (x < 0.0 || x >= 1.0 / static_cast<double>(k))
    throw UsageError("corner pattern: requires 0 <= x < 1/k");
  MixingMatrix w;
  w.m = Matrix::Zero(k, k * (k - 1));
  Index col = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      w.m(i, col) = 1.0 - x;
      w.m(j, col) += x;
      ++col;
    }
  return w;
}

}  // namespace topiclab::scatter
