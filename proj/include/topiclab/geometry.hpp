#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "topiclab/rng.hpp"
#include "topiclab/types.hpp"

// Simplex / convex-polytope primitives. A polytope is represented by its
// vertex matrix: columns of a V x k dense matrix. Volumes are the
// (k-1)-dimensional measure of conv(C) inside aff(C).
namespace topiclab::geometry {

// Euclidean projection onto the probability simplex (sort-based).
template <typename Derived>
Vector project_to_simplex(const Eigen::MatrixBase<Derived>& v) {
  const Vector dense = v;
  const Index n = dense.size();
  std::vector<double> u(dense.data(), dense.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double cand = (1.0 - cumsum) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] + cand > 0.0) tau = cand;
  }
  return (dense.array() + tau).cwiseMax(0.0).matrix();
}

// sqrt(det(Gram)) of the columns of `diff` through a plain Cholesky with
// non-positive pivots clipped to zero (degenerate -> 0).
template <typename Derived>
double sqrt_gram_det(const Eigen::MatrixBase<Derived>& diff) {
  const Index m = diff.cols();
  if (m == 0) return 1.0;
  Matrix g = diff.transpose() * diff;
  Matrix l = Matrix::Zero(m, m);
  double sqrt_det = 1.0;
  for (Index j = 0; j < m; ++j) {
    double pivot = g(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot <= 0.0) return 0.0;
    l(j, j) = std::sqrt(pivot);
    sqrt_det *= l(j, j);
    for (Index i = j + 1; i < m; ++i)
      l(i, j) = (g(i, j) - (l.row(i).head(j) * l.row(j).head(j).transpose()).value()) / l(j, j);
  }
  return sqrt_det;
}

// (k-1)-dimensional volume of conv(C): sqrt(det(G~)) / (k-1)! with G~ the
// Gram matrix of the vertex differences c_j - c_k.
template <typename Derived>
double polytope_volume(const Eigen::MatrixBase<Derived>& vertices) {
  const Index k = vertices.cols();
  if (k < 1) throw UsageError("polytope_volume: need at least one vertex");
  Matrix diff(vertices.rows(), k - 1);
  for (Index j = 0; j + 1 < k; ++j) diff.col(j) = vertices.col(j) - vertices.col(k - 1);
  double factorial = 1.0;
  for (Index i = 2; i < k; ++i) factorial *= static_cast<double>(i);
  return sqrt_gram_det(diff) / factorial;
}

struct DistanceResult {
  double distance = 0.0;
  Vector weights;        // lambda in the simplex, x ~ P * weights
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct DistanceOptions {
  double kkt_tol = 1e-9;
  int max_iterations = 10000;
  // Early exit once the feasible objective certifies distance <= this bound
  // (used by membership queries; < 0 disables).
  double stop_below = -1.0;
};

// min_{lambda in simplex} ||x - P lambda||_2 by accelerated projected
// gradient with restarts. Throws NumericalError if the KKT residual never
// reaches 1e-8.
inline DistanceResult distance_to_polytope(const Vector& x, const Matrix& vertices,
                                           const DistanceOptions& opt = {}) {
  const Index q = vertices.cols();
  if (vertices.rows() != x.size())
    throw UsageError("distance_to_polytope: dimension mismatch between point and vertices");
  if (q == 0) throw UsageError("distance_to_polytope: empty vertex set");

  DistanceResult res;
  if (q == 1) {
    res.distance = (x - vertices.col(0)).norm();
    res.weights = Vector::Ones(1);
    return res;
  }

  // Lipschitz constant of the gradient: sigma_max(P)^2 by power iteration.
  double lip;
  {
    rng::Stream st(rng::substream_key(0x706f776572ULL, {static_cast<std::uint64_t>(q)}));
    Vector v(q);
    for (Index i = 0; i < q; ++i) v[i] = st.normal();
    v.normalize();
    double s = 0.0;
    Vector pv(vertices.rows());
    for (int it = 0; it < 100; ++it) {
      pv.noalias() = vertices * v;
      v.noalias() = vertices.transpose() * pv;
      s = v.norm();
      if (s == 0.0) break;
      v /= s;
    }
    lip = std::max(s, 1e-30) * 1.05;
  }

  // Warm start at the nearest vertex.
  Index best_j = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < q; ++j) {
    const double dj = (x - vertices.col(j)).squaredNorm();
    if (dj < best_d) {
      best_d = dj;
      best_j = j;
    }
  }
  Vector lambda = Vector::Zero(q);
  lambda[best_j] = 1.0;

  auto kkt_residual = [&](const Vector& lam) {
    const Vector grad = vertices.transpose() * (vertices * lam - x);
    return (lam - project_to_simplex(lam - grad)).lpNorm<Eigen::Infinity>();
  };

  // Active-set finisher seeded from the support of `lam`: solve the
  // equality-constrained least squares on the current face, drop the most
  // negative coefficient while infeasible, and add the most violating
  // off-support coordinate while the KKT multiplier test fails. Falls back to
  // `lam` if it does not terminate cleanly.
  auto polish = [&](const Vector& lam) -> Vector {
    std::vector<Index> support;
    std::vector<char> in_support(static_cast<std::size_t>(q), 0);
    for (Index i = 0; i < q; ++i) {
      if (lam[i] > 1e-10) {
        support.push_back(i);
        in_support[static_cast<std::size_t>(i)] = 1;
      }
    }
    if (support.empty()) return lam;
    Vector assembled = lam;
    for (int round = 0; round < 4 * static_cast<int>(q) + 16; ++round) {
      if (support.empty()) return lam;
      const auto s = static_cast<Index>(support.size());
      Matrix ps(vertices.rows(), s);
      for (Index j = 0; j < s; ++j)
        ps.col(j) = vertices.col(support[static_cast<std::size_t>(j)]);
      Matrix kkt_mat = Matrix::Zero(s + 1, s + 1);
      kkt_mat.topLeftCorner(s, s) = ps.transpose() * ps;
      kkt_mat.topRightCorner(s, 1).setOnes();
      kkt_mat.bottomLeftCorner(1, s).setOnes();
      Vector rhs(s + 1);
      rhs.head(s) = ps.transpose() * x;
      rhs[s] = 1.0;
      const Vector sol = kkt_mat.fullPivLu().solve(rhs);
      const Vector beta = sol.head(s);

      Index worst = -1;
      double worst_val = -1e-12;
      for (Index j = 0; j < s; ++j) {
        if (beta[j] < worst_val) {
          worst_val = beta[j];
          worst = j;
        }
      }
      if (worst >= 0) {  // infeasible face optimum: drop and re-solve
        in_support[static_cast<std::size_t>(support[static_cast<std::size_t>(worst)])] = 0;
        support.erase(support.begin() + worst);
        continue;
      }

      assembled.setZero();
      double sum = 0.0;
      for (Index j = 0; j < s; ++j) {
        assembled[support[static_cast<std::size_t>(j)]] = std::max(beta[j], 0.0);
        sum += std::max(beta[j], 0.0);
      }
      if (sum <= 0.0) return lam;
      assembled /= sum;

      // Multiplier test: gradient + nu must be nonnegative off support.
      const double nu = sol[s];
      const Vector grad_all = vertices.transpose() * (vertices * assembled - x);
      Index add = -1;
      double add_val = -1e-10 * std::max(1.0, std::abs(nu));
      for (Index i = 0; i < q; ++i) {
        if (in_support[static_cast<std::size_t>(i)]) continue;
        const double viol = grad_all[i] + nu;
        if (viol < add_val) {
          add_val = viol;
          add = i;
        }
      }
      if (add < 0) return assembled;
      support.push_back(add);
      in_support[static_cast<std::size_t>(add)] = 1;
    }
    return lam;
  };

  Vector y = lambda, grad(q), resid(vertices.rows());
  double t = 1.0;
  double f_prev = 0.5 * (x - vertices * lambda).squaredNorm();
  const double step = 1.0 / lip;
  double kkt = kkt_residual(lambda);
  int it = 0;
  for (; kkt >= opt.kkt_tol && it < opt.max_iterations; ++it) {
    resid.noalias() = vertices * y - x;
    grad.noalias() = vertices.transpose() * resid;
    Vector lambda_next = project_to_simplex(y - step * grad);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Vector y_next = lambda_next + ((t - 1.0) / t_next) * (lambda_next - lambda);

    const double f_next = 0.5 * (x - vertices * lambda_next).squaredNorm();
    if (f_next > f_prev) {
      if (t == 1.0) {  // the plain gradient step stalled: numerical floor
        const Vector candidate = polish(lambda);
        if (0.5 * (x - vertices * candidate).squaredNorm() <= f_prev + 1e-16) {
          const double kkt_cand = kkt_residual(candidate);
          if (kkt_cand < kkt) {
            lambda = candidate;
            kkt = kkt_cand;
          }
        }
        if (kkt < opt.kkt_tol) break;
        kkt = std::min(kkt, kkt_residual(lambda));
        break;
      }
      y = lambda;  // restart momentum on a non-monotone accelerated step
      t = 1.0;
      continue;
    }
    lambda = std::move(lambda_next);
    y = std::move(y_next);
    t = t_next;
    f_prev = f_next;

    if (opt.stop_below >= 0.0 && std::sqrt(2.0 * f_next) <= opt.stop_below) {
      kkt = kkt_residual(lambda);
      break;
    }
    if ((it & 63) == 48) {
      const Vector candidate = polish(lambda);
      const double f_cand = 0.5 * (x - vertices * candidate).squaredNorm();
      if (f_cand <= f_prev + 1e-16) {
        const double kkt_cand = kkt_residual(candidate);
        if (kkt_cand < opt.kkt_tol) {
          lambda = candidate;
          kkt = kkt_cand;
          break;
        }
      }
    }
    if ((it & 7) == 0) kkt = kkt_residual(lambda);
  }
  if (kkt >= opt.kkt_tol) {
    const Vector candidate = polish(lambda);
    if (0.5 * (x - vertices * candidate).squaredNorm() <= f_prev + 1e-16) {
      const double kkt_cand = kkt_residual(candidate);
      if (kkt_cand < kkt) {
        lambda = candidate;
        kkt = kkt_cand;
      }
    }
  }

  res.distance = (x - vertices * lambda).norm();
  res.weights = lambda;
  res.kkt_residual = kkt;
  res.iterations = it;
  if (kkt > 1e-8 && !(opt.stop_below >= 0.0 && res.distance <= opt.stop_below)) {
    std::ostringstream msg;
    msg << "distance_to_polytope: no convergence after " << opt.max_iterations
        << " iterations, residual " << kkt << " (best distance " << res.distance << ")";
    throw NumericalError(msg.str());
  }
  return res;
}

inline bool membership(const Vector& x, const Matrix& vertices, double tol) {
  DistanceOptions opt;
  opt.stop_below = tol;
  return distance_to_polytope(x, vertices, opt).distance <= tol;
}

struct AffineProjection {
  Matrix projector;  // symmetric idempotent V x V, range = span(c_j - anchor)
  Vector anchor;     // first vertex
  Index rank = 0;

  Vector project(const Vector& y) const { return anchor + projector * (y - anchor); }
};

// Orthogonal projector onto aff(C) built from U' = (c_2 - c_1, ..., c_k - c_1);
// rank-deficient vertex sets fall back to the pseudo-inverse with the rank
// reported.
inline AffineProjection affine_projection(const Matrix& vertices) {
  const Index k = vertices.cols();
  if (k < 1) throw UsageError("affine_projection: need at least one vertex");
  AffineProjection ap;
  ap.anchor = vertices.col(0);
  if (k == 1) {
    ap.projector = Matrix::Zero(vertices.rows(), vertices.rows());
    ap.rank = 0;
    return ap;
  }
  Matrix diff(vertices.rows(), k - 1);
  for (Index j = 1; j < k; ++j) diff.col(j - 1) = vertices.col(j) - ap.anchor;
  Eigen::BDCSVD<Matrix> svd(diff, Eigen::ComputeThinU);
  const double thresh =
      1e-12 * std::max(1.0, svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
  Index rank = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > thresh) ++rank;
  const Matrix basis = svd.matrixU().leftCols(rank);
  ap.projector.noalias() = basis * basis.transpose();
  ap.rank = rank;
  return ap;
}

inline double smallest_positive_singular_value(const Matrix& m, Index* rank_out = nullptr) {
  Eigen::BDCSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double thresh = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  double smallest = 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > thresh) {
      smallest = sv[i];
      ++rank;
    }
  }
  if (rank_out) *rank_out = rank;
  return smallest;
}

// Scales conv(C) about its vertex centroid: c_f -> (1 + rho*delta)(c_f - cbar) + cbar
// with rho = k / sigma+_min(C). Requires full column rank.
inline Matrix delta_enlargement(const Matrix& vertices, double delta) {
  if (delta < 0.0) throw UsageError("delta_enlargement: delta must be >= 0");
  const Index k = vertices.cols();
  Index rank = 0;
  const double sigma_min = smallest_positive_singular_value(vertices, &rank);
  if (rank < k) throw NumericalError("delta_enlargement: vertex matrix is rank deficient");
  const double rho = static_cast<double>(k) / sigma_min;
  const Vector centroid = vertices.rowwise().mean();
  Matrix out(vertices.rows(), k);
  const double scale = 1.0 + rho * delta;
  for (Index j = 0; j < k; ++j) out.col(j) = scale * (vertices.col(j) - centroid) + centroid;
  return out;
}

// m points uniform on {x in aff(simplex): ||x - 1/k|| = insphere radius}
// = bd K* intersected with the simplex. Isotropic Gaussian, projected to the
// sum-zero tangent space, then radially normalized. Point i comes from the
// substream (seed, i) so evaluation order never matters.
inline std::vector<Vector> sample_insphere_boundary(int k, int m, std::uint64_t seed,
                                                    bool allow_k2 = false) {
  constexpr std::uint64_t kTagInsphere = 0x696e737068ULL;
  if (k == 2) {
    if (!allow_k2)
      throw UsageError("sample_insphere_boundary: k = 2 degenerates to the midpoint pair; "
                       "pass allow_k2 to request the two endpoints");
    std::vector<Vector> pts;
    pts.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      Vector p(2);
      p << (i % 2 == 0 ? 1.0 : 0.0), (i % 2 == 0 ? 0.0 : 1.0);
      pts.push_back(p);
    }
    return pts;
  }
  if (k < 3) throw UsageError("sample_insphere_boundary: need k >= 3");
  const double radius = 1.0 / std::sqrt(static_cast<double>(k) * (k - 1.0));
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    rng::Stream st(rng::substream_key(seed, {kTagInsphere, static_cast<std::uint64_t>(i)}));
    Vector dir(k);
    for (;;) {
      double mean = 0.0;
      for (int j = 0; j < k; ++j) {
        dir[j] = st.normal();
        mean += dir[j];
      }
      mean /= k;
      dir.array() -= mean;
      const double norm = dir.norm();
      if (norm > 0.0) {
        dir *= radius / norm;
        break;
      }
    }
    pts.push_back(dir.array() + 1.0 / static_cast<double>(k));
  }
  return pts;
}

}  // namespace topiclab::geometry
