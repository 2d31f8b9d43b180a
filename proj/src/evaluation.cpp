#include "topiclab/evaluation.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topiclab/estimator.hpp"
#include "topiclab/rng.hpp"

namespace topiclab::evaluation {

namespace {

constexpr std::uint64_t kTagRandomGuess = 0x677565737ULL;

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw UsageError("topic distance: matrices must share the same (V, k) shape");
}

// Column-distance-squared cost matrix: cost(a, b) = ||c_a - cbar_b||^2.
Matrix column_cost(const Matrix& c, const Matrix& cbar) {
  const Index k = c.cols();
  Matrix cost(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) cost(a, b) = (c.col(a) - cbar.col(b)).squaredNorm();
  return cost;
}

// O(k^3) Hungarian algorithm (potentials formulation). Returns row_of[b] =
// the row assigned to column b and the minimal total cost.
double solve_assignment(const Matrix& cost, std::vector<int>& row_of) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  row_of.assign(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    row_of[static_cast<std::size_t>(j - 1)] = p[static_cast<std::size_t>(j)] - 1;
    total += cost(p[static_cast<std::size_t>(j)] - 1, j - 1);
  }
  return total;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

}  // namespace

PermutationDistance frobenius_assignment_distance(const Matrix& c, const Matrix& cbar) {
  require_same_shape(c, cbar);
  const Matrix cost = column_cost(c, cbar);
  PermutationDistance res;
  const double total = solve_assignment(cost, res.permutation);
  res.distance = std::sqrt(std::max(0.0, total));
  return res;
}

PermutationDistance topic_distance(const Matrix& c, const Matrix& cbar) {
  require_same_shape(c, cbar);
  const Index k = c.cols();
  if (k > 10)
    throw UsageError("topic_distance enumerates all k! permutations and requires k <= 10; "
                     "use frobenius_assignment_distance for larger k");

  const Matrix cost = column_cost(c, cbar);

  // Frobenius assignment provides the incumbent and a pruning bound:
  // ||A||_2 >= ||A||_F / sqrt(k).
  PermutationDistance best = frobenius_assignment_distance(c, cbar);
  {
    Matrix diff(c.rows(), k);
    for (Index j = 0; j < k; ++j) diff.col(j) = cbar.col(j) - c.col(best.permutation[static_cast<std::size_t>(j)]);
    best.distance = spectral_norm(diff);
  }

  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  Matrix diff(c.rows(), k);
  const double sqrt_k = std::sqrt(static_cast<double>(k));
  do {
    double frob_sq = 0.0;
    for (Index j = 0; j < k; ++j) frob_sq += cost(perm[static_cast<std::size_t>(j)], j);
    if (std::sqrt(frob_sq) / sqrt_k >= best.distance) continue;
    for (Index j = 0; j < k; ++j)
      diff.col(j) = cbar.col(j) - c.col(perm[static_cast<std::size_t>(j)]);
    const double s = spectral_norm(diff);
    if (s < best.distance) {
      best.distance = s;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double relative_rmse(const Matrix& c_hat, const Matrix& c0, int reference_draws,
                     std::uint64_t seed) {
  require_same_shape(c_hat, c0);
  if (reference_draws < 1)
    throw UsageError("relative_rmse: need at least one random-guess reference draw");
  const double scale = std::sqrt(static_cast<double>(c0.rows()) * static_cast<double>(c0.cols()));
  const double rmse = frobenius_assignment_distance(c_hat, c0).distance / scale;

  const Vector ones = Vector::Ones(c0.rows());
  Matrix guess(c0.rows(), c0.cols());
  double denom = 0.0;
  for (int r = 0; r < reference_draws; ++r) {
    for (Index l = 0; l < c0.cols(); ++l) {
      rng::Stream st(rng::substream_key(
          seed, {kTagRandomGuess, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(l)}));
      guess.col(l) = st.dirichlet(ones);
    }
    denom += frobenius_assignment_distance(guess, c0).distance / scale;
  }
  denom /= static_cast<double>(reference_draws);
  if (denom == 0.0) throw NumericalError("relative_rmse: random-guess baseline is zero");
  return rmse / denom;
}

namespace {

// Top `top_words` word ids of one topic column, by weight with id tie-break.
std::vector<std::int32_t> leading_words(const Matrix& c, Index topic, int top_words) {
  std::vector<std::int32_t> ids(static_cast<std::size_t>(c.rows()));
  std::iota(ids.begin(), ids.end(), 0);
  const auto cmp = [&](std::int32_t a, std::int32_t b) {
    if (c(a, topic) != c(b, topic)) return c(a, topic) > c(b, topic);
    return a < b;
  };
  const auto mid = ids.begin() + std::min<std::size_t>(static_cast<std::size_t>(top_words), ids.size());
  std::partial_sort(ids.begin(), mid, ids.end(), cmp);
  ids.resize(static_cast<std::size_t>(mid - ids.begin()));
  return ids;
}

}  // namespace

MetricReport topic_coherence(const Matrix& c, const Corpus& corpus, int top_words,
                             double epsilon) {
  if (corpus.num_docs < 1) throw UsageError("topic_coherence: corpus is empty");
  if (c.rows() != corpus.vocab_size)
    throw UsageError("topic_coherence: C rows must equal the corpus vocabulary size");
  if (top_words < 1) throw UsageError("topic_coherence: top_words must be positive");
  const int effective_top = std::min<int>(top_words, static_cast<int>(c.rows()));

  const Index k = c.cols();
  std::vector<std::vector<std::int32_t>> tops(static_cast<std::size_t>(k));
  for (Index l = 0; l < k; ++l) tops[static_cast<std::size_t>(l)] = leading_words(c, l, effective_top);

  // Document-level occurrence lists for every word appearing in a top list.
  // Entries are sorted by (doc, word), so each list comes out sorted.
  std::vector<std::vector<std::int32_t>> docs_of(static_cast<std::size_t>(corpus.vocab_size));
  std::vector<char> needed(static_cast<std::size_t>(corpus.vocab_size), 0);
  for (const auto& t : tops)
    for (auto v : t) needed[static_cast<std::size_t>(v)] = 1;
  for (const auto& e : corpus.entries)
    if (needed[static_cast<std::size_t>(e.word)]) docs_of[static_cast<std::size_t>(e.word)].push_back(e.doc);

  auto co_count = [&](std::int32_t a, std::int32_t b) -> std::int64_t {
    const auto& da = docs_of[static_cast<std::size_t>(a)];
    const auto& db = docs_of[static_cast<std::size_t>(b)];
    std::int64_t n = 0;
    std::size_t i = 0, j = 0;
    while (i < da.size() && j < db.size()) {
      if (da[i] == db[j]) {
        ++n;
        ++i;
        ++j;
      } else if (da[i] < db[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return n;
  };

  MetricReport rep;
  rep.name = "topic_coherence";
  std::int64_t skipped = 0;
  rep.details.resize(static_cast<std::size_t>(k), 0.0);
  for (Index l = 0; l < k; ++l) {
    double score = 0.0;
    const auto& t = tops[static_cast<std::size_t>(l)];
    for (std::size_t a = 0; a < t.size(); ++a) {
      for (std::size_t b = 0; b < t.size(); ++b) {
        if (a == b) continue;
        const auto df2 = static_cast<double>(docs_of[static_cast<std::size_t>(t[b])].size());
        if (df2 == 0.0) {
          ++skipped;
          continue;
        }
        score += std::log((static_cast<double>(co_count(t[a], t[b])) + epsilon) / df2);
      }
    }
    rep.details[static_cast<std::size_t>(l)] = score;
    rep.value += score;
  }
  rep.params["top_words"] = effective_top;
  rep.params["epsilon"] = epsilon;
  rep.params["skipped_pairs"] = static_cast<double>(skipped);
  return rep;
}

MetricReport similarity_count(const Matrix& c, int top_words) {
  if (c.cols() < 2) throw UsageError("similarity_count: need at least two topics");
  if (top_words < 1) throw UsageError("similarity_count: top_words must be positive");
  const int effective_top = std::min<int>(top_words, static_cast<int>(c.rows()));
  const Index k = c.cols();
  std::vector<std::vector<std::int32_t>> tops(static_cast<std::size_t>(k));
  for (Index l = 0; l < k; ++l) {
    tops[static_cast<std::size_t>(l)] = leading_words(c, l, effective_top);
    std::sort(tops[static_cast<std::size_t>(l)].begin(), tops[static_cast<std::size_t>(l)].end());
  }
  std::int64_t overlap = 0;
  for (Index l1 = 0; l1 < k; ++l1)
    for (Index l2 = l1 + 1; l2 < k; ++l2) {
      const auto& a = tops[static_cast<std::size_t>(l1)];
      const auto& b = tops[static_cast<std::size_t>(l2)];
      std::size_t i = 0, j = 0;
      while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
          ++overlap;
          ++i;
          ++j;
        } else if (a[i] < b[j]) {
          ++i;
        } else {
          ++j;
        }
      }
    }
  MetricReport rep;
  rep.name = "similarity_count";
  rep.value = static_cast<double>(overlap);
  rep.params["top_words"] = effective_top;
  return rep;
}

MetricReport perplexity(const Matrix& c, const Matrix& w, const Corpus& corpus,
                        bool include_coeff) {
  if (c.rows() != corpus.vocab_size)
    throw UsageError("perplexity: C rows must equal the corpus vocabulary size");
  if (w.rows() != c.cols() || w.cols() != corpus.num_docs)
    throw UsageError("perplexity: W must be k x d for this corpus");

  MetricReport rep;
  rep.name = "perplexity";
  rep.params["include_coeff"] = include_coeff ? 1.0 : 0.0;
  double loglik = 0.0;
  Vector u(corpus.vocab_size);
  for (std::int32_t i = 0; i < corpus.num_docs; ++i) {
    u.noalias() = c * w.col(i);
    const auto [lo, hi] = corpus.doc_range(i);
    for (std::size_t e = lo; e < hi; ++e) {
      const auto& entry = corpus.entries[e];
      if (u[entry.word] <= 0.0) {
        rep.value = std::numeric_limits<double>::infinity();
        rep.params["offending_doc"] = entry.doc;
        rep.params["offending_word"] = entry.word;
        return rep;
      }
      loglik += static_cast<double>(entry.count) * std::log(u[entry.word]);
    }
    if (include_coeff) loglik += log_multinomial_coeff(corpus, i);
  }
  rep.value = std::exp(-loglik / static_cast<double>(corpus.total_words()));
  return rep;
}

SpectrumReport singular_spectrum(const Corpus& corpus, int m) {
  const int cap = static_cast<int>(std::min<std::int64_t>(corpus.vocab_size, corpus.num_docs));
  if (m < 1 || m > cap)
    throw UsageError("singular_spectrum: m must lie in [1, min(V, d)]");
  const Matrix u = empirical_frequencies(corpus);
  Eigen::BDCSVD<Matrix> svd(u);
  SpectrumReport rep;
  rep.singular_values.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) rep.singular_values.push_back(svd.singularValues()[j]);

  double best_ratio = -1.0;
  for (int j = 0; j + 1 < m; ++j) {
    const double hi = rep.singular_values[static_cast<std::size_t>(j)];
    const double lo = rep.singular_values[static_cast<std::size_t>(j + 1)];
    double ratio;
    if (hi <= 0.0)
      ratio = 0.0;  // trailing zero block carries no information
    else if (lo <= 0.0)
      ratio = std::numeric_limits<double>::infinity();
    else
      ratio = hi / lo;
    rep.gap_ratios.push_back(ratio);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      rep.suggested_k = j + 1;  // drop after the (j+1)-th singular value
    }
  }
  return rep;
}

}  // namespace topiclab::evaluation
