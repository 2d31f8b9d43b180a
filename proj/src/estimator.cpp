#include "topiclab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topiclab/parallel.hpp"
#include "topiclab/rng.hpp"

namespace topiclab {

namespace {

constexpr std::uint64_t kTagInitC = 0x696e6974ULL;
constexpr std::uint64_t kTagEStep = 0x6573746570ULL;
constexpr std::uint64_t kTagIntLik = 0x696e746c696bULL;

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Strict column order, lexicographic by entries with index tie-break. Used to
// fix the traversal of topic-indexed draws from a relabeling-invariant key,
// which makes the whole fit equivariant under permutations of the
// initialization columns.
std::vector<int> lexicographic_column_order(const Matrix& c) {
  std::vector<int> order(static_cast<std::size_t>(c.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (Index v = 0; v < c.rows(); ++v) {
      if (c(v, a) != c(v, b)) return c(v, a) > c(v, b);
    }
    return a < b;
  });
  return order;
}

double logsumexp_minus_logT(const std::vector<double>& vals) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : vals) m = std::max(m, v);
  if (!std::isfinite(m)) return m;  // every sample underflowed to -inf
  double s = 0.0;
  for (double v : vals) s += std::exp(v - m);
  return m + std::log(s) - std::log(static_cast<double>(vals.size()));
}

struct EStepScratch {
  Vector w;                          // current mixing weights of the document
  Vector probs;                      // unnormalized topic probabilities of one word
  Vector shapes;                     // Dirichlet shapes for the W redraw
  std::vector<std::int64_t> split;   // multinomial output
  std::vector<int> order;            // redraw traversal
  std::vector<double> loglik_samples;
};

}  // namespace

double log_multinomial_coeff(const Corpus& corpus, std::int32_t doc) {
  const auto [lo, hi] = corpus.doc_range(doc);
  double s = std::lgamma(static_cast<double>(corpus.doc_lengths[static_cast<std::size_t>(doc)]) + 1.0);
  for (std::size_t e = lo; e < hi; ++e)
    s -= std::lgamma(static_cast<double>(corpus.entries[e].count) + 1.0);
  return s;
}

Matrix seeded_initial_topics(std::int32_t vocab_size, std::int32_t k, std::uint64_t seed,
                             int restart) {
  Matrix c(vocab_size, k);
  const Vector ones = Vector::Ones(vocab_size);
  for (std::int32_t l = 0; l < k; ++l) {
    rng::Stream st(rng::substream_key(
        seed, {kTagInitC, static_cast<std::uint64_t>(restart), static_cast<std::uint64_t>(l)}));
    c.col(l) = st.dirichlet(ones);
  }
  return c;
}

namespace {

struct RestartResult {
  Matrix topics;
  Matrix weights;
  std::vector<double> trace;
  bool converged = false;
  std::int64_t smoothing_events = 0;
};

RestartResult run_one_restart(const Corpus& corpus, const FitConfig& cfg, int restart) {
  const std::int32_t V = corpus.vocab_size, d = corpus.num_docs;
  const std::int32_t k = cfg.k;
  const int total_sweeps = cfg.burn_in + cfg.mcmc_samples;

  Matrix c = cfg.initial_topics ? *cfg.initial_topics
                                : seeded_initial_topics(V, k, cfg.seed, restart);

  const int threads = std::max(1, cfg.threads);
  std::vector<CountMatrix> local_word_topic(static_cast<std::size_t>(threads));
  CountMatrix doc_topic(k, d);
  std::vector<double> doc_loglik(static_cast<std::size_t>(d));
  std::vector<double> doc_coeff(static_cast<std::size_t>(d), 0.0);
  if (cfg.loglik_include_coeff)
    for (std::int32_t i = 0; i < d; ++i) doc_coeff[static_cast<std::size_t>(i)] = log_multinomial_coeff(corpus, i);

  std::vector<EStepScratch> scratch(static_cast<std::size_t>(threads));
  for (auto& s : scratch) {
    s.w.resize(k);
    s.probs.resize(k);
    s.shapes.resize(k);
    s.split.assign(static_cast<std::size_t>(k), 0);
    s.order.assign(static_cast<std::size_t>(k), 0);
    s.loglik_samples.assign(static_cast<std::size_t>(cfg.mcmc_samples), 0.0);
  }
  Matrix warm_weights;  // k x d, persisted across EM iterations when warm starting
  if (cfg.warm_start_weights) warm_weights.resize(k, d);

  RestartResult out;
  RowMajorMatrix c_rows(V, k);

  for (int em_iter = 0; em_iter < cfg.em_max_iters; ++em_iter) {
    c_rows = c;
    const std::vector<int> init_order = lexicographic_column_order(c);
    for (auto& lw : local_word_topic) lw = CountMatrix::Zero(V, k);
    doc_topic.setZero();

    parallel_for(d, threads, [&](int worker, int i) {
      EStepScratch& sc = scratch[static_cast<std::size_t>(worker)];
      rng::Stream st(rng::substream_key(cfg.seed, {kTagEStep, static_cast<std::uint64_t>(restart),
                                                   static_cast<std::uint64_t>(em_iter),
                                                   static_cast<std::uint64_t>(i)}));
      if (cfg.warm_start_weights && em_iter > 0) {
        sc.w = warm_weights.col(i);
      } else {
        st.dirichlet_ordered(cfg.beta0, init_order, sc.w);
      }
      const auto [lo, hi] = corpus.doc_range(i);
      auto& word_topic = local_word_topic[static_cast<std::size_t>(worker)];

      for (int t = 0; t < total_sweeps; ++t) {
        const bool keep = t >= cfg.burn_in;
        double ll = 0.0;
        sc.shapes = cfg.beta0;
        for (std::size_t e = lo; e < hi; ++e) {
          const auto v = corpus.entries[e].word;
          const auto x = corpus.entries[e].count;
          double mass = 0.0;
          for (std::int32_t l = 0; l < k; ++l) {
            sc.probs[l] = c_rows(v, l) * sc.w[l];
            mass += sc.probs[l];
          }
          st.multinomial(x, sc.probs, sc.split);
          for (std::int32_t l = 0; l < k; ++l) sc.shapes[l] += static_cast<double>(sc.split[l]);
          if (keep) {
            for (std::int32_t l = 0; l < k; ++l) {
              word_topic(v, l) += sc.split[l];
              doc_topic(l, i) += sc.split[l];
            }
            ll += static_cast<double>(x) * std::log(mass);
          }
        }
        // Redraw w ~ Dir(beta0 + topic totals), traversing topics by the
        // current weights so the draw commutes with topic relabeling.
        std::iota(sc.order.begin(), sc.order.end(), 0);
        std::sort(sc.order.begin(), sc.order.end(), [&](int a, int b) {
          if (sc.w[a] != sc.w[b]) return sc.w[a] > sc.w[b];
          return a < b;
        });
        st.dirichlet_ordered(sc.shapes, sc.order, sc.w);
        if (keep) sc.loglik_samples[static_cast<std::size_t>(t - cfg.burn_in)] = ll;
      }
      doc_loglik[static_cast<std::size_t>(i)] =
          logsumexp_minus_logT(sc.loglik_samples) + doc_coeff[static_cast<std::size_t>(i)];
      if (cfg.warm_start_weights) warm_weights.col(i) = sc.w;
    });

    // Deterministic reductions: integer count merge, then an index-ordered sum.
    CountMatrix word_topic = CountMatrix::Zero(V, k);
    for (const auto& lw : local_word_topic) word_topic += lw;
    double loglik = 0.0;
    for (std::int32_t i = 0; i < d; ++i) loglik += doc_loglik[static_cast<std::size_t>(i)];
    out.trace.push_back(loglik);

    // M-step: column-normalize the pooled topic-word counts.
    for (std::int32_t l = 0; l < k; ++l) {
      const std::int64_t colsum = word_topic.col(l).sum();
      if (colsum == 0) {
        c.col(l).setConstant(1.0 / static_cast<double>(V));
        ++out.smoothing_events;
      } else {
        c.col(l) = word_topic.col(l).cast<double>() / static_cast<double>(colsum);
      }
    }

    if (em_iter > 0) {
      const double prev = out.trace[static_cast<std::size_t>(em_iter - 1)];
      const double rel = std::abs(loglik - prev) / std::max(std::abs(prev), 1e-300);
      if (rel < cfg.rel_tol) {
        out.converged = true;
        break;
      }
    }
  }

  out.topics = std::move(c);
  out.weights.resize(k, d);
  for (std::int32_t i = 0; i < d; ++i) {
    const std::int64_t total = doc_topic.col(i).sum();
    if (total == 0)
      out.weights.col(i).setConstant(1.0 / static_cast<double>(k));
    else
      out.weights.col(i) = doc_topic.col(i).cast<double>() / static_cast<double>(total);
  }
  return out;
}

}  // namespace

FitReport mcmc_em_fit(const Corpus& corpus, const FitConfig& config) {
  FitConfig cfg = config;
  if (corpus.num_docs < 1) throw UsageError("mcmc_em_fit: corpus has no documents");
  if (cfg.k < 1) throw UsageError("mcmc_em_fit: k must be positive");
  if (cfg.k > corpus.vocab_size)
    throw UsageError("mcmc_em_fit: k must not exceed the vocabulary size");
  if (cfg.mcmc_samples < 1) throw UsageError("mcmc_em_fit: need T >= 1 MCMC samples");
  if (cfg.burn_in < 0) throw UsageError("mcmc_em_fit: burn-in must be >= 0");
  if (cfg.em_max_iters < 1) throw UsageError("mcmc_em_fit: need at least one EM iteration");
  if (cfg.restarts < 1) throw UsageError("mcmc_em_fit: need at least one restart");
  if (cfg.beta0.size() == 0) cfg.beta0 = Vector::Ones(cfg.k);
  if (cfg.beta0.size() != cfg.k || (cfg.beta0.array() <= 0.0).any())
    throw UsageError("mcmc_em_fit: beta0 must be a positive length-k vector");
  if (cfg.initial_topics) {
    if (cfg.initial_topics->rows() != corpus.vocab_size || cfg.initial_topics->cols() != cfg.k)
      throw UsageError("mcmc_em_fit: initial topics must be V x k");
    require_column_stochastic(*cfg.initial_topics, "mcmc_em_fit: initial topics");
  }

  int best = -1;
  RestartResult best_result;
  for (int r = 0; r < cfg.restarts; ++r) {
    RestartResult res = run_one_restart(corpus, cfg, r);
    // Highest final monitored log-likelihood wins; ties keep the lowest index.
    if (best < 0 || res.trace.back() > best_result.trace.back()) {
      best = r;
      best_result = std::move(res);
    }
  }

  FitReport report;
  report.topic_matrix.m = std::move(best_result.topics);
  report.mixing_matrix.m = std::move(best_result.weights);
  report.loglik_trace = std::move(best_result.trace);
  report.converged = best_result.converged;
  report.iters_used = static_cast<int>(report.loglik_trace.size());
  report.restart_index_selected = best;
  report.seed = cfg.seed;
  report.smoothing_events = best_result.smoothing_events;
  return report;
}

Matrix draw_uniform_weight_samples(std::int32_t k, int T, std::uint64_t seed) {
  if (k < 1 || T < 1) throw UsageError("weight samples: k and T must be positive");
  Matrix w(k, T);
  const Vector ones = Vector::Ones(k);
  for (int t = 0; t < T; ++t) {
    rng::Stream st(rng::substream_key(seed, {kTagIntLik, static_cast<std::uint64_t>(t)}));
    w.col(t) = st.dirichlet(ones);
  }
  return w;
}

double integrated_loglik_mc_with_samples(const TopicMatrix& C, const Corpus& corpus,
                                         const Matrix& w_samples, bool include_coeff,
                                         IntLikDiagnostics* diag) {
  const std::int32_t V = corpus.vocab_size, d = corpus.num_docs;
  if (C.m.rows() != V) throw UsageError("integrated likelihood: C rows must equal vocab size");
  if (C.m.cols() != w_samples.rows())
    throw UsageError("integrated likelihood: C columns must match weight sample dimension");
  const int T = static_cast<int>(w_samples.cols());
  if (T < 1) throw UsageError("integrated likelihood: need T >= 1 samples");

  // Streaming log-sum-exp per document over the T samples.
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> run_max(static_cast<std::size_t>(d), neg_inf);
  std::vector<double> run_sum(static_cast<std::size_t>(d), 0.0);
  Vector u(V), logu(V);
  for (int t = 0; t < T; ++t) {
    u.noalias() = C.m * w_samples.col(t);
    for (std::int32_t v = 0; v < V; ++v) logu[v] = u[v] > 0.0 ? std::log(u[v]) : neg_inf;
    for (std::int32_t i = 0; i < d; ++i) {
      const auto [lo, hi] = corpus.doc_range(i);
      double ll = 0.0;
      for (std::size_t e = lo; e < hi; ++e)
        ll += static_cast<double>(corpus.entries[e].count) * logu[corpus.entries[e].word];
      if (ll == neg_inf) continue;  // zero-mass sample adds nothing
      auto& m = run_max[static_cast<std::size_t>(i)];
      auto& s = run_sum[static_cast<std::size_t>(i)];
      if (ll > m) {
        s = s * std::exp(m - ll) + 1.0;
        m = ll;
      } else {
        s += std::exp(ll - m);
      }
    }
  }

  double total = 0.0;
  for (std::int32_t i = 0; i < d; ++i) {
    double li;
    if (run_sum[static_cast<std::size_t>(i)] == 0.0) {
      li = neg_inf;  // every sample gave this document zero probability
      if (diag) diag->minus_inf_docs.push_back(i);
    } else {
      li = run_max[static_cast<std::size_t>(i)] + std::log(run_sum[static_cast<std::size_t>(i)]) -
           std::log(static_cast<double>(T));
    }
    if (include_coeff) li += log_multinomial_coeff(corpus, i);
    total += li;
  }
  return total;
}

double integrated_loglik_mc(const TopicMatrix& C, const Corpus& corpus, int T, std::uint64_t seed,
                            bool include_coeff, IntLikDiagnostics* diag) {
  if (T < 1) throw UsageError("integrated likelihood: need T >= 1 samples");
  const Matrix w = draw_uniform_weight_samples(static_cast<std::int32_t>(C.m.cols()), T, seed);
  return integrated_loglik_mc_with_samples(C, corpus, w, include_coeff, diag);
}

}  // namespace topiclab
