#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "topiclab/corpus.hpp"
#include "topiclab/types.hpp"

namespace topiclab {

struct FitConfig {
  std::int32_t k = 0;
  int em_max_iters = 200;
  double rel_tol = 1e-9;
  int mcmc_samples = 100;   // T, per-document Gibbs samples kept per EM iteration
  int burn_in = 0;          // b
  Vector beta0;             // Dirichlet weight prior; defaults to all-ones
  int restarts = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  // Re-initialize W from Dir(beta0) at the start of every E-step (the listed
  // algorithm); warm start carries the last E-step's weights instead.
  bool warm_start_weights = false;
  bool loglik_include_coeff = true;
  // Explicit initialization of the topic matrix (column-stochastic V x k);
  // when absent, columns are drawn from Dir_V(1) per restart.
  std::optional<Matrix> initial_topics;
};

struct FitReport {
  TopicMatrix topic_matrix;    // C_hat
  MixingMatrix mixing_matrix;  // W_hat
  std::vector<double> loglik_trace;  // Monte-Carlo log integrated likelihood per EM iteration
  bool converged = false;
  int iters_used = 0;
  int restart_index_selected = 0;
  std::uint64_t seed = 0;
  std::int64_t smoothing_events = 0;  // zero-denominator topics re-smoothed in M-steps
};

// Maximum integrated-likelihood estimation by MCMC-EM. Deterministic given
// (corpus, config): all randomness flows through substreams keyed by
// (seed, restart, EM iteration, document), so results are bit-identical for
// any thread count.
FitReport mcmc_em_fit(const Corpus& corpus, const FitConfig& config);

// Seed-induced initial topic matrix of a given restart (what mcmc_em_fit uses
// when config.initial_topics is absent).
Matrix seeded_initial_topics(std::int32_t vocab_size, std::int32_t k, std::uint64_t seed,
                             int restart);

struct IntLikDiagnostics {
  std::vector<std::int32_t> minus_inf_docs;  // documents whose MC estimate is -inf
};

// Monte-Carlo estimate of the log integrated likelihood:
//   sum_i log[(1/T) sum_t f_n(x^(i) | C w_t)],  w_t iid Dir_k(1).
// Evaluated in the log domain with a streaming log-sum-exp.
double integrated_loglik_mc(const TopicMatrix& C, const Corpus& corpus, int T,
                            std::uint64_t seed, bool include_coeff = true,
                            IntLikDiagnostics* diag = nullptr);

// Same estimator over caller-provided weight samples (columns of w_samples),
// so a sweep over candidate topic matrices can share common random numbers.
double integrated_loglik_mc_with_samples(const TopicMatrix& C, const Corpus& corpus,
                                         const Matrix& w_samples, bool include_coeff = true,
                                         IntLikDiagnostics* diag = nullptr);

// T iid Dirichlet(1_k) columns, from substreams (seed, t).
Matrix draw_uniform_weight_samples(std::int32_t k, int T, std::uint64_t seed);

// log of the multinomial coefficient n! / prod_v x_v! of document i.
double log_multinomial_coeff(const Corpus& corpus, std::int32_t doc);

}  // namespace topiclab
