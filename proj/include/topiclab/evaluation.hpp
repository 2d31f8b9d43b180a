#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topiclab/corpus.hpp"
#include "topiclab/types.hpp"

namespace topiclab::evaluation {

struct PermutationDistance {
  double distance = 0.0;
  // permutation[j] = source column of C matched to column j of Cbar,
  // i.e. the minimizing Pi has (C Pi).col(j) = C.col(permutation[j]).
  std::vector<int> permutation;
};

// dis(C, Cbar) = min over column permutations of the spectral norm of the
// difference, by exact enumeration (k <= 10, with Frobenius-based pruning).
PermutationDistance topic_distance(const Matrix& c, const Matrix& cbar);

// min over permutations of the Frobenius norm; exact via optimal assignment
// on the column-distance-squared cost matrix.
PermutationDistance frobenius_assignment_distance(const Matrix& c, const Matrix& cbar);

// Frobenius-assignment RMSE of c_hat against c0, divided by the mean RMSE of
// `reference_draws` random-guess matrices with columns ~ Dir_V(1).
double relative_rmse(const Matrix& c_hat, const Matrix& c0, int reference_draws,
                     std::uint64_t seed);

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::map<std::string, double> params;
  std::vector<double> details;  // optional per-topic breakdown
};

// UMass-style coherence: sum over topics l and ordered word pairs
// v1 != v2 from the top-`top_words` list of topic l of
// log((docfreq(v1,v2) + epsilon) / docfreq(v2)). Pairs whose second word
// never occurs are skipped and counted in params["skipped_pairs"].
MetricReport topic_coherence(const Matrix& c, const Corpus& corpus, int top_words = 20,
                             double epsilon = 1e-12);

// Sum of pairwise overlaps of the top-word lists.
MetricReport similarity_count(const Matrix& c, int top_words = 20);

// exp(-loglik / total words) on the training corpus, with the per-document
// weights taken as given; multinomial coefficients excluded by default.
MetricReport perplexity(const Matrix& c, const Matrix& w, const Corpus& corpus,
                        bool include_coeff = false);

struct SpectrumReport {
  std::vector<double> singular_values;  // top m, descending
  std::vector<double> gap_ratios;       // sigma_j / sigma_{j+1}, j = 1..m-1
  std::optional<int> suggested_k;       // argmax gap ratio (advisory)
};

// Singular values of the empirical frequency matrix of the corpus.
SpectrumReport singular_spectrum(const Corpus& corpus, int m);

}  // namespace topiclab::evaluation
