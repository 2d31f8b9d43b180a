#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "topiclab/types.hpp"

namespace topiclab {

// Sparse document-term counts. Entries are kept sorted by (doc, word) and a
// CSR-style offset table indexes the rows of each document.
struct Corpus {
  struct Entry {
    std::int32_t doc;
    std::int32_t word;
    std::int64_t count;
  };

  std::int32_t num_docs = 0;
  std::int32_t vocab_size = 0;
  std::vector<Entry> entries;
  std::vector<std::size_t> doc_offsets;    // num_docs + 1
  std::vector<std::int64_t> doc_lengths;   // n_i, derived
  std::optional<std::vector<std::string>> vocab;

  std::int64_t total_words() const;
  std::pair<std::size_t, std::size_t> doc_range(std::int32_t i) const {
    return {doc_offsets[i], doc_offsets[i + 1]};
  }
};

// Validates ids, duplicate pairs, counts >= 1 and n_i >= 1; builds offsets
// and doc lengths. Entries may arrive unsorted.
Corpus make_corpus(std::int32_t num_docs, std::int32_t vocab_size,
                   std::vector<Corpus::Entry> entries,
                   std::optional<std::vector<std::string>> vocab = std::nullopt);

struct UciLoadResult {
  Corpus corpus;
  std::int32_t dropped_docs = 0;  // declared docs with zero total count
};

// UCI bag-of-words text format: three header lines (D, W, NNZ) followed by
// NNZ lines "docID wordID count" with 1-based ids.
UciLoadResult load_uci_bag_of_words(std::istream& docword, std::istream* vocab_stream = nullptr);
UciLoadResult load_uci_bag_of_words_file(const std::string& docword_path,
                                         const std::string& vocab_path = "");
void write_uci_bag_of_words(const Corpus& corpus, std::ostream& out);
void write_uci_bag_of_words_file(const Corpus& corpus, const std::string& docword_path,
                                 const std::string& vocab_path = "");

// Column i = counts of document i divided by n_i.
Matrix empirical_frequencies(const Corpus& corpus);

struct WeightDesign {
  enum class Kind { DirichletIID, Balls, MixtureDirichlet, Explicit, CornerPattern };
  Kind kind = Kind::DirichletIID;
  Vector dirichlet_conc;                            // DirichletIID: length k
  Matrix ball_centers;                              // Balls: k x B columns in the simplex
  Vector ball_radii;                                // Balls: length B
  Vector ball_weights;                              // Balls: length B, positive
  std::vector<std::pair<double, Vector>> mixture;   // MixtureDirichlet
  Matrix explicit_weights;                          // Explicit: k x d column-stochastic
  double corner_x = 0.0;                            // CornerPattern: x in [0, 1/k)
};

struct SyntheticSpec {
  std::int32_t vocab_size = 0;   // V
  std::int32_t num_docs = 0;     // d
  std::int32_t num_topics = 0;   // k

  bool explicit_topics = false;
  Vector topic_prior;            // length V when !explicit_topics
  Matrix topic_matrix;           // V x k when explicit_topics

  WeightDesign weights;

  enum class LengthLaw { Fixed, Poisson };
  LengthLaw length_law = LengthLaw::Fixed;
  double length_param = 0.0;

  bool noiseless = false;        // counts = largest-remainder rounding of n * C w
  std::uint64_t seed = 0;
};

struct GroundTruth {
  TopicMatrix topic_matrix;
  MixingMatrix mixing_matrix;
  bool rank_warning = false;     // topic matrix not of full column rank
};

// Deterministic given spec.seed; documents draw from per-document substreams.
std::pair<Corpus, GroundTruth> generate_synthetic(const SyntheticSpec& spec);

// Key-value spec file (schema documented in the README).
SyntheticSpec parse_synthetic_spec(std::istream& in);
SyntheticSpec parse_synthetic_spec_file(const std::string& path);

}  // namespace topiclab
