#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "topiclab/corpus.hpp"
#include "topiclab/evaluation.hpp"
#include "topiclab/rng.hpp"

using namespace topiclab;
namespace ev = topiclab::evaluation;

namespace {

Matrix random_stochastic(Index v, Index k, std::uint64_t seed) {
  rng::Stream st(seed);
  Matrix m(v, k);
  const Vector ones = Vector::Ones(v);
  for (Index j = 0; j < k; ++j) m.col(j) = st.dirichlet(ones);
  return m;
}

Matrix apply_perm(const Matrix& c, const std::vector<int>& perm) {
  Matrix out(c.rows(), c.cols());
  for (Index j = 0; j < c.cols(); ++j) out.col(j) = c.col(perm[static_cast<std::size_t>(j)]);
  return out;
}

// Independent spectral-norm oracle: power iteration on A^T A.
double power_iteration_norm(const Matrix& a, std::uint64_t seed) {
  rng::Stream st(seed);
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = st.normal();
  v.normalize();
  double s = 0.0;
  for (int it = 0; it < 500; ++it) {
    v = a.transpose() * (a * v);
    s = v.norm();
    if (s == 0.0) return 0.0;
    v /= s;
  }
  return std::sqrt(s);
}

// Exhaustive Frobenius minimum for small k.
double brute_force_frobenius(const Matrix& c, const Matrix& cbar) {
  std::vector<int> perm(static_cast<std::size_t>(c.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, (cbar - apply_perm(c, perm)).norm());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Corpus hand_fixture_corpus() {
  std::ifstream in(std::string(TOPICLAB_REPO_DIR) + "/data/fixtures/hand3.docword.txt");
  REQUIRE(in.good());
  return load_uci_bag_of_words(in).corpus;
}

}  // namespace

TEST_CASE("topic distance: zero on itself and on permuted copies") {
  const Matrix c = random_stochastic(6, 3, 1);
  CHECK(ev::topic_distance(c, c).distance == doctest::Approx(0.0).epsilon(1e-12));
  Matrix swapped(6, 3);
  swapped << c.col(1), c.col(2), c.col(0);
  const auto res = ev::topic_distance(c, swapped);
  CHECK(res.distance < 1e-12);
  CHECK(res.permutation == std::vector<int>{1, 2, 0});
}

TEST_CASE("topic distance matches an independent SVD oracle on the hand case") {
  Matrix c = Matrix::Identity(2, 2);
  Matrix cbar(2, 2);
  cbar << 1.0, 0.6, 0.0, 0.4;
  const auto res = ev::topic_distance(c, cbar);
  // Oracle: best permutation by explicit enumeration with power iteration.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& perm : std::vector<std::vector<int>>{{0, 1}, {1, 0}}) {
    best = std::min(best, power_iteration_norm(cbar - apply_perm(c, perm), 9));
  }
  CHECK(res.distance == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("topic distance is a pseudometric modulo permutations (k <= 4)") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Matrix a = random_stochastic(5, 4, 100 + seed);
    const Matrix b = random_stochastic(5, 4, 200 + seed);
    const Matrix c = random_stochastic(5, 4, 300 + seed);
    const double ab = ev::topic_distance(a, b).distance;
    const double ba = ev::topic_distance(b, a).distance;
    const double ac = ev::topic_distance(a, c).distance;
    const double cb = ev::topic_distance(c, b).distance;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("frobenius assignment equals brute force and bounds the spectral variant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index k = 2 + static_cast<Index>(seed % 5);  // up to 6
    const Matrix a = random_stochastic(7, k, 400 + seed);
    const Matrix b = random_stochastic(7, k, 500 + seed);
    const auto frob = ev::frobenius_assignment_distance(a, b);
    CHECK(frob.distance == doctest::Approx(brute_force_frobenius(a, b)).epsilon(1e-10));
    // With the same permutation, spectral <= Frobenius.
    const double spectral = power_iteration_norm(b - apply_perm(a, frob.permutation), 600 + seed);
    CHECK(spectral <= frob.distance + 1e-9);
  }
  const Matrix a = random_stochastic(7, 4, 11);
  Matrix permuted(7, 4);
  permuted << a.col(3), a.col(0), a.col(2), a.col(1);
  CHECK(ev::frobenius_assignment_distance(a, permuted).distance < 1e-12);
}

TEST_CASE("relative rmse: zero at the truth and near one for random guesses") {
  const Matrix c0 = random_stochastic(40, 3, 21);
  CHECK(ev::relative_rmse(c0, c0, 50, 22) == doctest::Approx(0.0).epsilon(1e-12));
  double mean = 0.0;
  const int trials = 20;
  for (int i = 0; i < trials; ++i) {
    const Matrix guess = random_stochastic(40, 3, 700 + static_cast<std::uint64_t>(i));
    mean += ev::relative_rmse(guess, c0, 100, 23);
  }
  mean /= trials;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(ev::relative_rmse(c0, c0, 0, 1), UsageError);
}

TEST_CASE("coherence on the committed hand fixture") {
  const Corpus corpus = hand_fixture_corpus();
  Matrix c(3, 2);
  c << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;
  const auto rep = ev::topic_coherence(c, corpus, 2, 1e-12);
  // Hand oracle: every top pair co-occurs in exactly one document and each
  // word occurs in two documents, so the total is 4 * log((1 + 1e-12)/2).
  CHECK(rep.value == doctest::Approx(-2.772588722235781).epsilon(1e-10));
  REQUIRE(rep.details.size() == 2);
  CHECK(rep.details[0] == doctest::Approx(rep.details[1]).epsilon(1e-12));  // symmetric topics
  CHECK(rep.params.at("skipped_pairs") == 0.0);
}

TEST_CASE("coherence: identical top lists give identical per-topic scores") {
  const Corpus corpus = hand_fixture_corpus();
  Matrix c(3, 2);
  c << 0.5, 0.5, 0.3, 0.3, 0.2, 0.2;
  const auto rep = ev::topic_coherence(c, corpus, 2, 1e-12);
  REQUIRE(rep.details.size() == 2);
  CHECK(rep.details[0] == doctest::Approx(rep.details[1]).epsilon(1e-14));
}

TEST_CASE("coherence: fully co-occurring top words score about zero") {
  // Both words appear in every document.
  std::vector<Corpus::Entry> entries{{0, 0, 1}, {0, 1, 1}, {1, 0, 2}, {1, 1, 1}};
  const Corpus corpus = make_corpus(2, 2, entries);
  Matrix c(2, 1);
  c << 0.6, 0.4;
  const auto rep = ev::topic_coherence(c, corpus, 2, 1e-12);
  CHECK(std::abs(rep.value) < 1e-10);
}

TEST_CASE("coherence clips oversized top_words with a param note") {
  const Corpus corpus = hand_fixture_corpus();
  Matrix c(3, 2);
  c << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;
  const auto rep = ev::topic_coherence(c, corpus, 50, 1e-12);
  CHECK(rep.params.at("top_words") == 3.0);
}

TEST_CASE("similarity count: disjoint, identical and fixture overlaps") {
  Matrix disjoint(4, 2);
  disjoint << 0.7, 0.0, 0.3, 0.0, 0.0, 0.6, 0.0, 0.4;
  CHECK(ev::similarity_count(disjoint, 2).value == 0.0);

  Matrix identical(4, 3);
  identical << 0.4, 0.4, 0.4, 0.3, 0.3, 0.3, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1;
  // k = 3 pairs: C(3,2) * top_words = 3 * 2 = 6.
  CHECK(ev::similarity_count(identical, 2).value == 6.0);

  Matrix c(3, 2);
  c << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;  // tops {0,1} and {2,1}: overlap 1
  CHECK(ev::similarity_count(c, 2).value == 1.0);
}

TEST_CASE("perplexity: uniform model, point mass, and the hand fixture") {
  const Corpus corpus = hand_fixture_corpus();
  SUBCASE("uniform topic matrix gives perplexity V") {
    Matrix c = Matrix::Constant(3, 2, 1.0 / 3.0);
    Matrix w(2, 3);
    w << 0.5, 0.1, 0.9, 0.5, 0.9, 0.1;
    CHECK(ev::perplexity(c, w, corpus).value == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("point mass on a single-word document gives 1") {
    std::vector<Corpus::Entry> entries{{0, 1, 4}};
    const Corpus single = make_corpus(1, 3, entries);
    Matrix c(3, 1);
    c << 0.0, 1.0, 0.0;
    Matrix w = Matrix::Ones(1, 1);
    CHECK(ev::perplexity(c, w, single).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hand fixture matches the frozen log-domain computation") {
    Matrix c(3, 2);
    c << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;
    Matrix w(2, 3);
    w << 0.8, 0.3, 0.5, 0.2, 0.7, 0.5;
    const auto rep = ev::perplexity(c, w, corpus);
    CHECK(rep.value == doctest::Approx(2.806943326432215).epsilon(1e-10));
  }
  SUBCASE("zero predicted probability reports the offending pair") {
    Matrix c(3, 2);
    c << 0.5, 0.5, 0.5, 0.5, 0.0, 0.0;  // word 2 impossible
    Matrix w(2, 3);
    w << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
    const auto rep = ev::perplexity(c, w, corpus);
    CHECK(std::isinf(rep.value));
    CHECK(rep.params.count("offending_doc") == 1);
    CHECK(rep.params.count("offending_word") == 1);
  }
}

TEST_CASE("perplexity never improves over per-document likelihood maximizers") {
  const Corpus corpus = hand_fixture_corpus();
  Matrix c(3, 2);
  c << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;
  Matrix w(2, 3);
  w << 0.8, 0.3, 0.5, 0.2, 0.7, 0.5;
  // Local search: per document, scan w = (t, 1-t) on a fine grid.
  Matrix w_best = w;
  for (std::int32_t i = 0; i < corpus.num_docs; ++i) {
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 1000; ++g) {
      const double t = g / 1000.0;
      const Vector u = c.col(0) * t + c.col(1) * (1.0 - t);
      double ll = 0.0;
      const auto [lo, hi] = corpus.doc_range(i);
      for (std::size_t e = lo; e < hi; ++e)
        ll += corpus.entries[e].count * std::log(u[corpus.entries[e].word]);
      if (ll > best_ll) {
        best_ll = ll;
        w_best(0, i) = t;
        w_best(1, i) = 1.0 - t;
      }
    }
  }
  CHECK(ev::perplexity(c, w_best, corpus).value <= ev::perplexity(c, w, corpus).value + 1e-12);
}

TEST_CASE("singular spectrum: exact rank, duplication invariance, clipping") {
  // Noiseless rank-2 corpus: counts proportional to C0 W0 with integer scaling.
  SyntheticSpec spec;
  spec.vocab_size = 6;
  spec.num_docs = 8;
  spec.num_topics = 2;
  spec.explicit_topics = true;
  spec.topic_matrix = random_stochastic(6, 2, 31);
  spec.weights.kind = WeightDesign::Kind::DirichletIID;
  spec.weights.dirichlet_conc = Vector::Ones(2);
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 100000;  // integer rounding noise ~1e-5
  spec.noiseless = true;
  spec.seed = 32;
  auto [corpus, truth] = generate_synthetic(spec);
  const auto rep = ev::singular_spectrum(corpus, 5);
  REQUIRE(rep.singular_values.size() == 5);
  CHECK(rep.singular_values[2] < 1e-4 * rep.singular_values[0]);
  REQUIRE(rep.suggested_k.has_value());
  CHECK(*rep.suggested_k == 2);

  // Duplicating all documents leaves the suggestion unchanged.
  std::vector<Corpus::Entry> doubled = corpus.entries;
  for (const auto& e : corpus.entries)
    doubled.push_back({static_cast<std::int32_t>(e.doc + corpus.num_docs), e.word, e.count});
  const Corpus corpus2 = make_corpus(2 * corpus.num_docs, corpus.vocab_size, doubled);
  const auto rep2 = ev::singular_spectrum(corpus2, 5);
  CHECK(rep2.suggested_k == rep.suggested_k);

  CHECK_THROWS_AS(ev::singular_spectrum(corpus, 100), UsageError);
}

TEST_CASE("exact rank separation on truly noiseless frequencies") {
  // With d = k the empirical frequencies have exact rank k.
  SyntheticSpec spec;
  spec.vocab_size = 10;
  spec.num_docs = 6;
  spec.num_topics = 3;
  spec.topic_prior = Vector::Ones(10);
  spec.weights.kind = WeightDesign::Kind::CornerPattern;
  spec.weights.corner_x = 0.1;
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 1000000;
  spec.noiseless = true;
  spec.seed = 33;
  auto [corpus, truth] = generate_synthetic(spec);
  const auto rep = ev::singular_spectrum(corpus, 6);
  CHECK(rep.singular_values[3] < 1e-4 * rep.singular_values[0]);
}
