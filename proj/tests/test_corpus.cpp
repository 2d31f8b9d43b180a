#include <doctest.h>

#include <cmath>
#include <sstream>

#include "topiclab/corpus.hpp"
#include "topiclab/rng.hpp"
#include "topiclab/scatter.hpp"

using namespace topiclab;

namespace {

SyntheticSpec basic_spec() {
  SyntheticSpec spec;
  spec.vocab_size = 8;
  spec.num_docs = 5;
  spec.num_topics = 3;
  spec.topic_prior = Vector::Ones(8);
  spec.weights.kind = WeightDesign::Kind::DirichletIID;
  spec.weights.dirichlet_conc = Vector::Ones(3);
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 50;
  spec.seed = 123;
  return spec;
}

std::string serialize(const Corpus& c) {
  std::ostringstream ss;
  write_uci_bag_of_words(c, ss);
  return ss.str();
}

}  // namespace

TEST_CASE("uci load: direct transcription") {
  std::istringstream in("2\n3\n3\n1 1 2\n1 3 1\n2 2 4\n");
  const auto res = load_uci_bag_of_words(in);
  CHECK(res.dropped_docs == 0);
  CHECK(res.corpus.num_docs == 2);
  CHECK(res.corpus.vocab_size == 3);
  REQUIRE(res.corpus.doc_lengths.size() == 2);
  CHECK(res.corpus.doc_lengths[0] == 3);
  CHECK(res.corpus.doc_lengths[1] == 4);
}

TEST_CASE("uci load: declared NNZ larger than the triplets present") {
  std::istringstream in("2\n3\n5\n1 1 2\n1 3 1\n2 2 4\n1 2 1\n");
  CHECK_THROWS_AS(load_uci_bag_of_words(in), IoError);
}

TEST_CASE("uci load: duplicate triplet names the pair") {
  std::istringstream in("2\n3\n2\n1 1 2\n1 1 3\n");
  try {
    load_uci_bag_of_words(in);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("duplicate") != std::string::npos);
    CHECK(msg.find("docID 1") != std::string::npos);
    CHECK(msg.find("wordID 1") != std::string::npos);
  }
}

TEST_CASE("uci load: ids outside the declared range") {
  std::istringstream in("2\n3\n1\n3 1 2\n");
  CHECK_THROWS_AS(load_uci_bag_of_words(in), IoError);
  std::istringstream in2("2\n3\n1\n1 4 2\n");
  CHECK_THROWS_AS(load_uci_bag_of_words(in2), IoError);
  std::istringstream in3("2\nx\n1\n1 1 2\n");
  CHECK_THROWS_AS(load_uci_bag_of_words(in3), IoError);
}

TEST_CASE("uci load: zero-count documents are dropped and reported") {
  // Declared 4 docs, doc 2 and 4 have no triplets.
  std::istringstream in("4\n2\n3\n1 1 2\n3 2 1\n3 1 1\n");
  const auto res = load_uci_bag_of_words(in);
  CHECK(res.dropped_docs == 2);
  CHECK(res.corpus.num_docs == 2);
  CHECK(res.corpus.doc_lengths[0] == 2);
  CHECK(res.corpus.doc_lengths[1] == 2);
}

TEST_CASE("uci round trip is the identity on valid corpora") {
  auto [corpus, truth] = generate_synthetic(basic_spec());
  const std::string text = serialize(corpus);
  std::istringstream in(text);
  const auto reloaded = load_uci_bag_of_words(in);
  CHECK(serialize(reloaded.corpus) == text);
  CHECK(reloaded.dropped_docs == 0);
}

TEST_CASE("generated ground truth is column stochastic within 1e-12") {
  auto [corpus, truth] = generate_synthetic(basic_spec());
  CHECK((truth.topic_matrix.m.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((truth.mixing_matrix.m.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(truth.topic_matrix.m.minCoeff() >= 0.0);
  CHECK(truth.mixing_matrix.m.minCoeff() >= 0.0);
  CHECK_FALSE(truth.rank_warning);
}

TEST_CASE("same seed twice gives bitwise-identical corpora") {
  const auto a = generate_synthetic(basic_spec());
  const auto b = generate_synthetic(basic_spec());
  CHECK(serialize(a.first) == serialize(b.first));
  CHECK((a.second.topic_matrix.m - b.second.topic_matrix.m).cwiseAbs().maxCoeff() == 0.0);
  auto spec2 = basic_spec();
  spec2.seed = 124;
  const auto c = generate_synthetic(spec2);
  CHECK(serialize(a.first) != serialize(c.first));
}

TEST_CASE("noiseless generation uses largest-remainder allocation") {
  SyntheticSpec spec;
  spec.vocab_size = 3;
  spec.num_docs = 2;
  spec.num_topics = 2;
  spec.explicit_topics = true;
  spec.topic_matrix.resize(3, 2);
  spec.topic_matrix << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;
  spec.weights.kind = WeightDesign::Kind::Explicit;
  spec.weights.explicit_weights.resize(2, 2);
  spec.weights.explicit_weights << 0.8, 0.3, 0.2, 0.7;
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 10;
  spec.noiseless = true;
  auto [corpus, truth] = generate_synthetic(spec);
  // u0 = (0.42, 0.28, 0.30): 10*u = (4.2, 2.8, 3.0) -> floors (4,2,3),
  // one leftover goes to the largest remainder 0.8 -> (4,3,3).
  Matrix u = empirical_frequencies(corpus);
  CHECK(corpus.doc_lengths[0] == 10);
  CHECK(u(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(u(1, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(u(2, 0) == doctest::Approx(0.3).epsilon(1e-12));
  // Every document keeps its exact length.
  for (auto n : corpus.doc_lengths) CHECK(n == 10);
}

TEST_CASE("empirical frequencies basics") {
  std::vector<Corpus::Entry> entries{{0, 0, 2}, {0, 2, 1}, {1, 1, 1}};
  const Corpus corpus = make_corpus(2, 3, entries);
  const Matrix u = empirical_frequencies(corpus);
  CHECK(u(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(u(1, 0) == 0.0);
  CHECK(u(2, 0) == doctest::Approx(1.0 / 3.0));
  // single-word document -> basis vector
  CHECK(u(1, 1) == 1.0);
  CHECK(u.col(1).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("law of large numbers: one huge document approaches C0 w0") {
  SyntheticSpec spec;
  spec.vocab_size = 10;
  spec.num_docs = 1;
  spec.num_topics = 3;
  spec.topic_prior = Vector::Ones(10);
  spec.weights.kind = WeightDesign::Kind::DirichletIID;
  spec.weights.dirichlet_conc = Vector::Ones(3);
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 1000000;
  spec.seed = 77;
  auto [corpus, truth] = generate_synthetic(spec);
  const Vector expect = truth.topic_matrix.m * truth.mixing_matrix.m.col(0);
  const Vector got = empirical_frequencies(corpus).col(0);
  CHECK((got - expect).norm() < 5e-3);
}

TEST_CASE("poisson doc lengths are resampled away from zero") {
  SyntheticSpec spec = basic_spec();
  spec.length_law = SyntheticSpec::LengthLaw::Poisson;
  spec.length_param = 0.5;  // zero lengths would be common without resampling
  spec.num_docs = 200;
  auto [corpus, truth] = generate_synthetic(spec);
  CHECK(corpus.num_docs == 200);
  for (auto n : corpus.doc_lengths) CHECK(n >= 1);
}

TEST_CASE("corner pattern weights always pass the scatter check") {
  SyntheticSpec spec;
  spec.vocab_size = 4;
  spec.num_docs = 12;  // k(k-1) for k = 4
  spec.num_topics = 4;
  spec.topic_prior = Vector::Ones(4);
  spec.weights.kind = WeightDesign::Kind::CornerPattern;
  spec.weights.corner_x = 0.2;  // < 1/4
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 30;
  spec.seed = 5;
  auto [corpus, truth] = generate_synthetic(spec);
  MixingMatrix w;
  w.m = truth.mixing_matrix.m;
  const auto verdict = scatter::check_ss(w, 10000, 1e-8, 99);
  CHECK(verdict.failures == 0);
}

TEST_CASE("corner pattern x >= 1/k is rejected") {
  SyntheticSpec spec = basic_spec();
  spec.weights.kind = WeightDesign::Kind::CornerPattern;
  spec.weights.corner_x = 0.34;
  spec.num_docs = 6;
  spec.num_topics = 3;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
}

TEST_CASE("explicit weights with k > V set the rank warning") {
  SyntheticSpec spec;
  spec.vocab_size = 2;
  spec.num_docs = 3;
  spec.num_topics = 3;
  spec.explicit_topics = true;
  spec.topic_matrix.resize(2, 3);
  spec.topic_matrix << 0.5, 0.4, 0.3, 0.5, 0.6, 0.7;
  spec.weights.kind = WeightDesign::Kind::DirichletIID;
  spec.weights.dirichlet_conc = Vector::Ones(3);
  spec.length_law = SyntheticSpec::LengthLaw::Fixed;
  spec.length_param = 10;
  auto [corpus, truth] = generate_synthetic(spec);
  CHECK(truth.rank_warning);
}

TEST_CASE("spec files parse with fractions and drive generation") {
  std::istringstream in(
      "# comment\n"
      "V = 3\n"
      "d = 6\n"
      "k = 3\n"
      "seed = 7\n"
      "doc_length = fixed 60\n"
      "noiseless = true\n"
      "topic_matrix = explicit 2/3 1/6 1/6 ; 1/6 2/3 1/6 ; 1/6 1/6 2/3\n"
      "weights = explicit 5/6 0 1/6 5/6 1/6 0 ; 1/6 5/6 0 0 5/6 1/6 ; 0 1/6 5/6 1/6 0 5/6\n");
  const SyntheticSpec spec = parse_synthetic_spec(in);
  CHECK(spec.noiseless);
  CHECK(spec.topic_matrix(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  auto [corpus, truth] = generate_synthetic(spec);
  CHECK(corpus.num_docs == 6);
  for (auto n : corpus.doc_lengths) CHECK(n == 60);
}

TEST_CASE("vocabulary files load and round trip") {
  std::istringstream docword("2\n3\n3\n1 1 2\n1 3 1\n2 2 4\n");
  std::istringstream vocab("alpha\nbeta\ngamma\n");
  const auto res = load_uci_bag_of_words(docword, &vocab);
  REQUIRE(res.corpus.vocab.has_value());
  CHECK(res.corpus.vocab->at(2) == "gamma");

  std::istringstream docword2("2\n3\n3\n1 1 2\n1 3 1\n2 2 4\n");
  std::istringstream short_vocab("alpha\nbeta\n");
  CHECK_THROWS_AS(load_uci_bag_of_words(docword2, &short_vocab), IoError);
}

TEST_CASE("make_corpus rejects invariant violations") {
  CHECK_THROWS_AS(make_corpus(1, 2, {{0, 0, 2}, {0, 0, 1}}), UsageError);  // duplicate
  CHECK_THROWS_AS(make_corpus(1, 2, {{0, 5, 2}}), UsageError);            // word range
  CHECK_THROWS_AS(make_corpus(1, 2, {{2, 0, 2}}), UsageError);            // doc range
  CHECK_THROWS_AS(make_corpus(1, 2, {{0, 0, 0}}), UsageError);            // zero count
  CHECK_THROWS_AS(make_corpus(2, 2, {{0, 0, 1}}), UsageError);            // empty doc 1
}
