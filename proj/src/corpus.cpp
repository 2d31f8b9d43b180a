#include "topiclab/corpus.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "topiclab/rng.hpp"

namespace topiclab {

namespace {

constexpr std::uint64_t kTagTopic = 0x746f706963ULL;
constexpr std::uint64_t kTagWeights = 0x77656967687473ULL;
constexpr std::uint64_t kTagLength = 0x6c656eULL;
constexpr std::uint64_t kTagWords = 0x776f726473ULL;

[[noreturn]] void parse_fail(const std::string& what, std::size_t line_no) {
  throw IoError("uci parse error at line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::int64_t Corpus::total_words() const {
  return std::accumulate(doc_lengths.begin(), doc_lengths.end(), std::int64_t{0});
}

Corpus make_corpus(std::int32_t num_docs, std::int32_t vocab_size,
                   std::vector<Corpus::Entry> entries,
                   std::optional<std::vector<std::string>> vocab) {
  if (num_docs < 0 || vocab_size < 0) throw UsageError("corpus: negative dimensions");
  for (const auto& e : entries) {
    if (e.doc < 0 || e.doc >= num_docs)
      throw UsageError("corpus: doc id " + std::to_string(e.doc) + " out of range [0," +
                       std::to_string(num_docs) + ")");
    if (e.word < 0 || e.word >= vocab_size)
      throw UsageError("corpus: word id " + std::to_string(e.word) + " out of range [0," +
                       std::to_string(vocab_size) + ")");
    if (e.count < 1) throw UsageError("corpus: counts must be >= 1");
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.word < b.word;
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].doc == entries[i - 1].doc && entries[i].word == entries[i - 1].word)
      throw UsageError("corpus: duplicate (doc,word) pair (" + std::to_string(entries[i].doc) +
                       "," + std::to_string(entries[i].word) + ")");
  }
  if (vocab && static_cast<std::int32_t>(vocab->size()) != vocab_size)
    throw UsageError("corpus: vocab length " + std::to_string(vocab->size()) +
                     " does not match vocab_size " + std::to_string(vocab_size));

  Corpus c;
  c.num_docs = num_docs;
  c.vocab_size = vocab_size;
  c.entries = std::move(entries);
  c.vocab = std::move(vocab);
  c.doc_offsets.assign(static_cast<std::size_t>(num_docs) + 1, 0);
  c.doc_lengths.assign(static_cast<std::size_t>(num_docs), 0);
  for (const auto& e : c.entries) {
    c.doc_offsets[static_cast<std::size_t>(e.doc) + 1]++;
    c.doc_lengths[static_cast<std::size_t>(e.doc)] += e.count;
  }
  for (std::size_t i = 1; i < c.doc_offsets.size(); ++i) c.doc_offsets[i] += c.doc_offsets[i - 1];
  for (std::int32_t i = 0; i < num_docs; ++i) {
    if (c.doc_lengths[static_cast<std::size_t>(i)] < 1)
      throw UsageError("corpus: document " + std::to_string(i) + " has zero total count");
  }
  return c;
}

UciLoadResult load_uci_bag_of_words(std::istream& docword, std::istream* vocab_stream) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](bool required) -> bool {
    while (std::getline(docword, line)) {
      ++line_no;
      return true;
    }
    if (required) parse_fail("unexpected end of file", line_no + 1);
    return false;
  };
  auto parse_header_int = [&](const char* name) -> std::int64_t {
    next_line(true);
    std::istringstream ss(line);
    std::int64_t v;
    std::string rest;
    if (!(ss >> v) || (ss >> rest) || v < 0)
      parse_fail(std::string("malformed header value for ") + name, line_no);
    return v;
  };

  const std::int64_t D = parse_header_int("D");
  const std::int64_t W = parse_header_int("W");
  const std::int64_t NNZ = parse_header_int("NNZ");

  std::vector<Corpus::Entry> raw;
  raw.reserve(static_cast<std::size_t>(NNZ));
  for (std::int64_t i = 0; i < NNZ; ++i) {
    if (!next_line(false)) parse_fail("NNZ declares more triplets than present", line_no + 1);
    std::istringstream ss(line);
    std::int64_t doc1, word1, count;
    std::string rest;
    if (!(ss >> doc1 >> word1 >> count) || (ss >> rest))
      parse_fail("malformed triplet '" + line + "'", line_no);
    if (doc1 < 1 || doc1 > D)
      parse_fail("docID " + std::to_string(doc1) + " outside declared range [1," +
                     std::to_string(D) + "]",
                 line_no);
    if (word1 < 1 || word1 > W)
      parse_fail("wordID " + std::to_string(word1) + " outside declared range [1," +
                     std::to_string(W) + "]",
                 line_no);
    if (count < 1) parse_fail("count must be >= 1", line_no);
    raw.push_back({static_cast<std::int32_t>(doc1 - 1), static_cast<std::int32_t>(word1 - 1), count});
  }
  while (std::getline(docword, line)) {
    ++line_no;
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
      parse_fail("trailing content after declared NNZ triplets", line_no);
  }

  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.word < b.word;
  });
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].doc == raw[i - 1].doc && raw[i].word == raw[i - 1].word)
      throw IoError("uci parse error: duplicate triplet for (docID " +
                    std::to_string(raw[i].doc + 1) + ", wordID " + std::to_string(raw[i].word + 1) +
                    ")");
  }

  // Documents with zero total count are dropped and remaining ids compacted.
  std::vector<std::int32_t> remap(static_cast<std::size_t>(D), -1);
  for (const auto& e : raw) remap[static_cast<std::size_t>(e.doc)] = 0;
  std::int32_t kept = 0, dropped = 0;
  for (auto& r : remap) {
    if (r == 0)
      r = kept++;
    else
      ++dropped;
  }
  for (auto& e : raw) e.doc = remap[static_cast<std::size_t>(e.doc)];

  std::optional<std::vector<std::string>> vocab;
  if (vocab_stream) {
    std::vector<std::string> words;
    std::string w;
    while (std::getline(*vocab_stream, w)) {
      while (!w.empty() && (w.back() == '\r' || w.back() == '\n')) w.pop_back();
      if (w.empty() && static_cast<std::int64_t>(words.size()) >= W) continue;
      words.push_back(w);
    }
    if (static_cast<std::int64_t>(words.size()) != W)
      throw IoError("vocab file has " + std::to_string(words.size()) + " tokens, expected " +
                    std::to_string(W));
    vocab = std::move(words);
  }

  UciLoadResult res;
  res.dropped_docs = dropped;
  res.corpus = make_corpus(kept, static_cast<std::int32_t>(W), std::move(raw), std::move(vocab));
  return res;
}

UciLoadResult load_uci_bag_of_words_file(const std::string& docword_path,
                                         const std::string& vocab_path) {
  std::ifstream in(docword_path);
  if (!in) throw IoError("cannot open corpus file: " + docword_path);
  if (vocab_path.empty()) return load_uci_bag_of_words(in, nullptr);
  std::ifstream vin(vocab_path);
  if (!vin) throw IoError("cannot open vocab file: " + vocab_path);
  return load_uci_bag_of_words(in, &vin);
}

void write_uci_bag_of_words(const Corpus& corpus, std::ostream& out) {
  out << corpus.num_docs << "\n" << corpus.vocab_size << "\n" << corpus.entries.size() << "\n";
  for (const auto& e : corpus.entries)
    out << (e.doc + 1) << " " << (e.word + 1) << " " << e.count << "\n";
}

void write_uci_bag_of_words_file(const Corpus& corpus, const std::string& docword_path,
                                 const std::string& vocab_path) {
  std::ofstream out(docword_path);
  if (!out) throw IoError("cannot write corpus file: " + docword_path);
  write_uci_bag_of_words(corpus, out);
  if (!vocab_path.empty()) {
    if (!corpus.vocab) throw UsageError("corpus carries no vocabulary to write");
    std::ofstream vout(vocab_path);
    if (!vout) throw IoError("cannot write vocab file: " + vocab_path);
    for (const auto& w : *corpus.vocab) vout << w << "\n";
  }
}

Matrix empirical_frequencies(const Corpus& corpus) {
  Matrix u = Matrix::Zero(corpus.vocab_size, corpus.num_docs);
  for (const auto& e : corpus.entries)
    u(e.word, e.doc) = static_cast<double>(e.count) / static_cast<double>(
                           corpus.doc_lengths[static_cast<std::size_t>(e.doc)]);
  return u;
}

namespace {

Vector sample_weight_column(const WeightDesign& wd, std::int32_t k, rng::Stream& st) {
  switch (wd.kind) {
    case WeightDesign::Kind::DirichletIID:
      return st.dirichlet(wd.dirichlet_conc);
    case WeightDesign::Kind::MixtureDirichlet: {
      double u = st.uniform();
      std::size_t pick = wd.mixture.size() - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < wd.mixture.size(); ++j) {
        acc += wd.mixture[j].first;
        if (u < acc) {
          pick = j;
          break;
        }
      }
      return st.dirichlet(wd.mixture[pick].second);
    }
    case WeightDesign::Kind::Balls: {
      const double wsum = wd.ball_weights.sum();
      double u = st.uniform() * wsum;
      Index ball = wd.ball_weights.size() - 1;
      double acc = 0.0;
      for (Index j = 0; j < wd.ball_weights.size(); ++j) {
        acc += wd.ball_weights[j];
        if (u < acc) {
          ball = j;
          break;
        }
      }
      const Vector center = wd.ball_centers.col(ball);
      const double radius = wd.ball_radii[ball];
      // Uniform in the (k-1)-ball inside aff(simplex), rejected against the
      // simplex boundary.
      for (int attempt = 0; attempt < 100000; ++attempt) {
        Vector dir(k);
        double mean = 0.0;
        for (std::int32_t l = 0; l < k; ++l) {
          dir[l] = st.normal();
          mean += dir[l];
        }
        mean /= k;
        dir.array() -= mean;
        const double norm = dir.norm();
        if (norm == 0.0) continue;
        const double r = radius * std::pow(st.uniform(), 1.0 / static_cast<double>(k - 1));
        Vector x = center + dir * (r / norm);
        if ((x.array() >= 0.0).all()) return x;
      }
      throw NumericalError("ball weight design: rejection sampling failed; ball barely intersects the simplex");
    }
    case WeightDesign::Kind::Explicit:
    case WeightDesign::Kind::CornerPattern:
      throw UsageError("internal: deterministic weight designs are not sampled per document");
  }
  throw UsageError("internal: unknown weight design");
}

}  // namespace

std::pair<Corpus, GroundTruth> generate_synthetic(const SyntheticSpec& spec) {
  const std::int32_t V = spec.vocab_size, d = spec.num_docs, k = spec.num_topics;
  if (V < 1 || d < 1 || k < 1) throw UsageError("synthetic spec: V, d, k must be positive");

  GroundTruth truth;

  // Ground-truth topics.
  Matrix C(V, k);
  if (spec.explicit_topics) {
    if (spec.topic_matrix.rows() != V || spec.topic_matrix.cols() != k)
      throw UsageError("synthetic spec: explicit topic matrix must be V x k");
    require_column_stochastic(spec.topic_matrix, "synthetic spec: topic matrix");
    C = spec.topic_matrix;
  } else {
    if (spec.topic_prior.size() != V)
      throw UsageError("synthetic spec: topic prior must have length V");
    if ((spec.topic_prior.array() <= 0.0).any())
      throw UsageError("synthetic spec: topic prior concentrations must be positive");
    for (std::int32_t l = 0; l < k; ++l) {
      rng::Stream st(rng::substream_key(spec.seed, {kTagTopic, static_cast<std::uint64_t>(l)}));
      C.col(l) = st.dirichlet(spec.topic_prior);
    }
  }
  {
    Eigen::JacobiSVD<Matrix> svd(C);
    const double thresh = 1e-10 * std::max<double>(1.0, svd.singularValues()[0]);
    Index rank = 0;
    for (Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > thresh) ++rank;
    truth.rank_warning = rank < k;
  }

  // Ground-truth mixing weights.
  Matrix W(k, d);
  switch (spec.weights.kind) {
    case WeightDesign::Kind::Explicit: {
      if (spec.weights.explicit_weights.rows() != k || spec.weights.explicit_weights.cols() != d)
        throw UsageError("synthetic spec: explicit weights must be k x d");
      require_column_stochastic(spec.weights.explicit_weights, "synthetic spec: weights");
      W = spec.weights.explicit_weights;
      break;
    }
    case WeightDesign::Kind::CornerPattern: {
      const double x = spec.weights.corner_x;
      if (x < 0.0 || x >= 1.0 / static_cast<double>(k))
        throw UsageError("corner pattern requires 0 <= x < 1/k");
      if (d != k * (k - 1))
        throw UsageError("corner pattern produces d = k(k-1) documents; got d = " +
                         std::to_string(d));
      Index col = 0;
      for (std::int32_t i = 0; i < k; ++i)
        for (std::int32_t j = 0; j < k; ++j) {
          if (i == j) continue;
          W.col(col).setZero();
          W(i, col) = 1.0 - x;
          W(j, col) += x;
          ++col;
        }
      break;
    }
    default: {
      if (spec.weights.kind == WeightDesign::Kind::DirichletIID) {
        if (spec.weights.dirichlet_conc.size() != k ||
            (spec.weights.dirichlet_conc.array() <= 0.0).any())
          throw UsageError("synthetic spec: weight concentration must be positive length-k");
      } else if (spec.weights.kind == WeightDesign::Kind::MixtureDirichlet) {
        if (spec.weights.mixture.empty())
          throw UsageError("synthetic spec: mixture weight design needs components");
        for (const auto& [w, conc] : spec.weights.mixture)
          if (w <= 0.0 || conc.size() != k || (conc.array() <= 0.0).any())
            throw UsageError("synthetic spec: invalid mixture component");
      } else {  // Balls
        const auto& wd = spec.weights;
        if (wd.ball_centers.rows() != k || wd.ball_centers.cols() < 1)
          throw UsageError("synthetic spec: ball centers must be k x B");
        if (wd.ball_radii.size() != wd.ball_centers.cols() ||
            wd.ball_weights.size() != wd.ball_centers.cols())
          throw UsageError("synthetic spec: per-ball radius and weight required");
        for (Index b = 0; b < wd.ball_centers.cols(); ++b) {
          const Vector& c = wd.ball_centers.col(b);
          if ((c.array() < 0.0).any() || std::abs(c.sum() - 1.0) > 1e-10)
            throw UsageError("synthetic spec: ball centers must lie in the simplex");
          if (wd.ball_radii[b] < 0.0 || wd.ball_weights[b] <= 0.0)
            throw UsageError("synthetic spec: ball radii must be >= 0 and weights > 0");
        }
      }
      for (std::int32_t i = 0; i < d; ++i) {
        rng::Stream st(rng::substream_key(spec.seed, {kTagWeights, static_cast<std::uint64_t>(i)}));
        W.col(i) = sample_weight_column(spec.weights, k, st);
      }
    }
  }

  // Document lengths.
  std::vector<std::int64_t> lengths(static_cast<std::size_t>(d));
  if (spec.length_law == SyntheticSpec::LengthLaw::Fixed) {
    const auto n = static_cast<std::int64_t>(spec.length_param);
    if (n < 1 || static_cast<double>(n) != spec.length_param)
      throw UsageError("synthetic spec: fixed document length must be a positive integer");
    std::fill(lengths.begin(), lengths.end(), n);
  } else {
    if (!(spec.length_param > 0.0))
      throw UsageError("synthetic spec: poisson mean must be positive");
    for (std::int32_t i = 0; i < d; ++i) {
      rng::Stream st(rng::substream_key(spec.seed, {kTagLength, static_cast<std::uint64_t>(i)}));
      std::int64_t n = 0;
      // Zero-length documents are resampled so d stays exact.
      while ((n = st.poisson(spec.length_param)) == 0) {
      }
      lengths[static_cast<std::size_t>(i)] = n;
    }
  }

  std::vector<Corpus::Entry> entries;
  Vector u(V);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(V));
  for (std::int32_t i = 0; i < d; ++i) {
    u.noalias() = C * W.col(i);
    const std::int64_t n = lengths[static_cast<std::size_t>(i)];
    if (spec.noiseless) {
      // Largest-remainder allocation of n*u to integers summing to n.
      std::int64_t assigned = 0;
      std::vector<std::pair<double, std::int32_t>> rema(static_cast<std::size_t>(V));
      for (std::int32_t v = 0; v < V; ++v) {
        const double exact = static_cast<double>(n) * u[v];
        const auto fl = static_cast<std::int64_t>(std::floor(exact));
        counts[static_cast<std::size_t>(v)] = fl;
        assigned += fl;
        rema[static_cast<std::size_t>(v)] = {exact - static_cast<double>(fl), v};
      }
      std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (std::int64_t rcount = n - assigned, j = 0; j < rcount; ++j)
        counts[static_cast<std::size_t>(rema[static_cast<std::size_t>(j)].second)]++;
    } else {
      rng::Stream st(rng::substream_key(spec.seed, {kTagWords, static_cast<std::uint64_t>(i)}));
      st.multinomial(n, u, counts);
    }
    for (std::int32_t v = 0; v < V; ++v)
      if (counts[static_cast<std::size_t>(v)] > 0)
        entries.push_back({i, v, counts[static_cast<std::size_t>(v)]});
  }

  truth.topic_matrix.m = std::move(C);
  truth.mixing_matrix.m = std::move(W);
  return {make_corpus(d, V, std::move(entries)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Spec-file parsing. Format: one "key = value" per line, '#' comments,
// fractions like 5/6 accepted wherever a number is expected.

namespace {

double parse_number(const std::string& tok, const std::string& context) {
  const auto slash = tok.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    }
    const std::string num = tok.substr(0, slash), den = tok.substr(slash + 1);
    const double a = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument(tok);
    const double b = std::stod(den, &used);
    if (used != den.size() || b == 0.0) throw std::invalid_argument(tok);
    return a / b;
  } catch (const std::exception&) {
    throw UsageError("spec: cannot parse number '" + tok + "' in " + context);
  }
}

std::vector<std::string> tokenize(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

// "a b c ; d e f" -> row-major matrix.
Matrix parse_inline_matrix(const std::string& body, const std::string& context) {
  std::vector<std::vector<double>> rows;
  std::string chunk;
  std::istringstream ss(body);
  while (std::getline(ss, chunk, ';')) {
    auto toks = tokenize(chunk);
    if (toks.empty()) continue;
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& t : toks) row.push_back(parse_number(t, context));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError("spec: empty matrix in " + context);
  const std::size_t ncols = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != ncols) throw UsageError("spec: ragged matrix rows in " + context);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

}  // namespace

SyntheticSpec parse_synthetic_spec(std::istream& in) {
  SyntheticSpec spec;
  bool saw_topic_prior = false;
  double symmetric_topic_prior = 0.0;
  bool symmetric_prior = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("spec line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (value.empty()) throw UsageError("spec: empty value for key '" + key + "'");

    if (key == "V") {
      spec.vocab_size = static_cast<std::int32_t>(parse_number(value, key));
    } else if (key == "d") {
      spec.num_docs = static_cast<std::int32_t>(parse_number(value, key));
    } else if (key == "k") {
      spec.num_topics = static_cast<std::int32_t>(parse_number(value, key));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "noiseless") {
      if (value != "true" && value != "false")
        throw UsageError("spec: noiseless must be true or false");
      spec.noiseless = value == "true";
    } else if (key == "doc_length") {
      auto toks = tokenize(value);
      if (toks.size() != 2 || (toks[0] != "fixed" && toks[0] != "poisson"))
        throw UsageError("spec: doc_length must be 'fixed N' or 'poisson MEAN'");
      spec.length_law = toks[0] == "fixed" ? SyntheticSpec::LengthLaw::Fixed
                                           : SyntheticSpec::LengthLaw::Poisson;
      spec.length_param = parse_number(toks[1], key);
    } else if (key == "topic_prior") {
      auto toks = tokenize(value);
      if (toks.size() >= 2 && toks[0] == "symmetric") {
        symmetric_prior = true;
        symmetric_topic_prior = parse_number(toks[1], key);
      } else {
        Vector v(static_cast<Index>(toks.size()));
        for (std::size_t i = 0; i < toks.size(); ++i)
          v[static_cast<Index>(i)] = parse_number(toks[i], key);
        spec.topic_prior = v;
      }
      saw_topic_prior = true;
    } else if (key == "topic_matrix") {
      spec.explicit_topics = true;
      std::string body = value;
      if (body.rfind("explicit", 0) == 0) body = body.substr(8);
      spec.topic_matrix = parse_inline_matrix(body, key);
    } else if (key == "weights") {
      auto toks = tokenize(value);
      if (toks.empty()) throw UsageError("spec: weights needs a design");
      const std::string kind = toks[0];
      const std::string rest = value.substr(value.find(kind) + kind.size());
      if (kind == "dirichlet") {
        spec.weights.kind = WeightDesign::Kind::DirichletIID;
        auto args = tokenize(rest);
        if (args.empty()) throw UsageError("spec: weights dirichlet needs concentrations");
        Vector v(static_cast<Index>(args.size()));
        for (std::size_t i = 0; i < args.size(); ++i)
          v[static_cast<Index>(i)] = parse_number(args[i], key);
        spec.weights.dirichlet_conc = v;  // scalar form expanded after k is known
      } else if (kind == "corner_pattern") {
        spec.weights.kind = WeightDesign::Kind::CornerPattern;
        auto args = tokenize(rest);
        if (args.size() != 1) throw UsageError("spec: weights corner_pattern needs one x value");
        spec.weights.corner_x = parse_number(args[0], key);
      } else if (kind == "explicit") {
        spec.weights.kind = WeightDesign::Kind::Explicit;
        spec.weights.explicit_weights = parse_inline_matrix(rest, key);
      } else if (kind == "mixture") {
        spec.weights.kind = WeightDesign::Kind::MixtureDirichlet;
        std::istringstream comps(rest);
        std::string comp;
        while (std::getline(comps, comp, ';')) {
          auto ctoks = tokenize(comp);
          if (ctoks.size() < 3)
            throw UsageError("spec: mixture component needs 'weight a1 ... ak'");
          const double w = parse_number(ctoks[0], key);
          Vector conc(static_cast<Index>(ctoks.size() - 1));
          for (std::size_t i = 1; i < ctoks.size(); ++i)
            conc[static_cast<Index>(i - 1)] = parse_number(ctoks[i], key);
          spec.weights.mixture.emplace_back(w, conc);
        }
      } else if (kind == "balls") {
        spec.weights.kind = WeightDesign::Kind::Balls;
        std::istringstream comps(rest);
        std::string comp;
        std::vector<Vector> centers;
        std::vector<double> radii, bw;
        while (std::getline(comps, comp, ';')) {
          auto at = comp.find('@');
          if (at == std::string::npos)
            throw UsageError("spec: ball entry needs 'c1 ... ck @ radius [weight]'");
          auto ctoks = tokenize(comp.substr(0, at));
          auto rtoks = tokenize(comp.substr(at + 1));
          if (ctoks.empty() || rtoks.empty() || rtoks.size() > 2)
            throw UsageError("spec: ball entry needs 'c1 ... ck @ radius [weight]'");
          Vector c(static_cast<Index>(ctoks.size()));
          for (std::size_t i = 0; i < ctoks.size(); ++i)
            c[static_cast<Index>(i)] = parse_number(ctoks[i], key);
          centers.push_back(c);
          radii.push_back(parse_number(rtoks[0], key));
          bw.push_back(rtoks.size() == 2 ? parse_number(rtoks[1], key) : 1.0);
        }
        if (centers.empty()) throw UsageError("spec: balls design needs at least one ball");
        spec.weights.ball_centers.resize(centers[0].size(), static_cast<Index>(centers.size()));
        spec.weights.ball_radii.resize(static_cast<Index>(radii.size()));
        spec.weights.ball_weights.resize(static_cast<Index>(bw.size()));
        for (std::size_t b = 0; b < centers.size(); ++b) {
          if (centers[b].size() != centers[0].size())
            throw UsageError("spec: ball centers must share a dimension");
          spec.weights.ball_centers.col(static_cast<Index>(b)) = centers[b];
          spec.weights.ball_radii[static_cast<Index>(b)] = radii[b];
          spec.weights.ball_weights[static_cast<Index>(b)] = bw[b];
        }
      } else {
        throw UsageError("spec: unknown weight design '" + kind + "'");
      }
    } else {
      throw UsageError("spec: unknown key '" + key + "'");
    }
  }

  if (spec.vocab_size < 1 || spec.num_docs < 1 || spec.num_topics < 1)
    throw UsageError("spec: V, d and k are required and must be positive");
  if (spec.length_param == 0.0) throw UsageError("spec: doc_length is required");
  if (!spec.explicit_topics) {
    if (symmetric_prior)
      spec.topic_prior = Vector::Constant(spec.vocab_size, symmetric_topic_prior);
    else if (!saw_topic_prior)
      spec.topic_prior = Vector::Ones(spec.vocab_size);
    if (spec.topic_prior.size() != spec.vocab_size)
      throw UsageError("spec: topic_prior length must equal V");
  }
  if (spec.weights.kind == WeightDesign::Kind::DirichletIID &&
      spec.weights.dirichlet_conc.size() == 1 && spec.num_topics > 1)
    spec.weights.dirichlet_conc = Vector::Constant(spec.num_topics, spec.weights.dirichlet_conc[0]);
  return spec;
}

SyntheticSpec parse_synthetic_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file: " + path);
  return parse_synthetic_spec(in);
}

}  // namespace topiclab
