#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "topiclab/report_io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = TOPICLAB_BIN;
const std::string kRepo = TOPICLAB_REPO_DIR;

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("topiclab_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string hash_outputs(const fs::path& dir) {
  // Concatenated name:hash lines over every non-manifest file, sorted by name.
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  std::string acc;
  for (const auto& name : names)
    acc += name + ":" + topiclab::io::sha256_file((dir / name).string()) + "\n";
  return acc;
}

}  // namespace

TEST_CASE("generate: determinism across reruns, divergence across seeds") {
  const auto dir1 = fresh_dir("gen1");
  const auto dir2 = fresh_dir("gen2");
  const auto dir3 = fresh_dir("gen3");
  const std::string spec = kRepo + "/data/specs/sim_design_c_ss.spec";
  REQUIRE(run(kBin + " --out-dir " + dir1.string() + " generate " + spec) == 0);
  REQUIRE(run(kBin + " --out-dir " + dir2.string() + " generate " + spec) == 0);
  REQUIRE(run(kBin + " --out-dir " + dir3.string() + " generate " + spec + " --seed 9") == 0);
  CHECK(hash_outputs(dir1) == hash_outputs(dir2));
  CHECK(hash_outputs(dir1) != hash_outputs(dir3));
  CHECK(fs::exists(dir1 / "manifest.json"));
  CHECK(fs::exists(dir1 / "corpus.docword.txt"));
  CHECK(fs::exists(dir1 / "C0.csv"));
  CHECK(fs::exists(dir1 / "W0.csv"));
}

TEST_CASE("generate: golden spec outputs match the committed checksums") {
  std::ifstream in(kRepo + "/data/specs/golden_checksums.json");
  REQUIRE(in.good());
  nlohmann::json golden;
  in >> golden;
  for (const auto& [spec, files] : golden.items()) {
    const auto dir = fresh_dir("golden_" + spec);
    REQUIRE(run(kBin + " --out-dir " + dir.string() + " generate " + kRepo + "/data/specs/" +
                spec + ".spec") == 0);
    for (const auto& [name, hash] : files.items()) {
      CAPTURE(spec);
      CAPTURE(name);
      CHECK(topiclab::io::sha256_file((dir / name).string()) == hash.get<std::string>());
    }
  }
}

TEST_CASE("generate: invalid corner pattern exits with the usage code") {
  const auto dir = fresh_dir("genbad");
  const fs::path bad_spec = dir / "bad.spec";
  std::ofstream(bad_spec) << "V = 3\nd = 6\nk = 3\nseed = 1\ndoc_length = fixed 10\n"
                             "topic_matrix = explicit 1 0 0 ; 0 1 0 ; 0 0 1\n"
                             "weights = corner_pattern 0.4\n";
  CHECK(run(kBin + " --out-dir " + dir.string() + " generate " + bad_spec.string()) == 2);
}

TEST_CASE("fit: usage errors and the determinism contract across thread counts") {
  const auto gen = fresh_dir("fitgen");
  std::ofstream(gen / "tiny.spec")
      << "V = 3\nd = 6\nk = 3\nseed = 3\ndoc_length = fixed 150\n"
         "topic_matrix = explicit 1 0 0 ; 0 1 0 ; 0 0 1\nweights = corner_pattern 1/6\n";
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " generate " + (gen / "tiny.spec").string()) ==
          0);
  const std::string corpus = (gen / "corpus.docword.txt").string();

  CHECK(run(kBin + " --out-dir " + gen.string() + " fit " + corpus + " --k 0") == 2);

  const auto t1 = fresh_dir("fit_t1");
  const auto t2 = fresh_dir("fit_t2");
  const std::string common = " fit " + corpus + " --k 3 --em-iters 6 --mcmc-samples 20 --seed 5";
  REQUIRE(run(kBin + " --out-dir " + t1.string() + common + " --threads 1") == 0);
  REQUIRE(run(kBin + " --out-dir " + t2.string() + common + " --threads 2") == 0);
  CHECK(hash_outputs(t1) == hash_outputs(t2));

  // Missing input path maps to the IO exit code.
  CHECK(run(kBin + " --out-dir " + t1.string() + " fit /nonexistent.txt --k 3") == 3);
}

TEST_CASE("fit: restarts are reported") {
  const auto gen = fresh_dir("fitrestart");
  std::ofstream(gen / "tiny.spec")
      << "V = 3\nd = 6\nk = 3\nseed = 4\ndoc_length = fixed 100\n"
         "topic_matrix = explicit 1 0 0 ; 0 1 0 ; 0 0 1\nweights = corner_pattern 1/6\n";
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " generate " + (gen / "tiny.spec").string()) ==
          0);
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " fit " + (gen / "corpus.docword.txt").string() +
              " --k 3 --em-iters 4 --mcmc-samples 10 --restarts 4 --seed 6") == 0);
  std::ifstream rep(gen / "fit_report.json");
  nlohmann::json j;
  rep >> j;
  CHECK(j.at("restart_index_selected").get<int>() >= 0);
  CHECK(j.at("restart_index_selected").get<int>() < 4);
  CHECK(j.contains("converged"));
}

TEST_CASE("check-ss: verdicts and usage validation") {
  const auto dir = fresh_dir("checkss");
  std::ofstream(dir / "identity.csv") << "doc_0,doc_1,doc_2\n1,0,0\n0,1,0\n0,0,1\n";
  REQUIRE(run(kBin + " --out-dir " + dir.string() + " check-ss " + (dir / "identity.csv").string() +
              " --samples 500 --seed 3") == 0);
  {
    std::ifstream in(dir / "scatter_verdict.json");
    nlohmann::json j;
    in >> j;
    CHECK(j.at("failure_fraction").get<double>() == 0.0);
  }
  std::ofstream(dir / "cluster.csv")
      << "doc_0,doc_1,doc_2\n0.35,0.33,0.32\n0.33,0.35,0.32\n0.32,0.32,0.36\n";
  REQUIRE(run(kBin + " --out-dir " + dir.string() + " check-ss " + (dir / "cluster.csv").string() +
              " --samples 1000 --seed 3") == 0);
  {
    std::ifstream in(dir / "scatter_verdict.json");
    nlohmann::json j;
    in >> j;
    CHECK(j.at("failure_fraction").get<double>() > 0.99);
  }
  CHECK(run(kBin + " --out-dir " + dir.string() + " check-ss " + (dir / "identity.csv").string() +
            " --samples 100 --seed 3 --alpha 0.1 --beta 1.5") == 2);
}

TEST_CASE("evaluate: self distance, fixture metrics and missing-ref usage error") {
  const auto dir = fresh_dir("eval");
  const std::string cpath = kRepo + "/data/fixtures/hand3_C.csv";
  const std::string wpath = kRepo + "/data/fixtures/hand3_W.csv";
  const std::string corpus = kRepo + "/data/fixtures/hand3.docword.txt";

  REQUIRE(run(kBin + " --out-dir " + dir.string() + " evaluate " + cpath + " --ref " + cpath +
              " --metrics dis") == 0);
  {
    std::ifstream in(dir / "dis.json");
    nlohmann::json j;
    in >> j;
    CHECK(j.at("value").get<double>() < 1e-12);
  }

  REQUIRE(run(kBin + " --out-dir " + dir.string() + " evaluate " + cpath + " --corpus " + corpus +
              " --weights " + wpath +
              " --metrics coherence,similarity,perplexity --top-words 2") == 0);
  {
    std::ifstream in(dir / "coherence.json");
    nlohmann::json j;
    in >> j;
    CHECK(std::abs(j.at("value").get<double>() - (-2.772588722235781)) < 1e-10);
  }
  {
    std::ifstream in(dir / "perplexity.json");
    nlohmann::json j;
    in >> j;
    CHECK(std::abs(j.at("value").get<double>() - 2.806943326432215) < 1e-10);
  }

  CHECK(run(kBin + " --out-dir " + dir.string() + " evaluate " + cpath +
            " --metrics relative-rmse") == 2);
}

TEST_CASE("select-k: emits spectrum files and clips an oversized max-k") {
  const auto gen = fresh_dir("selk");
  std::ofstream(gen / "tiny.spec")
      << "V = 12\nd = 10\nk = 2\nseed = 5\ndoc_length = fixed 400\n"
         "topic_prior = symmetric 1.0\nweights = dirichlet 1.0\n";
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " generate " + (gen / "tiny.spec").string()) ==
          0);
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " select-k " +
              (gen / "corpus.docword.txt").string() + " --max-k 50") == 0);
  CHECK(fs::exists(gen / "spectrum.json"));
  CHECK(fs::exists(gen / "spectrum.csv"));
  std::ifstream in(gen / "spectrum.json");
  nlohmann::json j;
  in >> j;
  CHECK(j.at("singular_values").size() == 10);  // clipped to min(V, d)
}

namespace {

// Parses intlik.csv rows into (param_c, loglik, mc_se) triples.
std::vector<std::array<double, 3>> read_sweep_csv(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::array<double, 3>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string label, c, ll, se;
    std::getline(ss, label, ',');
    std::getline(ss, c, ',');
    std::getline(ss, ll, ',');
    std::getline(ss, se, ',');
    rows.push_back({c.empty() ? std::nan("") : std::stod(c), std::stod(ll), std::stod(se)});
  }
  return rows;
}

}  // namespace

TEST_CASE("intlik-sweep: argmax lands in the expected band on the n=6000 corpus") {
  const auto gen = fresh_dir("sweep_band");
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " generate " + kRepo +
              "/data/specs/noiseless_n6000.spec") == 0);
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " intlik-sweep " +
              (gen / "corpus.docword.txt").string() + " " + kRepo +
              "/data/specs/symmetric_c_grid.json --T 5000 --seed 11") == 0);
  const auto rows = read_sweep_csv(gen / "intlik.csv");
  REQUIRE(rows.size() == 26);
  double best_c = 0.0, best_ll = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r[1] > best_ll) {
      best_ll = r[1];
      best_c = r[0];
    }
  }
  CHECK(best_c >= 0.67);
  CHECK(best_c <= 0.74);
}

TEST_CASE("intlik-sweep: batch MC standard error shrinks with T") {
  const auto gen = fresh_dir("sweep_se");
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " generate " + kRepo +
              "/data/specs/noiseless_n60.spec") == 0);
  const std::string corpus = (gen / "corpus.docword.txt").string();
  std::ofstream(gen / "one.json")
      << "{\"candidates\": [{\"label\": \"c=0.70\", \"symmetric_c\": 0.70, \"k\": 3}]}\n";
  std::vector<double> ses;
  for (int T : {100, 1000, 10000}) {
    const auto dir = fresh_dir("sweep_se_T" + std::to_string(T));
    REQUIRE(run(kBin + " --out-dir " + dir.string() + " intlik-sweep " + corpus + " " +
                (gen / "one.json").string() + " --T " + std::to_string(T) +
                " --seed 13 --batches 10") == 0);
    const auto rows = read_sweep_csv(dir / "intlik.csv");
    REQUIRE(rows.size() == 1);
    ses.push_back(rows[0][2]);
  }
  CHECK(ses[1] < ses[0]);
  CHECK(ses[2] < ses[1]);
}

TEST_CASE("intlik-sweep: rejects an empty family") {
  const auto gen = fresh_dir("sweep");
  REQUIRE(run(kBin + " --out-dir " + gen.string() + " generate " + kRepo +
              "/data/specs/noiseless_n60.spec") == 0);
  std::ofstream(gen / "empty.json") << "{\"candidates\": []}\n";
  CHECK(run(kBin + " --out-dir " + gen.string() + " intlik-sweep " +
            (gen / "corpus.docword.txt").string() + " " + (gen / "empty.json").string() +
            " --T 100 --seed 1") == 2);
}

TEST_CASE("rerun: replaying a manifest reproduces byte-identical outputs") {
  const auto dir1 = fresh_dir("rerun1");
  const auto dir2 = fresh_dir("rerun2");
  const std::string spec = kRepo + "/data/specs/sim_design_c_ss.spec";
  REQUIRE(run(kBin + " --out-dir " + dir1.string() + " generate " + spec) == 0);
  REQUIRE(run(kBin + " --out-dir " + dir2.string() + " rerun " +
              (dir1 / "manifest.json").string()) == 0);
  CHECK(hash_outputs(dir1) == hash_outputs(dir2));
}
