// Batch command-line surface over the topiclab library: generate synthetic
// corpora, fit topic matrices, check scatteredness, evaluate metrics, select
// k from the singular spectrum and sweep the integrated likelihood.
//
// Every command materializes its resolved configuration into a manifest
// written next to the outputs; `topiclab rerun <manifest>` replays it.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "topiclab/corpus.hpp"
#include "topiclab/estimator.hpp"
#include "topiclab/evaluation.hpp"
#include "topiclab/report_io.hpp"
#include "topiclab/scatter.hpp"
#include "topiclab/types.hpp"

namespace fs = std::filesystem;
using topiclab::io::json;

namespace {

struct CommandOutcome {
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, sha256)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, sha256)
};

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw topiclab::IoError("cannot create output directory " + out_dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void note_output(CommandOutcome& outcome, const std::string& path) {
  outcome.outputs.emplace_back(path, topiclab::io::sha256_file(path));
}

void note_input(CommandOutcome& outcome, const std::string& path) {
  outcome.inputs.emplace_back(path, topiclab::io::sha256_file(path));
}

topiclab::Corpus load_corpus_arg(const std::string& path) {
  auto res = topiclab::load_uci_bag_of_words_file(path);
  if (res.dropped_docs > 0)
    std::cerr << "note: dropped " << res.dropped_docs << " zero-count documents from " << path
              << "\n";
  return std::move(res.corpus);
}

// --------------------------------------------------------------------------
// generate

CommandOutcome run_generate(const json& args, const std::string& out_dir) {
  CommandOutcome outcome;
  const std::string spec_path = args.at("spec").get<std::string>();
  note_input(outcome, spec_path);
  topiclab::SyntheticSpec spec = topiclab::parse_synthetic_spec_file(spec_path);
  if (args.contains("seed") && !args.at("seed").is_null())
    spec.seed = args.at("seed").get<std::uint64_t>();

  auto [corpus, truth] = topiclab::generate_synthetic(spec);
  if (truth.rank_warning)
    std::cerr << "warning: ground-truth topic matrix is not of full column rank\n";

  ensure_out_dir(out_dir);
  const std::string docword = join_path(out_dir, "corpus.docword.txt");
  {
    std::ostringstream body;
    topiclab::write_uci_bag_of_words(corpus, body);
    topiclab::io::atomic_write_text(docword, body.str());
  }
  const std::string c0 = join_path(out_dir, "C0.csv");
  const std::string w0 = join_path(out_dir, "W0.csv");
  topiclab::io::write_matrix_csv(truth.topic_matrix.m, c0, "topic_");
  topiclab::io::write_matrix_csv(truth.mixing_matrix.m, w0, "doc_");
  note_output(outcome, docword);
  note_output(outcome, c0);
  note_output(outcome, w0);
  return outcome;
}

// --------------------------------------------------------------------------
// fit

CommandOutcome run_fit(const json& args, const std::string& out_dir, int threads) {
  CommandOutcome outcome;
  const std::string corpus_path = args.at("corpus").get<std::string>();
  note_input(outcome, corpus_path);
  const topiclab::Corpus corpus = load_corpus_arg(corpus_path);

  topiclab::FitConfig cfg;
  cfg.k = args.at("k").get<std::int32_t>();
  if (cfg.k < 1) throw topiclab::UsageError("fit: --k must be positive");
  cfg.em_max_iters = args.at("em_iters").get<int>();
  cfg.rel_tol = args.at("tol").get<double>();
  cfg.mcmc_samples = args.at("mcmc_samples").get<int>();
  cfg.burn_in = args.at("burn_in").get<int>();
  cfg.restarts = args.at("restarts").get<int>();
  cfg.seed = args.at("seed").get<std::uint64_t>();
  cfg.threads = threads;
  const auto beta0 = args.at("beta0").get<std::vector<double>>();
  if (beta0.size() == 1)
    cfg.beta0 = topiclab::Vector::Constant(cfg.k, beta0[0]);
  else if (!beta0.empty()) {
    cfg.beta0.resize(static_cast<topiclab::Index>(beta0.size()));
    for (std::size_t i = 0; i < beta0.size(); ++i)
      cfg.beta0[static_cast<topiclab::Index>(i)] = beta0[i];
  }

  const topiclab::FitReport report = topiclab::mcmc_em_fit(corpus, cfg);

  ensure_out_dir(out_dir);
  const std::string c_csv = join_path(out_dir, "C.csv");
  const std::string w_csv = join_path(out_dir, "W.csv");
  const std::string rep_json = join_path(out_dir, "fit_report.json");
  topiclab::io::write_matrix_csv(report.topic_matrix.m, c_csv, "topic_");
  topiclab::io::write_matrix_csv(report.mixing_matrix.m, w_csv, "doc_");
  topiclab::io::atomic_write_text(rep_json, topiclab::io::to_json(report).dump(2) + "\n");
  note_output(outcome, c_csv);
  note_output(outcome, w_csv);
  note_output(outcome, rep_json);
  return outcome;
}

// --------------------------------------------------------------------------
// check-ss

CommandOutcome run_check_ss(const json& args, const std::string& out_dir, int threads) {
  CommandOutcome outcome;
  const std::string weights_path = args.at("weights").get<std::string>();
  note_input(outcome, weights_path);
  topiclab::MixingMatrix w;
  w.m = topiclab::io::read_matrix_csv(weights_path);

  const int samples = args.at("samples").get<int>();
  const std::uint64_t seed = args.at("seed").get<std::uint64_t>();
  const double tol = args.at("tol").get<double>();

  topiclab::scatter::ScatterVerdict verdict;
  if (args.at("alpha").is_null()) {
    verdict = topiclab::scatter::check_ss(w, samples, tol, seed, threads);
  } else {
    const double alpha = args.at("alpha").get<double>();
    const double beta = args.at("beta").get<double>();
    verdict = topiclab::scatter::check_alpha_beta_ss(w, alpha, beta, samples, seed, tol, threads);
  }

  ensure_out_dir(out_dir);
  const std::string out = join_path(out_dir, "scatter_verdict.json");
  topiclab::io::atomic_write_text(out, topiclab::io::to_json(verdict).dump(2) + "\n");
  note_output(outcome, out);
  return outcome;
}

// --------------------------------------------------------------------------
// evaluate

CommandOutcome run_evaluate(const json& args, const std::string& out_dir) {
  CommandOutcome outcome;
  const std::string c_path = args.at("topics").get<std::string>();
  note_input(outcome, c_path);
  const topiclab::Matrix c = topiclab::io::read_matrix_csv(c_path);

  const auto metrics = args.at("metrics").get<std::vector<std::string>>();
  if (metrics.empty()) throw topiclab::UsageError("evaluate: --metrics must name at least one metric");

  std::optional<topiclab::Matrix> ref;
  if (!args.at("ref").is_null()) {
    note_input(outcome, args.at("ref").get<std::string>());
    ref = topiclab::io::read_matrix_csv(args.at("ref").get<std::string>());
  }
  std::optional<topiclab::Corpus> corpus;
  if (!args.at("corpus").is_null()) {
    note_input(outcome, args.at("corpus").get<std::string>());
    corpus = load_corpus_arg(args.at("corpus").get<std::string>());
  }
  std::optional<topiclab::Matrix> weights;
  if (!args.at("weights").is_null()) {
    note_input(outcome, args.at("weights").get<std::string>());
    weights = topiclab::io::read_matrix_csv(args.at("weights").get<std::string>());
  }

  const int top_words = args.at("top_words").get<int>();
  const double epsilon = args.at("epsilon").get<double>();
  const int rrmse_draws = args.at("rrmse_draws").get<int>();
  const std::uint64_t seed = args.at("seed").get<std::uint64_t>();
  const bool include_coeff = args.at("include_coeff").get<bool>();

  ensure_out_dir(out_dir);
  auto emit = [&](const topiclab::evaluation::MetricReport& rep, const std::string& name) {
    const std::string path = join_path(out_dir, name + ".json");
    topiclab::io::atomic_write_text(path, topiclab::io::to_json(rep).dump(2) + "\n");
    note_output(outcome, path);
  };

  for (const auto& metric : metrics) {
    if (metric == "dis" || metric == "frob") {
      if (!ref)
        throw topiclab::UsageError("evaluate: metric '" + metric + "' needs --ref");
      const auto pd = metric == "dis" ? topiclab::evaluation::topic_distance(*ref, c)
                                      : topiclab::evaluation::frobenius_assignment_distance(*ref, c);
      topiclab::evaluation::MetricReport rep;
      rep.name = metric == "dis" ? "topic_distance" : "frobenius_assignment_distance";
      rep.value = pd.distance;
      rep.params["k"] = static_cast<double>(c.cols());
      rep.details.assign(pd.permutation.begin(), pd.permutation.end());
      emit(rep, metric);
    } else if (metric == "relative-rmse") {
      if (!ref) throw topiclab::UsageError("evaluate: metric 'relative-rmse' needs --ref");
      topiclab::evaluation::MetricReport rep;
      rep.name = "relative_rmse";
      rep.value = topiclab::evaluation::relative_rmse(c, *ref, rrmse_draws, seed);
      rep.params["reference_draws"] = rrmse_draws;
      rep.params["seed"] = static_cast<double>(seed);
      emit(rep, "relative_rmse");
    } else if (metric == "coherence") {
      if (!corpus) throw topiclab::UsageError("evaluate: metric 'coherence' needs --corpus");
      emit(topiclab::evaluation::topic_coherence(c, *corpus, top_words, epsilon), "coherence");
    } else if (metric == "similarity") {
      emit(topiclab::evaluation::similarity_count(c, top_words), "similarity");
    } else if (metric == "perplexity") {
      if (!corpus || !weights)
        throw topiclab::UsageError("evaluate: metric 'perplexity' needs --corpus and --weights");
      emit(topiclab::evaluation::perplexity(c, *weights, *corpus, include_coeff), "perplexity");
    } else {
      throw topiclab::UsageError("evaluate: unknown metric '" + metric + "'");
    }
  }
  return outcome;
}

// --------------------------------------------------------------------------
// select-k

CommandOutcome run_select_k(const json& args, const std::string& out_dir) {
  CommandOutcome outcome;
  const std::string corpus_path = args.at("corpus").get<std::string>();
  note_input(outcome, corpus_path);
  const topiclab::Corpus corpus = load_corpus_arg(corpus_path);

  int max_k = args.at("max_k").get<int>();
  const int cap = static_cast<int>(std::min<std::int64_t>(corpus.vocab_size, corpus.num_docs));
  if (max_k < 1) throw topiclab::UsageError("select-k: --max-k must be positive");
  if (max_k > cap) {
    std::cerr << "warning: --max-k " << max_k << " exceeds min(V, d) = " << cap << "; clipping\n";
    max_k = cap;
  }
  const auto rep = topiclab::evaluation::singular_spectrum(corpus, max_k);

  ensure_out_dir(out_dir);
  const std::string jpath = join_path(out_dir, "spectrum.json");
  topiclab::io::atomic_write_text(jpath, topiclab::io::to_json(rep).dump(2) + "\n");
  const std::string cpath = join_path(out_dir, "spectrum.csv");
  {
    std::ostringstream body;
    body << "index,singular_value\n";
    for (std::size_t j = 0; j < rep.singular_values.size(); ++j) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", rep.singular_values[j]);
      body << (j + 1) << "," << buf << "\n";
    }
    topiclab::io::atomic_write_text(cpath, body.str());
  }
  note_output(outcome, jpath);
  note_output(outcome, cpath);
  return outcome;
}

// --------------------------------------------------------------------------
// intlik-sweep

struct Candidate {
  std::string label;
  double param_c = std::numeric_limits<double>::quiet_NaN();
  topiclab::Matrix matrix;
};

std::vector<Candidate> load_candidate_family(const std::string& path,
                                             CommandOutcome& outcome) {
  std::ifstream in(path);
  if (!in) throw topiclab::IoError("cannot open candidate family file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw topiclab::IoError("candidate family parse error: " + std::string(e.what()));
  }
  if (!j.contains("candidates") || !j.at("candidates").is_array() || j.at("candidates").empty())
    throw topiclab::UsageError("candidate family file lists no candidates");

  std::vector<Candidate> out;
  for (const auto& item : j.at("candidates")) {
    Candidate cand;
    cand.label = item.value("label", "candidate_" + std::to_string(out.size()));
    if (item.contains("matrix_csv")) {
      const auto mpath = item.at("matrix_csv").get<std::string>();
      note_input(outcome, mpath);
      cand.matrix = topiclab::io::read_matrix_csv(mpath);
    } else if (item.contains("symmetric_c")) {
      // A(c): c on the diagonal, (1-c)/2 elsewhere; `stack` repeats the block
      // vertically with weight 1/stack so V = stack * k.
      const double cval = item.at("symmetric_c").get<double>();
      const int k = item.value("k", 3);
      const int stack = item.value("stack", 1);
      if (k < 2 || stack < 1)
        throw topiclab::UsageError("candidate family: symmetric_c needs k >= 2, stack >= 1");
      topiclab::Matrix a =
          topiclab::Matrix::Constant(k, k, (1.0 - cval) / static_cast<double>(k - 1));
      for (int i = 0; i < k; ++i) a(i, i) = cval;
      topiclab::Matrix c(k * stack, k);
      for (int s = 0; s < stack; ++s)
        c.middleRows(s * k, k) = a / static_cast<double>(stack);
      cand.param_c = cval;
      cand.matrix = c;
    } else {
      throw topiclab::UsageError("candidate family entries need matrix_csv or symmetric_c");
    }
    out.push_back(std::move(cand));
  }
  return out;
}

CommandOutcome run_intlik_sweep(const json& args, const std::string& out_dir) {
  CommandOutcome outcome;
  const std::string corpus_path = args.at("corpus").get<std::string>();
  note_input(outcome, corpus_path);
  const topiclab::Corpus corpus = load_corpus_arg(corpus_path);
  const auto candidates = load_candidate_family(args.at("family").get<std::string>(), outcome);
  note_input(outcome, args.at("family").get<std::string>());

  const int T = args.at("T").get<int>();
  const std::uint64_t seed = args.at("seed").get<std::uint64_t>();
  const bool include_coeff = args.at("include_coeff").get<bool>();
  const int batches = args.at("batches").get<int>();
  if (T < 1) throw topiclab::UsageError("intlik-sweep: --T must be positive");
  if (batches < 1 || batches > T)
    throw topiclab::UsageError("intlik-sweep: --batches must lie in [1, T]");

  const topiclab::Index k = candidates.front().matrix.cols();
  for (const auto& cand : candidates)
    if (cand.matrix.cols() != k)
      throw topiclab::UsageError("intlik-sweep: all candidates must share the same k");
  // Common random numbers across the whole sweep.
  const topiclab::Matrix w_samples = topiclab::draw_uniform_weight_samples(
      static_cast<std::int32_t>(k), T, seed);

  std::ostringstream body;
  body << "label,param_c,loglik,mc_se\n";
  for (const auto& cand : candidates) {
    topiclab::TopicMatrix cm{cand.matrix};
    const double loglik =
        topiclab::integrated_loglik_mc_with_samples(cm, corpus, w_samples, include_coeff);
    double mc_se = 0.0;
    if (batches > 1) {
      // Batch-mean standard error of the estimate.
      std::vector<double> batch_vals;
      const int per = T / batches;
      for (int b = 0; b < batches; ++b) {
        const int lo = b * per;
        const int len = (b + 1 == batches) ? T - lo : per;
        batch_vals.push_back(topiclab::integrated_loglik_mc_with_samples(
            cm, corpus, w_samples.middleCols(lo, len), include_coeff));
      }
      double mean = 0.0;
      for (double v : batch_vals) mean += v;
      mean /= static_cast<double>(batch_vals.size());
      double var = 0.0;
      for (double v : batch_vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(batch_vals.size() - 1);
      mc_se = std::sqrt(var / static_cast<double>(batch_vals.size()));
    }
    char lbuf[40], sbuf[40], cbuf[40];
    std::snprintf(lbuf, sizeof(lbuf), "%.17g", loglik);
    std::snprintf(sbuf, sizeof(sbuf), "%.17g", mc_se);
    if (std::isnan(cand.param_c))
      std::snprintf(cbuf, sizeof(cbuf), "%s", "");
    else
      std::snprintf(cbuf, sizeof(cbuf), "%.17g", cand.param_c);
    body << cand.label << "," << cbuf << "," << lbuf << "," << sbuf << "\n";
  }

  ensure_out_dir(out_dir);
  const std::string cpath = join_path(out_dir, "intlik.csv");
  topiclab::io::atomic_write_text(cpath, body.str());
  note_output(outcome, cpath);
  return outcome;
}

// --------------------------------------------------------------------------

CommandOutcome dispatch(const std::string& command, const json& args, const std::string& out_dir,
                        int threads) {
  if (command == "generate") return run_generate(args, out_dir);
  if (command == "fit") return run_fit(args, out_dir, threads);
  if (command == "check-ss") return run_check_ss(args, out_dir, threads);
  if (command == "evaluate") return run_evaluate(args, out_dir);
  if (command == "select-k") return run_select_k(args, out_dir);
  if (command == "intlik-sweep") return run_intlik_sweep(args, out_dir);
  throw topiclab::UsageError("unknown command in manifest: " + command);
}

int run_and_write_manifest(const std::string& command, const json& args,
                           const std::string& out_dir, int threads) {
  const auto start = std::chrono::steady_clock::now();
  const CommandOutcome outcome = dispatch(command, args, out_dir, threads);
  const auto stop = std::chrono::steady_clock::now();

  topiclab::io::RunManifest manifest;
  manifest.command = command;
  manifest.resolved_args = args;
  manifest.resolved_args["threads"] = threads;
  manifest.seed = args.contains("seed") && !args.at("seed").is_null()
                      ? args.at("seed").get<std::uint64_t>()
                      : 0;
  manifest.inputs = outcome.inputs;
  manifest.outputs = outcome.outputs;
  manifest.duration_seconds = std::chrono::duration<double>(stop - start).count();
  topiclab::io::write_manifest(manifest, join_path(out_dir, "manifest.json"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topiclab: integrated-likelihood topic model learning toolkit"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  int threads = 1;
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (never affects results)")
      ->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic corpus from a spec file");
  gen->fallthrough();
  std::string gen_spec;
  std::int64_t gen_seed = -1;
  gen->add_option("spec", gen_spec, "synthetic spec file")->required();
  gen->add_option("--seed", gen_seed, "override the seed in the spec file");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a topic matrix by MCMC-EM");
  fit->fallthrough();
  std::string fit_corpus;
  int fit_k = 0, fit_em = 200, fit_T = 100, fit_b = 0, fit_restarts = 1;
  double fit_tol = 1e-9;
  std::uint64_t fit_seed = 0;
  std::vector<double> fit_beta0{1.0};
  fit->add_option("corpus", fit_corpus, "UCI bag-of-words corpus")->required();
  fit->add_option("--k", fit_k, "number of topics")->required();
  fit->add_option("--em-iters", fit_em, "maximum EM iterations")->capture_default_str();
  fit->add_option("--mcmc-samples", fit_T, "MCMC samples per EM iteration")->capture_default_str();
  fit->add_option("--burn-in", fit_b, "burn-in MCMC sweeps")->capture_default_str();
  fit->add_option("--tol", fit_tol, "relative log-likelihood stopping tolerance")
      ->capture_default_str();
  fit->add_option("--restarts", fit_restarts, "independent restarts")->capture_default_str();
  fit->add_option("--seed", fit_seed, "master seed")->capture_default_str();
  fit->add_option("--beta0", fit_beta0, "weight prior (scalar or k values)")->expected(-1);

  // check-ss
  auto* ss = app.add_subcommand("check-ss", "randomized sufficiently-scattered check");
  ss->fallthrough();
  std::string ss_weights;
  int ss_samples = 1000;
  std::uint64_t ss_seed = 0;
  double ss_tol = 1e-8;
  double ss_alpha = -1.0, ss_beta = -1.0;
  bool ss_have_alpha = false;
  ss->add_option("weights", ss_weights, "mixing matrix CSV (k rows x d columns)")->required();
  ss->add_option("--samples", ss_samples, "points sampled")->capture_default_str();
  ss->add_option("--seed", ss_seed, "master seed")->capture_default_str();
  ss->add_option("--tol", ss_tol, "membership tolerance")->capture_default_str();
  auto* alpha_opt = ss->add_option("--alpha", ss_alpha, "noise level for the (alpha,beta)-SS check");
  ss->add_option("--beta", ss_beta, "vertex sensitivity for the (alpha,beta)-SS check")
      ->needs(alpha_opt);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "metrics for an estimated topic matrix");
  ev->fallthrough();
  std::string ev_topics, ev_ref, ev_corpus, ev_weights;
  std::vector<std::string> ev_metrics;
  int ev_top_words = 20, ev_rrmse_draws = 200;
  double ev_epsilon = 1e-12;
  std::uint64_t ev_seed = 0;
  bool ev_include_coeff = false;
  ev->add_option("topics", ev_topics, "topic matrix CSV (V rows x k columns)")->required();
  ev->add_option("--ref", ev_ref, "reference topic matrix CSV");
  ev->add_option("--corpus", ev_corpus, "UCI bag-of-words corpus");
  ev->add_option("--weights", ev_weights, "mixing matrix CSV (for perplexity)");
  ev->add_option("--metrics", ev_metrics,
                 "comma-separated: dis,frob,relative-rmse,coherence,similarity,perplexity")
      ->required()
      ->delimiter(',');
  ev->add_option("--top-words", ev_top_words, "top words per topic")->capture_default_str();
  ev->add_option("--epsilon", ev_epsilon, "coherence epsilon")->capture_default_str();
  ev->add_option("--rrmse-draws", ev_rrmse_draws, "random-guess draws for relative RMSE")
      ->capture_default_str();
  ev->add_option("--seed", ev_seed, "seed for randomized metrics")->capture_default_str();
  ev->add_flag("--include-coeff", ev_include_coeff,
               "include multinomial coefficients in perplexity");

  // select-k
  auto* sk = app.add_subcommand("select-k", "singular spectrum of the empirical frequencies");
  sk->fallthrough();
  std::string sk_corpus;
  int sk_max_k = 20;
  sk->add_option("corpus", sk_corpus, "UCI bag-of-words corpus")->required();
  sk->add_option("--max-k", sk_max_k, "number of singular values to report")
      ->capture_default_str();

  // intlik-sweep
  auto* sweep = app.add_subcommand("intlik-sweep",
                                   "Monte-Carlo integrated likelihood over a candidate family");
  sweep->fallthrough();
  std::string sweep_corpus, sweep_family;
  int sweep_T = 10000, sweep_batches = 10;
  std::uint64_t sweep_seed = 0;
  bool sweep_no_coeff = false;
  sweep->add_option("corpus", sweep_corpus, "UCI bag-of-words corpus")->required();
  sweep->add_option("family", sweep_family, "candidate family JSON file")->required();
  sweep->add_option("--T", sweep_T, "Monte-Carlo samples")->capture_default_str();
  sweep->add_option("--seed", sweep_seed, "master seed")->capture_default_str();
  sweep->add_option("--batches", sweep_batches, "batches for the MC standard error")
      ->capture_default_str();
  sweep->add_flag("--no-coeff", sweep_no_coeff, "drop multinomial coefficient terms");

  // rerun
  auto* rerun = app.add_subcommand("rerun", "replay a command from its manifest");
  rerun->fallthrough();
  std::string rerun_manifest;
  rerun->add_option("manifest", rerun_manifest, "manifest.json of a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    json args;
    std::string command;
    if (gen->parsed()) {
      command = "generate";
      args["spec"] = gen_spec;
      if (gen_seed >= 0)
        args["seed"] = static_cast<std::uint64_t>(gen_seed);
      else
        args["seed"] = nullptr;
    } else if (fit->parsed()) {
      command = "fit";
      args["corpus"] = fit_corpus;
      args["k"] = fit_k;
      args["em_iters"] = fit_em;
      args["mcmc_samples"] = fit_T;
      args["burn_in"] = fit_b;
      args["tol"] = fit_tol;
      args["restarts"] = fit_restarts;
      args["seed"] = fit_seed;
      args["beta0"] = fit_beta0;
    } else if (ss->parsed()) {
      command = "check-ss";
      args["weights"] = ss_weights;
      args["samples"] = ss_samples;
      args["seed"] = ss_seed;
      args["tol"] = ss_tol;
      ss_have_alpha = alpha_opt->count() > 0;
      if (ss_have_alpha) {
        if (ss_beta < 0.0)
          throw topiclab::UsageError("check-ss: --alpha requires --beta");
        args["alpha"] = ss_alpha;
        args["beta"] = ss_beta;
      } else {
        args["alpha"] = nullptr;
        args["beta"] = nullptr;
      }
    } else if (ev->parsed()) {
      command = "evaluate";
      args["topics"] = ev_topics;
      args["metrics"] = ev_metrics;
      args["ref"] = ev_ref.empty() ? json(nullptr) : json(ev_ref);
      args["corpus"] = ev_corpus.empty() ? json(nullptr) : json(ev_corpus);
      args["weights"] = ev_weights.empty() ? json(nullptr) : json(ev_weights);
      args["top_words"] = ev_top_words;
      args["epsilon"] = ev_epsilon;
      args["rrmse_draws"] = ev_rrmse_draws;
      args["seed"] = ev_seed;
      args["include_coeff"] = ev_include_coeff;
    } else if (sk->parsed()) {
      command = "select-k";
      args["corpus"] = sk_corpus;
      args["max_k"] = sk_max_k;
    } else if (sweep->parsed()) {
      command = "intlik-sweep";
      args["corpus"] = sweep_corpus;
      args["family"] = sweep_family;
      args["T"] = sweep_T;
      args["seed"] = sweep_seed;
      args["include_coeff"] = !sweep_no_coeff;
      args["batches"] = sweep_batches;
    } else if (rerun->parsed()) {
      const auto manifest = topiclab::io::read_manifest(rerun_manifest);
      json margs = manifest.resolved_args;
      margs.erase("threads");
      return run_and_write_manifest(manifest.command, margs, out_dir, threads);
    }
    return run_and_write_manifest(command, args, out_dir, threads);
  } catch (const topiclab::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const topiclab::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const topiclab::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
