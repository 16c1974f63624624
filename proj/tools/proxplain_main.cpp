// proxplain command-line front end.
//
//   proxplain explain  --corpus PATH [options] "text ..." | --input FILE
//   proxplain evaluate --corpus PATH --test FILE [options]
//   proxplain gen-corpus --count N --seed N [--out PATH]

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "proxplain/proxplain.hpp"

namespace {

using namespace proxplain;
using report::Json;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct RunOptions {
  std::string backend = "toy";
  std::string bridge_cmd;
  std::string corpus_path;
  std::string lexicon_path;
  std::string decoder = "greedy";
  std::string context_corpus_path;
  std::size_t dim = 64;
  std::uint64_t embedding_seed = 17;
  std::optional<std::uint64_t> seed;
  ExplainerConfig explainer;
  EvaluationConfig evaluation;
  std::string out_path;
  bool pretty = false;
  std::size_t jobs = 1;
  double timeout_s = 30.0;
};

// Models and corpus of one connection (toy: shared by every worker).
struct Backend {
  std::shared_ptr<const Encoder> encoder;
  std::shared_ptr<const Decoder> decoder;
  std::shared_ptr<const BlackBox> black_box;
  Corpus corpus;

  Models models() const { return {*encoder, *decoder, *black_box}; }
};

std::shared_ptr<Backend> make_toy_backend(const RunOptions& o, std::vector<TokenSequence> texts) {
  auto lexicon = o.lexicon_path.empty() ? toy::default_lexicon() : toy::read_lexicon(o.lexicon_path);
  auto table = std::make_shared<toy::EmbeddingTable>(o.dim, o.embedding_seed, lexicon);
  auto b = std::make_shared<Backend>();
  b->encoder = std::make_shared<toy::MeanEmbeddingEncoder>(table);
  b->black_box = std::make_shared<toy::LexiconBlackBox>(std::move(lexicon));
  b->corpus = Corpus::build(std::move(texts), *b->encoder, *b->black_box);
  if (o.decoder == "greedy") {
    b->decoder = std::make_shared<toy::GreedyBagOfWordsDecoder>(table, b->corpus.vocabulary());
  } else {
    b->decoder = std::make_shared<toy::CorpusNearestDecoder>(b->corpus);
  }
  return b;
}

std::shared_ptr<Backend> make_bridge_backend(const RunOptions& o, std::vector<TokenSequence> texts) {
  auto transport = std::make_unique<bridge::ChildProcessTransport>(o.bridge_cmd);
  auto client = std::make_shared<bridge::BridgeClient>(
      std::move(transport), std::chrono::milliseconds(static_cast<long long>(o.timeout_s * 1000.0)));
  const auto info = client->handshake();
  if (!info.deterministic) {
    std::cerr << "note: model server decoder is non-deterministic; repeated decodes may differ\n";
  }
  auto b = std::make_shared<Backend>();
  b->encoder = std::make_shared<bridge::BridgeEncoder>(client);
  b->decoder = std::make_shared<bridge::BridgeDecoder>(client);
  b->black_box = std::make_shared<bridge::BridgeBlackBox>(client);
  b->corpus = Corpus::build(std::move(texts), *b->encoder, *b->black_box);
  return b;
}

// One backend per worker thread. Toy models are read-only and shared; each
// bridge worker gets its own server process.
class BackendPool {
 public:
  BackendPool(const RunOptions& o, std::vector<TokenSequence> corpus_texts)
      : options_(o), texts_(std::move(corpus_texts)) {
    if (o.backend == "toy") shared_ = make_toy_backend(o, texts_);
  }

  Backend& local() {
    if (shared_) return *shared_;
    std::lock_guard lock(mutex_);
    auto& slot = per_thread_[std::this_thread::get_id()];
    if (!slot) slot = make_bridge_backend(options_, texts_);
    return *slot;
  }

 private:
  const RunOptions& options_;
  std::vector<TokenSequence> texts_;
  std::shared_ptr<Backend> shared_;
  std::mutex mutex_;
  std::unordered_map<std::thread::id, std::shared_ptr<Backend>> per_thread_;
};

// Routes calls to the calling thread's backend.
class PooledBlackBox final : public BlackBox {
 public:
  explicit PooledBlackBox(BackendPool& pool) : pool_(pool) {}
  ConfidenceVector predict(const TokenSequence& t) const override { return pool_.local().black_box->predict(t); }
  std::vector<ConfidenceVector> predict_batch(std::span<const TokenSequence> t) const override {
    return pool_.local().black_box->predict_batch(t);
  }

 private:
  BackendPool& pool_;
};

void add_run_options(CLI::App& cmd, RunOptions& o) {
  cmd.add_option("--backend", o.backend, "Model backend")->check(CLI::IsMember({"toy", "bridge"}));
  cmd.add_option("--bridge-cmd", o.bridge_cmd, "Command that starts a model server (bridge backend)");
  cmd.add_option("--corpus", o.corpus_path, "Corpus file, one pre-tokenized text per line")->required();
  cmd.add_option("--lexicon", o.lexicon_path, "Lexicon for the toy black box (token<TAB>weight)");
  cmd.add_option("--decoder", o.decoder, "Toy decoder")->check(CLI::IsMember({"nn", "greedy"}));
  cmd.add_option("--dim", o.dim, "Toy latent dimension")->check(CLI::PositiveNumber);
  cmd.add_option("--embedding-seed", o.embedding_seed, "Toy embedding table seed");
  cmd.add_option("--seed", o.seed, "Random seed (falls back to PROXPLAIN_SEED)");
  cmd.add_option("--s", o.explainer.neighborhood.s, "Interpolation steps")->check(CLI::PositiveNumber);
  cmd.add_option("--k", o.explainer.neighborhood.k, "Landmark count")->check(CLI::PositiveNumber);
  cmd.add_option("--n", o.explainer.neighborhood.n, "Neighbors kept per class")->check(CLI::PositiveNumber);
  cmd.add_option("--max-iterations", o.explainer.neighborhood.max_iterations)->check(CLI::PositiveNumber);
  cmd.add_option("--patience", o.explainer.neighborhood.patience)->check(CLI::PositiveNumber);
  cmd.add_option("--sigma", o.explainer.surrogate.kernel_width, "Kernel width")->check(CLI::PositiveNumber);
  cmd.add_option("--ridge", o.explainer.surrogate.ridge)->check(CLI::NonNegativeNumber);
  cmd.add_option("--lambda", o.explainer.exemplars.lambda, "Exemplar diversity weight")->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--set-size", o.explainer.exemplars.set_size)->check(CLI::PositiveNumber);
  cmd.add_option("--eta", o.explainer.eta, "Importance threshold")->check(CLI::PositiveNumber);
  cmd.add_option("--edition-cap", o.explainer.edition_cap);
  cmd.add_option("--window", o.explainer.context_window, "Context window l")->check(CLI::PositiveNumber);
  cmd.add_option("--context-corpus", o.context_corpus_path,
                 "Estimate the edition context model on this file instead of the neighborhood");
  cmd.add_option("--out", o.out_path, "Output file (default stdout)");
  cmd.add_flag("--pretty", o.pretty, "Human-readable output");
  cmd.add_option("--jobs", o.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  cmd.add_option("--timeout", o.timeout_s, "Bridge response timeout in seconds")->check(CLI::PositiveNumber);
}

std::uint64_t resolve_seed(const RunOptions& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("PROXPLAIN_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("PROXPLAIN_SEED is not an unsigned integer: ") + env);
    }
  }
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << seed << "\n";
  return seed;
}

void validate(const RunOptions& o) {
  if (o.backend == "bridge" && o.bridge_cmd.empty()) throw InvalidArgument("--backend bridge requires --bridge-cmd");
  o.explainer.validate();
}

std::vector<TokenSequence> load_corpus_texts(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InvalidArgument("corpus file not found: " + path);
  auto texts = read_token_lines(path);
  if (texts.empty()) throw InvalidArgument("corpus file is empty: " + path);
  return texts;
}

std::shared_ptr<const ContextModel> load_context_model(const RunOptions& o) {
  if (o.context_corpus_path.empty()) return nullptr;
  if (!std::filesystem::exists(o.context_corpus_path)) {
    throw InvalidArgument("context corpus file not found: " + o.context_corpus_path);
  }
  auto ctx = std::make_shared<ContextModel>(o.explainer.context_window, o.explainer.epsilon);
  for (const auto& t : read_token_lines(o.context_corpus_path)) ctx->add(t);
  return ctx;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw InvalidArgument("cannot write output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

Json provenance_extra(const RunOptions& o, std::uint64_t run_seed, std::size_t index) {
  Json j;
  j["run_seed"] = run_seed;
  j["index"] = index;
  j["backend"] = o.backend;
  if (o.backend == "toy") {
    j["decoder"] = o.decoder;
    j["dim"] = o.dim;
    j["embedding_seed"] = o.embedding_seed;
    j["lexicon"] = o.lexicon_path.empty() ? std::string("builtin") : o.lexicon_path;
  } else {
    j["bridge_cmd"] = o.bridge_cmd;
  }
  j["corpus"] = o.corpus_path;
  if (!o.context_corpus_path.empty()) j["context_corpus"] = o.context_corpus_path;
  return j;
}

int run_explain(const RunOptions& o, const std::vector<std::string>& texts, const std::string& input_path) {
  validate(o);
  std::vector<TokenSequence> inputs;
  if (!input_path.empty()) {
    if (!std::filesystem::exists(input_path)) throw InvalidArgument("input file not found: " + input_path);
    inputs = read_token_lines(input_path);
  }
  for (const auto& t : texts) inputs.push_back(TokenSequence::parse(t));
  if (inputs.empty()) throw InvalidArgument("nothing to explain: give a text or --input FILE");

  auto corpus_texts = load_corpus_texts(o.corpus_path);
  const auto context = load_context_model(o);
  const std::uint64_t seed = resolve_seed(o);
  Output out(o.out_path);
  BackendPool pool(o, std::move(corpus_texts));

  std::vector<std::string> records(inputs.size());
  std::vector<bool> failed(inputs.size(), false);
  auto run_one = [&](std::size_t i) {
    // Instance i runs with seed + i, recorded as provenance.seed.
    const std::uint64_t instance_seed = seed + i;
    try {
      if (inputs[i].empty()) throw InvalidArgument("empty input text");
      Backend& b = pool.local();
      const auto ex = explain(inputs[i], b.corpus, b.models(), o.explainer, instance_seed, context);
      records[i] = o.pretty ? report::pretty(ex) : report::explanation_json(ex, provenance_extra(o, seed, i)).dump();
    } catch (const Error& e) {
      failed[i] = true;
      records[i] = o.pretty ? "error: " + std::string(e.what()) + "\n" : report::error_json(inputs[i], e.what()).dump();
    }
  };

  const std::size_t jobs = std::min(o.jobs, inputs.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  auto& os = out.stream();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    os << records[i];
    if (!o.pretty) os << '\n';
    else if (i + 1 < records.size()) os << '\n';
    failures += failed[i] ? 1 : 0;
  }
  os.flush();
  if (failures > 0) {
    std::cerr << failures << " of " << records.size() << " inputs failed\n";
    return kExitPartial;
  }
  return kExitOk;
}

int run_evaluate(RunOptions o, const std::string& test_path) {
  validate(o);
  o.evaluation.eta = o.explainer.eta;
  o.evaluation.validate();
  if (!std::filesystem::exists(test_path)) throw InvalidArgument("test file not found: " + test_path);
  const auto tests = read_token_lines(test_path);
  if (tests.empty()) throw InvalidArgument("test file is empty: " + test_path);

  auto corpus_texts = load_corpus_texts(o.corpus_path);
  const auto context = load_context_model(o);
  o.evaluation.seed = resolve_seed(o);
  Output out(o.out_path);
  BackendPool pool(o, std::move(corpus_texts));

  const auto vocabulary = pool.local().corpus.vocabulary();
  PooledBlackBox black_box(pool);
  BaselineEditor baseline(black_box, vocabulary, o.evaluation.strong_word_count, o.evaluation.baseline_max_drops);
  ExplainFn explainer = [&](const TokenSequence& q, std::uint64_t seed) {
    Backend& b = pool.local();
    return explain(q, b.corpus, b.models(), o.explainer, seed, context);
  };
  const auto rep = evaluate(tests, explainer, black_box, baseline, o.evaluation, o.jobs);

  Json header;
  header["backend"] = o.backend;
  header["corpus"] = o.corpus_path;
  header["test_file"] = test_path;
  if (!o.context_corpus_path.empty()) header["context_corpus"] = o.context_corpus_path;
  header["config"] = report::config_json(o.explainer);
  auto& os = out.stream();
  if (o.pretty) {
    char buf[160];
    os << "eta " << rep.config.eta << ", eta_high " << rep.config.eta_high << ", seed " << rep.config.seed << "\n";
    std::snprintf(buf, sizeof buf, "%-9s %-18s %-18s %s\n", "method", "completeness", "compactness", "correctness");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-9s %.3f +- %.3f      %.3f +- %.3f      %+.3f\n", "guided",
                  rep.guided.completeness.mean, rep.guided.completeness.stddev, rep.guided.compactness.mean,
                  rep.guided.compactness.stddev, rep.correctness);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-9s %.3f +- %.3f      %.3f +- %.3f      /\n", "baseline",
                  rep.baseline.completeness.mean, rep.baseline.completeness.stddev, rep.baseline.compactness.mean,
                  rep.baseline.compactness.stddev);
    os << buf;
    os << "failures " << rep.failures << " of " << rep.instances.size() << "\n";
  } else {
    os << report::evaluation_json(rep, header).dump(2) << '\n';
  }
  os.flush();
  if (rep.failures > 0) {
    std::cerr << rep.failures << " of " << rep.instances.size() << " instances could not be explained\n";
    return kExitPartial;
  }
  return kExitOk;
}

int run_gen_corpus(std::size_t count, std::uint64_t seed, const std::string& out_path) {
  Output out(out_path);
  auto& os = out.stream();
  for (const auto& t : toy::generate_reviews(count, seed)) os << t.str() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local explanations for text classifiers by progressive neighborhood approximation"};
  app.require_subcommand(1);

  RunOptions explain_opts;
  std::vector<std::string> texts;
  std::string input_path;
  auto* explain_cmd = app.add_subcommand("explain", "Explain the black box's decision on texts");
  add_run_options(*explain_cmd, explain_opts);
  explain_cmd->add_option("--input", input_path, "File of texts, one per line");
  explain_cmd->add_option("text", texts, "Pre-tokenized text(s) to explain");

  RunOptions eval_opts;
  std::string test_path;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the sentence-edition evaluation");
  add_run_options(*eval_cmd, eval_opts);
  eval_cmd->add_option("--test", test_path, "Test file, one text per line")->required();
  eval_cmd->add_option("--eta-high", eval_opts.evaluation.eta_high, "Raised threshold for correctness")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-drops", eval_opts.evaluation.baseline_max_drops, "Baseline: words dropped at most");
  eval_cmd->add_option("--strong-words", eval_opts.evaluation.strong_word_count, "Baseline: strong words per class");

  std::size_t gen_count = 600;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Write a template-generated toy review corpus");
  gen_cmd->add_option("--count", gen_count, "Number of sentences")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  gen_cmd->add_option("--out", gen_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*explain_cmd) return run_explain(explain_opts, texts, input_path);
    if (*eval_cmd) return run_evaluate(eval_opts, test_path);
    if (*gen_cmd) return run_gen_corpus(gen_count, gen_seed, gen_out);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}
