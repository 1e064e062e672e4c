#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>

#include "CLI11.hpp"

#include "bleubound/bleu.hpp"
#include "bleubound/errors.hpp"
#include "bleubound/expected.hpp"
#include "bleubound/grad.hpp"
#include "bleubound/io.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/rng.hpp"
#include "bleubound/text.hpp"
#include "bleubound/trainers.hpp"
#include "report.hpp"

namespace bleubound::cli {
namespace {

constexpr double kGradTolerance = 1e-4;
constexpr const char* kEnumCapVar = "BLEUBOUND_ENUM_CAP";

struct Common {
  std::size_t max_order = 4;
  std::vector<double> weights;
  bool no_bp = false;
  bool smoothing = false;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  unsigned threads = 0;
  std::string output;
  std::string format = "json";

  BleuConfig bleu_config() const {
    BleuConfig cfg;
    cfg.max_order = max_order;
    cfg.weights = weights;
    cfg.use_bp = !no_bp;
    cfg.validate();
    return cfg;
  }
};

void add_bleu_flags(CLI::App* sub, Common& c) {
  sub->add_option("--max-order", c.max_order, "Highest n-gram order N")->check(CLI::PositiveNumber);
  sub->add_option("--weights", c.weights, "Comma-separated order weights (default uniform)")
      ->delimiter(',');
  sub->add_flag("--no-bp", c.no_bp, "Drop the brevity penalty");
}

void add_output_flags(CLI::App* sub, Common& c) {
  sub->add_option("--output,-o", c.output, "Write results to this file instead of stdout");
  sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

void add_run_flags(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random draw (default 0)");
  sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
}

void add_smoothing_flag(CLI::App* sub, Common& c) {
  sub->add_flag("--smoothing,!--no-smoothing", c.smoothing, "Add-one smoothed precisions");
}

std::uint64_t enumeration_cap() {
  const char* raw = std::getenv(kEnumCapVar);
  if (raw == nullptr || *raw == '\0') return kDefaultEnumerationCap;
  const std::string_view text(raw);
  std::uint64_t cap = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
  if (ec != std::errc() || ptr != text.data() + text.size() || cap == 0) {
    throw InvalidConfig(std::string(kEnumCapVar) + " must be a positive integer, got '" + raw + "'");
  }
  return cap;
}

// Results go either to the caller's stream or to --output.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw IoError("cannot open '" + path + "' for writing");
    stream_ = file_.get();
  }
  std::ostream& operator*() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

void emit(const Json& j, const Common& c, std::ostream& out) {
  Sink sink(c.output, out);
  if (c.format == "csv") {
    *sink << csv_header(j) << '\n' << csv_row(j) << '\n';
  } else {
    *sink << j.dump() << '\n';
  }
  sink.finish();
}

// Reference files hold exactly one sentence.
std::string read_reference_line(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != 1) {
    throw ShapeMismatch("reference file '" + path + "' must hold one sentence, found " +
                        std::to_string(lines.size()) + " lines");
  }
  return lines.front();
}

struct LogitsInput {
  std::string logits_path;
  std::string ref_path;
  std::string vocab_path;
  bool header = false;
};

void add_logits_flags(CLI::App* sub, LogitsInput& in) {
  sub->add_option("--logits", in.logits_path, "CSV of logits, one row per position")->required();
  sub->add_option("--ref", in.ref_path, "Reference sentence file")->required();
  sub->add_option("--vocab", in.vocab_path,
                  "Vocabulary file, one token per line; default: reference words in order");
  sub->add_flag("--header", in.header, "The logits CSV starts with a header row");
}

struct LoadedInstance {
  Matrix logits;
  TokenSeq ref;
};

LoadedInstance load_instance(const LogitsInput& in) {
  const std::string ref_line = read_reference_line(in.ref_path);
  const Vocab vocab = in.vocab_path.empty() ? build_vocab({ref_line}) : load_vocab(in.vocab_path);
  LoadedInstance inst;
  inst.ref = encode(ref_line, vocab);
  inst.logits = read_matrix_csv(std::filesystem::path(in.logits_path), in.header);
  if (inst.logits.rows() == 0) throw ShapeMismatch("logits file has no rows");
  if (inst.logits.cols() != vocab.size()) {
    throw ShapeMismatch("logits have " + std::to_string(inst.logits.cols()) +
                        " columns but the vocabulary has " + std::to_string(vocab.size()) +
                        " tokens");
  }
  return inst;
}

// --- bleu -------------------------------------------------------------------

struct BleuArgs {
  Common common;
  std::string cand_path;
  std::string ref_path;
  std::string vocab_out;
};

int cmd_bleu(const BleuArgs& a, std::ostream& out) {
  const BleuConfig cfg = a.common.bleu_config();
  const auto cand_lines = read_lines(a.cand_path);
  const auto ref_lines = read_lines(a.ref_path);
  if (cand_lines.size() != ref_lines.size()) {
    throw ShapeMismatch("line count mismatch: candidate file has " +
                        std::to_string(cand_lines.size()) + " lines, reference file has " +
                        std::to_string(ref_lines.size()));
  }
  std::vector<std::string> all = cand_lines;
  all.insert(all.end(), ref_lines.begin(), ref_lines.end());
  const Vocab vocab = build_vocab(all);
  if (!a.vocab_out.empty()) save_vocab(vocab, std::filesystem::path(a.vocab_out));

  std::vector<std::pair<TokenSeq, TokenSeq>> pairs;
  std::vector<BleuBreakdown> scores;
  for (std::size_t i = 0; i < cand_lines.size(); ++i) {
    pairs.emplace_back(encode(cand_lines[i], vocab), encode(ref_lines[i], vocab));
    try {
      scores.push_back(bleu(pairs.back().first, pairs.back().second, cfg));
    } catch (const EmptyText& e) {
      throw EmptyText("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  const BleuBreakdown corpus = corpus_bleu(pairs, cfg);

  Sink sink(a.common.output, out);
  if (a.common.format == "csv") {
    *sink << "line," << csv_header(to_json(corpus)) << '\n';
    for (std::size_t i = 0; i < scores.size(); ++i) {
      *sink << (i + 1) << ',' << csv_row(to_json(scores[i])) << '\n';
    }
    *sink << "corpus," << csv_row(to_json(corpus)) << '\n';
  } else {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      Json line{{"line", i + 1}};
      line.update(to_json(scores[i]));
      *sink << line.dump() << '\n';
    }
    *sink << Json{{"corpus", to_json(corpus)}}.dump() << '\n';
  }
  sink.finish();
  return kOk;
}

// --- lb ---------------------------------------------------------------------

struct LbArgs {
  Common common;
  LogitsInput input;
};

int cmd_lb(const LbArgs& a, std::ostream& out, std::ostream& err) {
  const BleuConfig cfg = a.common.bleu_config();
  const LoadedInstance inst = load_instance(a.input);
  const LbResult r = lb_bleu(softmax_rows(inst.logits), inst.ref, cfg, a.common.smoothing);
  if (!r.proven_regime) err << "warning: the reference repeats a word; the bound is not proven there\n";
  emit(to_json(r), a.common, out);
  return kOk;
}

// --- expected ---------------------------------------------------------------

struct ExpectedArgs {
  Common common;
  LogitsInput input;
  std::string mode = "mc";
  bool include_bp = false;
};

int cmd_expected(const ExpectedArgs& a, std::ostream& out) {
  const BleuConfig cfg = a.common.bleu_config();
  const LoadedInstance inst = load_instance(a.input);
  const DistMatrix p = softmax_rows(inst.logits);
  OracleOptions opts;
  opts.include_bp = a.include_bp;
  opts.threads = a.common.threads;
  opts.enumeration_cap = enumeration_cap();
  if (a.mode == "exhaustive") {
    emit(to_json(exhaustive_expected_bleu(p, inst.ref, cfg, opts)), a.common, out);
  } else {
    emit(to_json(mc_expected_bleu(p, inst.ref, cfg, a.common.samples, a.common.seed, opts)),
         a.common, out);
  }
  return kOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  Common common;
  GradSuiteOptions suite;
  bool corrupt = false;
};

int cmd_gradcheck(GradcheckArgs a, std::ostream& out, std::ostream& err) {
  a.suite.seed = a.common.seed;
  if (a.corrupt) {
    // Harness self-test: a wrong gradient must be caught.
    a.suite.gradient = [](const Matrix& logits, const TokenSeq& ref, const BleuConfig& cfg,
                          bool smoothing) {
      GradResult g = grad_lb(logits, ref, cfg, smoothing);
      g.grad_logits.flat()[0] += 1e-2;
      return g;
    };
  }
  const GradSuiteReport report = gradient_suite(a.suite);
  emit(to_json(report), a.common, out);
  if (!(report.worst.max_rel_error < kGradTolerance)) {
    err << "gradient check failed: max_rel_error " << report.worst.max_rel_error << " >= "
        << kGradTolerance << '\n';
    return kCheckFailed;
  }
  return kOk;
}

// --- toy --------------------------------------------------------------------

struct ToyArgs {
  Common common;
  std::string config_path;
  ToyConfig cfg;
  std::string optimizer = "adam";
  CLI::App* sub = nullptr;
};

bool given(const CLI::App* sub, const char* name) { return sub->count(name) > 0; }

ToyConfig resolve_toy_config(const ToyArgs& a) {
  ToyConfig cfg;
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw IoError("cannot open toy config '" + a.config_path + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidConfig("toy config '" + a.config_path + "': " + e.what());
    }
    apply_toy_json(j, cfg);
  }
  // Flags given on the command line win over the config file.
  const CLI::App* s = a.sub;
  if (given(s, "--len")) cfg.len = a.cfg.len;
  if (given(s, "--vocab-size")) cfg.vocab_size = a.cfg.vocab_size;
  if (given(s, "--lr")) cfg.learning_rate = a.cfg.learning_rate;
  if (given(s, "--optimizer")) cfg.optimizer = parse_optimizer(a.optimizer);
  if (given(s, "--steps")) cfg.steps = a.cfg.steps;
  if (given(s, "--eval-every")) cfg.eval_every = a.cfg.eval_every;
  if (given(s, "--samples")) cfg.mc_samples = a.common.samples;
  if (given(s, "--seed")) cfg.seed = a.common.seed;
  if (given(s, "--threads")) cfg.threads = a.common.threads;
  if (given(s, "--smoothing")) cfg.smoothing = a.common.smoothing;
  if (given(s, "--allow-duplicate-refs")) cfg.allow_duplicate_refs = a.cfg.allow_duplicate_refs;
  if (given(s, "--max-order")) cfg.bleu.max_order = a.common.max_order;
  if (given(s, "--weights")) cfg.bleu.weights = a.common.weights;
  if (given(s, "--no-bp")) cfg.bleu.use_bp = !a.common.no_bp;
  cfg.validate();
  return cfg;
}

int cmd_toy(const ToyArgs& a, std::ostream& out, std::ostream& err) {
  const ToyConfig cfg = resolve_toy_config(a);
  const ToyRun run = run_toy(cfg);
  const Json summary = to_json(run.summary);
  if (a.common.format == "json") {
    Json curve = Json::array();
    for (const auto& pt : run.curve) {
      curve.push_back(Json{{"step", pt.step},
                           {"lb", pt.lb_aggregate},
                           {"exact_argmax_bleu", pt.exact_bleu_argmax},
                           {"mc_mean", pt.mc_mean},
                           {"mc_stderr", pt.mc_stderr}});
    }
    Sink sink(a.common.output, out);
    *sink << Json{{"config", to_json(cfg)}, {"curve", curve}, {"summary", summary}}.dump() << '\n';
    sink.finish();
    return kOk;
  }
  Sink sink(a.common.output, out);
  write_curve_csv(run.curve, *sink);
  sink.finish();
  // With the curve on stdout the summary moves to stderr.
  (a.common.output.empty() ? err : out) << summary.dump() << '\n';
  return kOk;
}

// --- compare-grad -----------------------------------------------------------

struct CompareArgs {
  Common common;
  std::size_t len = 2;
  std::size_t vocab_size = 2;
  std::size_t ref_len = 0;
  std::string baseline = "none";
  double fd_step = 1e-5;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const BleuConfig cfg = a.common.bleu_config();
  if (a.len == 0 || a.vocab_size == 0) throw InvalidConfig("--len and --vocab-size must be positive");
  const std::uint64_t cap = enumeration_cap();
  count_outcomes(a.len, a.vocab_size, cap);

  Rng rng(derive_seed(a.common.seed, 0));
  Matrix logits(a.len, a.vocab_size);
  for (double& z : logits.flat()) z = rng.normal();
  TokenSeq ref;
  const std::size_t ref_len = a.ref_len == 0 ? a.len : a.ref_len;
  for (std::size_t i = 0; i < ref_len; ++i) ref.ids.push_back(static_cast<TokenId>(rng.below(a.vocab_size)));

  CompareOptions opts;
  opts.sample_counts = {a.common.samples, 4 * a.common.samples, 16 * a.common.samples};
  opts.baseline = a.baseline == "mean" ? BaselineMode::Mean : BaselineMode::None;
  opts.fd_step = a.fd_step;
  opts.enumeration_cap = cap;
  opts.threads = a.common.threads;
  const GradientComparison cmp =
      compare_gradients(logits, ref, cfg, derive_seed(a.common.seed, 1), opts);

  Json instance{{"ref", ref.ids}, {"logits", Json::array()}};
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    instance["logits"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  Json j{{"seed", a.common.seed}, {"instance", instance}};
  j.update(to_json(cmp));
  emit(j, a.common, out);
  return kOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const InstanceTooLarge*>(&e)) return kResourceCap;
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"BLEU, its differentiable lower bound, and gradient checks"};
  app.name("bleubound");
  app.require_subcommand(1, 1);

  BleuArgs bleu_args;
  auto* bleu_cmd = app.add_subcommand("bleu", "Sentence and corpus BLEU for line-aligned files");
  bleu_cmd->add_option("--cand", bleu_args.cand_path, "Candidate file")->required();
  bleu_cmd->add_option("--ref", bleu_args.ref_path, "Reference file")->required();
  bleu_cmd->add_option("--vocab-out", bleu_args.vocab_out, "Also write the vocabulary here");
  add_bleu_flags(bleu_cmd, bleu_args.common);
  add_output_flags(bleu_cmd, bleu_args.common);

  LbArgs lb_args;
  auto* lb_cmd = app.add_subcommand("lb", "Lower bound on expected BLEU for softmax(logits)");
  add_logits_flags(lb_cmd, lb_args.input);
  add_bleu_flags(lb_cmd, lb_args.common);
  add_smoothing_flag(lb_cmd, lb_args.common);
  add_output_flags(lb_cmd, lb_args.common);

  ExpectedArgs exp_args;
  exp_args.common.samples = 10000;
  auto* exp_cmd = app.add_subcommand("expected", "Expected BLEU by sampling or enumeration");
  add_logits_flags(exp_cmd, exp_args.input);
  exp_cmd->add_option("--mode", exp_args.mode, "mc or exhaustive")
      ->check(CLI::IsMember({"mc", "exhaustive"}));
  exp_cmd->add_flag("--include-bp", exp_args.include_bp, "Multiply in the brevity penalty");
  exp_cmd->add_option("--samples", exp_args.common.samples, "Monte-Carlo samples")
      ->check(CLI::PositiveNumber);
  add_bleu_flags(exp_cmd, exp_args.common);
  add_run_flags(exp_cmd, exp_args.common);
  add_output_flags(exp_cmd, exp_args.common);

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the bound gradient");
  gc_cmd->add_option("--instances", gc_args.suite.instances, "Random instances")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--max-len", gc_args.suite.max_len, "Largest candidate length")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--max-vocab", gc_args.suite.max_vocab, "Largest vocabulary")->check(CLI::Range(2, 1 << 20));
  gc_cmd->add_option("--step", gc_args.suite.step, "Central-difference step")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--entries", gc_args.suite.entries, "Logits checked per instance, 0 = all");
  gc_cmd->add_flag("--corrupt-gradient", gc_args.corrupt)->group("");
  add_run_flags(gc_cmd, gc_args.common);
  add_output_flags(gc_cmd, gc_args.common);

  ToyArgs toy_args;
  toy_args.common.smoothing = toy_args.cfg.smoothing;
  toy_args.common.max_order = toy_args.cfg.bleu.max_order;
  toy_args.common.format = "csv";
  auto* toy_cmd = app.add_subcommand("toy", "Optimize random logits against a random reference");
  toy_args.sub = toy_cmd;
  toy_cmd->add_option("--config", toy_args.config_path, "JSON config; flags override it");
  toy_cmd->add_option("--len", toy_args.cfg.len, "Sentence length");
  toy_cmd->add_option("--vocab-size", toy_args.cfg.vocab_size, "Vocabulary size");
  toy_cmd->add_option("--lr", toy_args.cfg.learning_rate, "Learning rate");
  toy_cmd->add_option("--optimizer", toy_args.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}));
  toy_cmd->add_option("--steps", toy_args.cfg.steps, "Optimizer steps");
  toy_cmd->add_option("--eval-every", toy_args.cfg.eval_every, "Steps between curve points");
  toy_cmd->add_option("--samples", toy_args.common.samples, "Monte-Carlo samples per curve point");
  toy_cmd->add_flag("--allow-duplicate-refs", toy_args.cfg.allow_duplicate_refs,
                    "Keep references that repeat a word");
  add_bleu_flags(toy_cmd, toy_args.common);
  add_smoothing_flag(toy_cmd, toy_args.common);
  add_run_flags(toy_cmd, toy_args.common);
  add_output_flags(toy_cmd, toy_args.common);

  CompareArgs cmp_args;
  cmp_args.common.samples = 1000;
  auto* cmp_cmd = app.add_subcommand(
      "compare-grad", "Bound and REINFORCE gradients against the exhaustive gradient");
  cmp_cmd->add_option("--len", cmp_args.len, "Candidate length");
  cmp_cmd->add_option("--vocab-size", cmp_args.vocab_size, "Vocabulary size");
  cmp_cmd->add_option("--ref-len", cmp_args.ref_len, "Reference length (default: --len)");
  cmp_cmd->add_option("--samples", cmp_args.common.samples,
                      "Smallest REINFORCE sample count; 4x and 16x are also run")
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--baseline", cmp_args.baseline, "none or mean")
      ->check(CLI::IsMember({"none", "mean"}));
  cmp_cmd->add_option("--fd-step", cmp_args.fd_step, "Central-difference step")->check(CLI::PositiveNumber);
  add_bleu_flags(cmp_cmd, cmp_args.common);
  add_run_flags(cmp_cmd, cmp_args.common);
  add_output_flags(cmp_cmd, cmp_args.common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*bleu_cmd) return cmd_bleu(bleu_args, out);
    if (*lb_cmd) return cmd_lb(lb_args, out, err);
    if (*exp_cmd) return cmd_expected(exp_args, out);
    if (*gc_cmd) return cmd_gradcheck(gc_args, out, err);
    if (*toy_cmd) return cmd_toy(toy_args, out, err);
    if (*cmp_cmd) return cmd_compare(cmp_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace bleubound::cli
