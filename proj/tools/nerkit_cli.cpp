// nerkit: corpus statistics, splitting, augmentation, training, prediction,
// ensembling, evaluation and gradient checks from one binary.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nerkit/augment.hpp"
#include "nerkit/corpus.hpp"
#include "nerkit/ensemble.hpp"
#include "nerkit/error.hpp"
#include "nerkit/eval.hpp"
#include "nerkit/gradcheck_suite.hpp"
#include "nerkit/prediction.hpp"
#include "nerkit/tagger.hpp"

using namespace nerkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitIo = 2;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// First non-blank, non-comment line's column count.
std::size_t first_line_columns(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first) || first == "#") continue;
    std::size_t n = 1;
    for (std::string f; fields >> f;) ++n;
    return n;
  }
  return 0;
}

// Labeled CoNLL; with `want_pos` the first column between token and tag is
// taken as POS when the file has one.
LabeledCorpus load_corpus(const std::string& path, bool want_pos, bool labeled = true) {
  const std::string text = read_text(path);
  ColumnConfig columns;
  columns.labeled = labeled;
  const std::size_t width = first_line_columns(text);
  if (want_pos && width >= (labeled ? 3u : 2u)) columns.pos_column = 1;
  return parse_conll(text, columns, path);
}


// ---------------------------------------------------------------- stats

struct StatsArgs {
  std::string input;
  std::string format = "table";
};

int run_stats(const StatsArgs& a) {
  const auto report = corpus_stats(read_conll_file(a.input));
  std::cout << (a.format == "kv" ? report.render_key_values() : report.render_table());
  return kExitOk;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string input, train_out, dev_out;
  double fraction = 0.7;
  std::uint64_t seed = 42;
};

int run_split(const SplitArgs& a) {
  const auto corpus = read_conll_file(a.input);
  const auto [train, dev] = split_corpus(corpus, a.fraction, a.seed);
  write_text(a.train_out, write_conll(train));
  write_text(a.dev_out, write_conll(dev));
  std::cout << "train=" << train.size() << '\n' << "dev=" << dev.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string plan;
};

int run_augment(const AugmentArgs& a) {
  const auto result = run_plan_files(read_plan(a.plan));
  std::cout << result.manifest;
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, preset, train, dev, model_out, history_out;
  std::string word_vectors, train_contextual, dev_contextual;
  double split = 0.0;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  TaggerConfig config = a.config.empty() ? (a.preset.empty() ? TaggerConfig{} : TaggerConfig::preset(a.preset))
                                         : TaggerConfig::from_file(a.config);
  if (a.seed) config.seed = *a.seed;
  config.validate();

  LabeledCorpus train_set = load_corpus(a.train, config.use_pos);
  LabeledCorpus dev_set;
  if (!a.dev.empty()) {
    dev_set = load_corpus(a.dev, config.use_pos);
  } else if (a.split > 0.0) {
    auto parts = split_corpus(train_set, a.split, config.seed);
    train_set = std::move(parts.first);
    dev_set = std::move(parts.second);
  } else {
    throw ValidationError("train: give --dev or --split");
  }

  std::optional<nn::WordVectors> vectors;
  if (!a.word_vectors.empty()) vectors = nn::read_word_vectors(a.word_vectors);
  std::optional<ContextualVectors> train_ctx, dev_ctx;
  if (!a.train_contextual.empty()) train_ctx = read_contextual_vectors(a.train_contextual);
  if (!a.dev_contextual.empty()) dev_ctx = read_contextual_vectors(a.dev_contextual);
  if (config.use_contextual_slot && !train_ctx) throw ValidationError("use_contextual_slot: --train-contextual is required");
  if (config.use_contextual_slot && !dev_ctx) dev_ctx = train_ctx;

  auto model = build_model(config, train_set, vectors ? &*vectors : nullptr, train_ctx ? &*train_ctx : nullptr);
  auto result = train(std::move(model), train_set, dev_set, train_ctx ? &*train_ctx : nullptr,
                      dev_ctx ? &*dev_ctx : nullptr);
  save_model(result.model, a.model_out);
  const std::string history_path = a.history_out.empty() ? a.model_out + ".history" : a.history_out;
  write_text(history_path, result.history.to_text());
  std::cout << result.history.to_text();
  return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model, input, output, contextual, model_id = "model";
  bool unlabeled = false;
};

int run_predict(const PredictArgs& a) {
  const auto model = load_model(a.model);
  const std::string text = read_text(a.input);
  const bool labeled = !a.unlabeled && first_line_columns(text) >= (model.config.use_pos ? 3u : 2u);
  const auto corpus = load_corpus(a.input, model.config.use_pos, labeled);
  std::optional<ContextualVectors> ctx;
  if (!a.contextual.empty()) ctx = read_contextual_vectors(a.contextual);
  if (model.config.use_contextual_slot && !ctx) throw ValidationError("use_contextual_slot: --contextual is required");
  const auto predictions = predict_corpus(model, corpus, ctx ? &*ctx : nullptr, a.model_id);
  write_text(a.output, write_prediction_file(corpus, predictions));
  if (corpus.has_gold) std::cout << evaluate(corpus, labels_of(predictions)).render_key_values();
  return kExitOk;
}

// ---------------------------------------------------------------- ensemble

struct EnsembleArgs {
  std::vector<std::string> predictions;
  std::string reference, output, diagnostics;
  double threshold = 0.5;
  std::string majority = "all-models";
  std::string fallback = "highest-total-score";
};

int run_ensemble(const EnsembleArgs& a, bool threshold_given) {
  VoteConfig config;
  config.score_threshold = a.threshold;
  config.basis = parse_majority_basis(a.majority);
  config.fallback = parse_fallback(a.fallback);
  config.validate();
  if (a.predictions.size() < 2) throw ValidationError("ensemble needs at least two prediction files");

  std::vector<PredictionSet> sets;
  std::optional<LabeledCorpus> first_corpus;
  for (const auto& path : a.predictions) {
    auto file = read_prediction_file(path);
    file.predictions.model_id = path;
    if (!first_corpus) first_corpus = file.corpus;
    sets.push_back(std::move(file.predictions));
  }
  LabeledCorpus reference;
  if (a.reference.empty()) {
    reference = *first_corpus;
  } else {
    const std::string text = read_text(a.reference);
    reference = load_corpus(a.reference, false, first_line_columns(text) >= 2);
  }

  const auto result = ensemble_corpus(sets, reference, config);
  const auto scored = ensemble_predictions(sets, result, config);
  write_text(a.output, write_prediction_file(reference, scored));
  const std::string diag_path = a.diagnostics.empty() ? a.output + ".votes.tsv" : a.diagnostics;
  write_text(diag_path, render_vote_diagnostics(result, reference, config, sets.size(), !threshold_given));
  std::cout << "models=" << sets.size() << '\n'
            << "threshold=" << format_double(config.score_threshold) << (threshold_given ? "" : " (default)") << '\n'
            << "fallback_activations=" << result.fallback_count << '\n';
  if (reference.has_gold) std::cout << evaluate(reference, result.labels).render_key_values();
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gold, pred;
};

TagSequences load_predicted_tags(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return labels_of(parse_prediction_file(text, path).predictions);
  } catch (const ParseError& as_predictions) {
    try {
      const auto corpus = parse_conll(text, {}, path);
      TagSequences out;
      for (const auto& s : corpus.sentences) out.push_back(s.gold_tags());
      return out;
    } catch (const ParseError&) {
      throw as_predictions;
    }
  }
}

int run_evaluate(const EvaluateArgs& a) {
  const auto gold = read_conll_file(a.gold);
  const auto report = evaluate(gold, load_predicted_tags(a.pred));
  std::cout << report.render_table() << '\n' << report.render_key_values();
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 42;
  bool inject_fault = false;
  std::size_t samples = 24;
};

int run_gradcheck(const GradcheckArgs& a) {
  TaggerConfig config = a.config.empty() ? TaggerConfig{} : TaggerConfig::from_file(a.config);
  config.seed = a.seed;
  config.validate();
  nn::GradCheckOptions options;
  options.analytic_scale = a.inject_fault ? 1.01 : 1.0;
  options.sample_seed = a.seed;

  std::vector<GradCheckCase> cases;
  for (auto& c : gradcheck_components(a.seed, options)) {
    if (c.name == "char_cnn" && !config.use_char_cnn) continue;
    if (c.name == "attention" && !config.use_mha) continue;
    if (c.name == "crf" && !config.use_crf) continue;
    cases.push_back(std::move(c));
  }
  options.max_per_param = a.samples;
  for (auto& c : gradcheck_model(config, options)) cases.push_back(std::move(c));

  bool passed = true;
  for (const auto& c : cases) passed = passed && c.report.passed();
  std::cout << render_gradcheck(cases, options.tolerance);
  return passed ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nerkit: complex named entity recognition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nerkit 0.1.0");

  StatsArgs stats;
  auto* cmd_stats = app.add_subcommand("stats", "Corpus statistics");
  cmd_stats->add_option("--input", stats.input, "CoNLL corpus")->required();
  cmd_stats->add_option("--format", stats.format, "table or kv")->check(CLI::IsMember({"table", "kv"}));

  SplitArgs split;
  auto* cmd_split = app.add_subcommand("split", "Seeded train/dev split");
  cmd_split->add_option("--input", split.input)->required();
  cmd_split->add_option("--train-out", split.train_out)->required();
  cmd_split->add_option("--dev-out", split.dev_out)->required();
  cmd_split->add_option("--fraction", split.fraction, "train fraction")->capture_default_str();
  cmd_split->add_option("--seed", split.seed)->capture_default_str();

  AugmentArgs augment;
  auto* cmd_augment = app.add_subcommand("augment", "Run an augmentation plan");
  cmd_augment->add_option("--plan", augment.plan, "JSON plan file")->required();

  TrainArgs tr;
  std::uint64_t train_seed = 42;
  auto* cmd_train = app.add_subcommand("train", "Train a tagger");
  auto* cfg = cmd_train->add_option("--config", tr.config, "key = value config file");
  cmd_train->add_option("--preset", tr.preset, "s1, s2, m1..m8")->excludes(cfg);
  cmd_train->add_option("--train", tr.train)->required();
  cmd_train->add_option("--dev", tr.dev);
  cmd_train->add_option("--split", tr.split, "split --train by this fraction when --dev is absent");
  cmd_train->add_option("--model-out", tr.model_out)->required();
  cmd_train->add_option("--history-out", tr.history_out, "defaults to <model-out>.history");
  cmd_train->add_option("--word-vectors", tr.word_vectors);
  cmd_train->add_option("--train-contextual", tr.train_contextual);
  cmd_train->add_option("--dev-contextual", tr.dev_contextual);
  auto* seed_opt = cmd_train->add_option("--seed", train_seed, "overrides the config seed (default 42)");

  PredictArgs pr;
  auto* cmd_predict = app.add_subcommand("predict", "Tag a corpus with a trained model");
  cmd_predict->add_option("--model", pr.model)->required();
  cmd_predict->add_option("--input", pr.input)->required();
  cmd_predict->add_option("--output", pr.output)->required();
  cmd_predict->add_option("--contextual", pr.contextual);
  cmd_predict->add_option("--model-id", pr.model_id);
  cmd_predict->add_flag("--unlabeled", pr.unlabeled, "input has no gold column");

  EnsembleArgs en;
  auto* cmd_ensemble = app.add_subcommand("ensemble", "Majority-vote ensemble of prediction files");
  cmd_ensemble->add_option("--predictions", en.predictions)->required()->expected(1, -1);
  cmd_ensemble->add_option("--reference", en.reference);
  cmd_ensemble->add_option("--output", en.output)->required();
  cmd_ensemble->add_option("--diagnostics", en.diagnostics, "defaults to <output>.votes.tsv");
  auto* thr = cmd_ensemble->add_option("--threshold", en.threshold, "votes need a score above this")
                  ->capture_default_str();
  cmd_ensemble->add_option("--majority", en.majority)->check(CLI::IsMember({"all-models", "surviving-votes"}));
  cmd_ensemble->add_option("--fallback", en.fallback)->check(CLI::IsMember({"highest-total-score", "outside"}));

  EvaluateArgs ev;
  auto* cmd_evaluate = app.add_subcommand("evaluate", "Chunk-level scores against gold");
  cmd_evaluate->add_option("--gold", ev.gold)->required();
  cmd_evaluate->add_option("--pred", ev.pred, "prediction file or CoNLL file")->required();

  GradcheckArgs gc;
  auto* cmd_gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  cmd_gradcheck->add_option("--config", gc.config);
  cmd_gradcheck->add_option("--seed", gc.seed)->capture_default_str();
  cmd_gradcheck->add_option("--samples", gc.samples, "scalars checked per whole-model parameter")->capture_default_str();
  cmd_gradcheck->add_flag("--inject-fault", gc.inject_fault, "scale analytic gradients by 1.01");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (*cmd_stats) return run_stats(stats);
    if (*cmd_split) return run_split(split);
    if (*cmd_augment) return run_augment(augment);
    if (*cmd_train) {
      if (seed_opt->count() > 0) tr.seed = train_seed;
      return run_train(tr);
    }
    if (*cmd_predict) return run_predict(pr);
    if (*cmd_ensemble) return run_ensemble(en, thr->count() > 0);
    if (*cmd_evaluate) return run_evaluate(ev);
    if (*cmd_gradcheck) return run_gradcheck(gc);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
