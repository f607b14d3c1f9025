// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nerkit/augment.hpp"
#include "nerkit/crf.hpp"
#include "nerkit/ensemble.hpp"
#include "nerkit/eval.hpp"
#include "nerkit/gradcheck_suite.hpp"
#include "nerkit/random.hpp"
#include "nerkit/tagger.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace nerkit;

namespace {

constexpr double kCrfTolerance = 1e-9;
constexpr double kCrfSeconds = 10.0;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradTightTolerance = 1e-6;  // linear and CRF
constexpr std::size_t kGradSeeds = 20;
constexpr double kGradSeconds = 60.0;
constexpr double kOverfitTarget = 0.99;
constexpr std::size_t kOverfitEpochs = 300;
constexpr double kOverfitSeconds = 60.0;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

nn::Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale) {
  nn::Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-scale, scale);
  return m;
}

// ---------------------------------------------------------------------------

void crf_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  std::size_t path_mismatches = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t n = 1 + rng.below(4), T = 1 + rng.below(4);
    crf::Transitions tr{random_matrix(rng, T, T, 3.0), random_matrix(rng, 1, T, 3.0), random_matrix(rng, 1, T, 3.0)};
    const auto em = random_matrix(rng, n, T, 3.0);
    const auto truth = oracle::enumerate_crf(em, tr.transitions, tr.start, tr.end);

    worst = std::max(worst, std::abs(crf::log_partition(em, tr) - truth.log_partition));
    const auto best = crf::viterbi(em, tr);
    worst = std::max(worst, std::abs(best.score - truth.best_score));
    worst = std::max(worst, std::abs(crf::path_score(em, tr, best.path) - truth.best_score));
    if (std::find(truth.best_paths.begin(), truth.best_paths.end(), best.path) == truth.best_paths.end()) {
      ++path_mismatches;
    }
    const auto marg = crf::marginals(em, tr);
    for (std::size_t i = 0; i < marg.size(); ++i) worst = std::max(worst, std::abs(marg[i] - truth.marginals[i]));
  }
  const double secs = seconds_since(t0);
  report("crf oracle equivalence", worst <= kCrfTolerance && path_mismatches == 0 && secs < kCrfSeconds,
         fmt("500 instances, max abs diff %.3g (tol %.0e), non-optimal paths %zu, %.2fs (limit %.0fs)", worst,
             kCrfTolerance, path_mismatches, secs, kCrfSeconds));
}

// ---------------------------------------------------------------------------

void gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  std::set<std::string> failed;
  for (std::size_t seed = 1; seed <= kGradSeeds; ++seed) {
    nn::GradCheckOptions options;
    options.tolerance = kGradTolerance;
    options.sample_seed = seed;
    for (const auto& c : gradcheck_components(seed, options)) {
      const bool tight = c.name == "linear" || c.name == "crf";
      const double tol = tight ? kGradTightTolerance : kGradTolerance;
      worst[c.name] = std::max(worst[c.name], c.report.max_relative_error);
      if (!(c.report.max_relative_error < tol)) failed.insert(c.name + "@" + std::to_string(seed));
    }
  }
  const double secs = seconds_since(t0);
  std::string detail = fmt("%zu seeds,", kGradSeeds);
  for (const auto& [name, err] : worst) detail += fmt(" %s %.2e", name.c_str(), err);
  detail += fmt(" (tol %.0e, %.0e for linear/crf), %.2fs (limit %.0fs)", kGradTolerance, kGradTightTolerance, secs,
                kGradSeconds);
  for (const auto& f : failed) detail += " failed:" + f;
  const std::set<std::string> expected{"attention", "bilstm", "char_cnn", "crf", "embedding", "linear"};
  std::set<std::string> seen;
  for (const auto& [name, err] : worst) seen.insert(name);
  report("gradient suite", failed.empty() && seen == expected && secs < kGradSeconds, detail);
}

// ---------------------------------------------------------------------------

void overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = fixture::synthetic_ner(32, 7);
  auto config = TaggerConfig::s2();
  config.word_dim = 16;
  config.hidden = 16;
  config.lstm_layers = 1;
  config.use_crf = true;
  config.learning_rate = 1e-3;
  config.max_epochs = kOverfitEpochs;
  config.patience = kOverfitEpochs;
  config.seed = 42;
  auto result = train(build_model(config, corpus), corpus, corpus);
  std::size_t reached = 0;
  for (const auto& e : result.history.epochs) {
    if (e.eval_f1 >= kOverfitTarget) {
      reached = e.epoch;
      break;
    }
  }
  TagSequences predicted;
  for (const auto& s : corpus.sentences) {
    std::vector<std::string> labels;
    for (auto& p : predict(result.model, s)) labels.push_back(p.label);
    predicted.push_back(std::move(labels));
  }
  const double f1 = evaluate(corpus, predicted).macro_f1;
  const double secs = seconds_since(t0);
  report("overfit check",
         reached > 0 && reached <= kOverfitEpochs && f1 >= kOverfitTarget && secs < kOverfitSeconds &&
             corpus.tagset.classes().size() == 3,
         fmt("32 sentences, %zu classes, train macro F1 %.4f (target %.2f), first reached at epoch %zu of %zu, "
             "%.2fs (limit %.0fs)",
             corpus.tagset.classes().size(), f1, kOverfitTarget, reached, kOverfitEpochs, secs, kOverfitSeconds));
}

// ---------------------------------------------------------------------------

void early_stopping_contract() {
  struct Script {
    std::vector<double> values;
    StopMetric metric;
    std::size_t max_epochs;
    std::size_t stop, best;
  };
  // Hand-derived with patience 5: training stops after five consecutive
  // epochs without strict improvement.
  const std::vector<Script> scripts{
      {{1.0, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99}, StopMetric::eval_loss, 30, 7, 2},
      {{0.5, 0.6, 0.55, 0.55, 0.55, 0.55, 0.55}, StopMetric::eval_f1, 30, 7, 2},
      {{1, 1, 1, 1, 1, 1}, StopMetric::eval_loss, 30, 6, 1},
      {{1, 2, 2, 2, 2, 0.5, 2, 2, 2, 2, 2}, StopMetric::eval_loss, 30, 11, 6},
      {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}, StopMetric::eval_f1, 10, 10, 10},
      {{0.3, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2}, StopMetric::eval_f1, 4, 4, 1},
  };
  std::size_t ok = 0;
  std::string detail;
  for (const auto& s : scripts) {
    const auto out = replay_early_stopping(s.values, s.metric, 5, s.max_epochs);
    const bool match = out.stopped_epoch == s.stop && out.best_epoch == s.best;
    ok += match;
    detail += fmt(" [stop %zu best %zu%s]", out.stopped_epoch, out.best_epoch, match ? "" : " expected differs");
  }
  report("early-stopping contract", ok == scripts.size(), fmt("%zu/%zu scripts match:", ok, scripts.size()) + detail);
}

// ---------------------------------------------------------------------------

void ensemble_oracle() {
  Rng rng(77);
  const std::vector<std::string> classes{"CW", "LOC", "PER"};
  const auto reference = oracle::random_corpus(rng, 50, 9, classes);
  std::vector<PredictionSet> sets(8);
  for (std::size_t m = 0; m < sets.size(); ++m) {
    sets[m].model_id = "m" + std::to_string(m + 1);
    for (const auto& s : reference.sentences) {
      std::vector<TokenPrediction> row;
      const auto tags = oracle::random_raw_tags(rng, s.size(), classes);
      for (const auto& t : tags) row.push_back({t, rng.uniform(0.0, 1.0)});
      sets[m].sentences.push_back(std::move(row));
    }
  }
  std::size_t tokens = 0, mismatches = 0;
  for (const auto basis : {MajorityBasis::all_models, MajorityBasis::surviving_votes}) {
    VoteConfig config;
    config.basis = basis;
    const auto result = ensemble_corpus(sets, reference, config);
    for (std::size_t s = 0; s < reference.size(); ++s) {
      std::vector<std::string> voted;
      for (std::size_t i = 0; i < reference.sentences[s].size(); ++i) {
        std::vector<TokenPrediction> votes;
        for (const auto& set : sets) votes.push_back(set.sentences[s][i]);
        voted.push_back(oracle::vote(votes, 0.5, basis == MajorityBasis::surviving_votes));
        ++tokens;
        mismatches += result.votes[s][i].label != voted.back();
      }
      const auto repaired = oracle::repair(voted);
      for (std::size_t i = 0; i < repaired.size(); ++i) mismatches += result.labels[s][i] != repaired[i];
    }
  }

  std::size_t unanimity_fail = 0, permutation_fail = 0;
  for (int c = 0; c < 1000; ++c) {
    VoteConfig config;
    config.score_threshold = rng.uniform(0.0, 0.95);
    const std::size_t k = 1 + rng.below(8);
    const std::string label = oracle::random_raw_tags(rng, 1, classes)[0];
    std::vector<TokenPrediction> same;
    for (std::size_t m = 0; m < k; ++m) {
      same.push_back({label, config.score_threshold + (1.0 - config.score_threshold) * rng.uniform(0.01, 1.0)});
    }
    unanimity_fail += majority_vote(same, config) != label;

    std::vector<TokenPrediction> mixed;
    for (std::size_t m = 0; m < k; ++m) {
      // Scores on a coarse grid so equal totals and threshold hits occur.
      mixed.push_back({oracle::random_raw_tags(rng, 1, classes)[0], double(rng.below(11)) / 10.0});
    }
    const auto before = majority_vote(mixed, config);
    for (int p = 0; p < 5; ++p) {
      rng.shuffle(mixed);
      permutation_fail += majority_vote(mixed, config) != before;
    }
  }
  report("ensemble oracle", mismatches == 0 && unanimity_fail == 0 && permutation_fail == 0,
         fmt("8 sets x 50 sentences, %zu token votes under both bases, %zu mismatches; 1000 random cases, "
             "unanimity failures %zu, permutation failures %zu",
             tokens, mismatches, unanimity_fail, permutation_fail));
}

// ---------------------------------------------------------------------------

void eval_oracle() {
  Rng rng(99);
  const std::vector<std::string> classes{"CORP", "CW", "LOC", "PER"};
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t sentences = 1 + rng.below(12);
    TagSequences gold, pred;
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t n = 1 + rng.below(10);
      gold.push_back(oracle::random_valid_tags(rng, n, classes));
      // Half the corpora use generated valid predictions, half repaired raw ones.
      pred.push_back(c % 2 ? oracle::repair(oracle::random_raw_tags(rng, n, classes))
                           : oracle::random_valid_tags(rng, n, classes));
    }
    const auto report = evaluate_sequences(gold, pred);
    const auto counts = oracle::brute_force_counts(gold, pred);
    if (report.per_class.size() != counts.size()) ++mismatches;
    for (const auto& [cls, sc] : counts) {
      const auto it = report.per_class.find(cls);
      if (it == report.per_class.end() || it->second.true_positives != sc.tp || it->second.support != sc.gold ||
          it->second.predicted != sc.pred) {
        ++mismatches;
        continue;
      }
      const double p = sc.pred ? double(sc.tp) / sc.pred : 0.0;
      const double r = sc.gold ? double(sc.tp) / sc.gold : 0.0;
      worst = std::max({worst, std::abs(it->second.precision - p), std::abs(it->second.recall - r),
                        std::abs(it->second.f1 - oracle::f1_of(sc))});
    }
    worst = std::max(worst, std::abs(report.macro_f1 - oracle::brute_force_macro_f1(gold, pred)));
  }
  const auto hand = evaluate_sequences({{"B-PER", "I-PER", "O", "B-LOC"}}, {{"B-PER", "I-PER", "O", "O"}});
  report("eval oracle", mismatches == 0 && worst == 0.0 && hand.macro_f1 == 0.5,
         fmt("200 random corpora, count mismatches %zu, max score diff %.3g; hand case macro F1 %.6g (expected 0.5)",
             mismatches, worst, hand.macro_f1));
}

// ---------------------------------------------------------------------------

void augmentation_arithmetic() {
  const auto a = fixture::synthetic_ner(15300, 1);
  const auto b = fixture::synthetic_ner(15300, 2);
  const auto ab = combine({{"a", &a}, {"b", &b}}, "ab");
  const auto abc = combine({{"ab", &ab}, {"c", &a}}, "abc");
  const bool sizes = ab.size() == 30600 && abc.size() == 45900 &&
                     ab.token_count() == a.token_count() + b.token_count() &&
                     abc.token_count() == ab.token_count() + a.token_count();

  Rng rng(5);
  const std::vector<std::string> classes{"CW", "LOC", "PER"};
  std::size_t broken = 0, changed = 0;
  for (int c = 0; c < 100; ++c) {
    const auto corpus = oracle::random_corpus(rng, 1 + rng.below(10), 8, classes);
    Lexicon lex;
    lex.source_lang = "en";
    lex.target_lang = "bn";
    for (const auto& w : {"alpha", "beta", "gamma", "delta", "river", "city", "anna", "mark", "the", "of", "song",
                          "film", "dhaka", "north"}) {
      if (rng.below(2)) lex.entries[w] = std::string(w) + "_bn";
    }
    LexiconBackend backend(lex);
    TranslateStats stats;
    const auto out = token_translate(corpus, backend, "en", "bn",
                                     c % 2 ? TranslateFallback::keep : TranslateFallback::mark_unknown, &stats);
    changed += stats.changed;
    bool same = out.size() == corpus.size() && out.tagset == corpus.tagset;
    for (std::size_t s = 0; same && s < corpus.size(); ++s) {
      const auto& x = corpus.sentences[s];
      const auto& y = out.sentences[s];
      same = x.id == y.id && x.size() == y.size() && x.gold_tags() == y.gold_tags() &&
             extract_chunks(x.gold_tags()) == extract_chunks(y.gold_tags());
    }
    broken += !same;
  }
  report("augmentation arithmetic", sizes && broken == 0 && changed > 0,
         fmt("15300+15300=%zu, 30600+15300=%zu; translation on 100 corpora: %zu changed tokens, %zu with altered "
             "chunks",
             ab.size(), abc.size(), changed, broken));
}

// ---------------------------------------------------------------------------

struct PipelineOutput {
  std::string model, predictions, report, history;
};

PipelineOutput run_pipeline() {
  const auto corpus = fixture::synthetic_ner(40, 11, true);
  auto config = TaggerConfig::s2();
  config.word_dim = 12;
  config.hidden = 8;
  config.lstm_layers = 1;
  config.use_crf = true;
  config.use_pos = true;
  config.pos_dim = 4;
  config.use_char_cnn = true;
  config.char_dim = 4;
  config.char_filters = 6;
  config.use_mha = true;
  config.learning_rate = 1e-3;
  config.max_epochs = 4;
  config.seed = 42;
  const auto [train_set, dev_set] = split_corpus(corpus, 0.7, config.seed);
  auto result = train(build_model(config, train_set), train_set, dev_set);
  const auto predictions = predict_corpus(result.model, dev_set);
  const auto eval = evaluate(dev_set, labels_of(predictions));
  return {serialize_model(result.model), write_prediction_file(dev_set, predictions),
          eval.render_table() + eval.render_key_values(), result.history.to_text()};
}

void determinism() {
  const auto a = run_pipeline();
  const auto b = run_pipeline();
  report("determinism", a.model == b.model && a.predictions == b.predictions && a.report == b.report &&
                            a.history == b.history,
         fmt("seed 42 twice: model %s (%zu bytes), predictions %s, report %s, history %s",
             a.model == b.model ? "identical" : "differ", a.model.size(),
             a.predictions == b.predictions ? "identical" : "differ", a.report == b.report ? "identical" : "differ",
             a.history == b.history ? "identical" : "differ"));
}

// ---------------------------------------------------------------------------

void split_arithmetic() {
  const auto corpus = fixture::synthetic_ner(15300, 3);
  const auto [train_set, dev_set] = split_corpus(corpus, 0.7, 42);
  std::set<std::string> ids;
  for (const auto& s : train_set.sentences) ids.insert(s.id);
  for (const auto& s : dev_set.sentences) ids.insert(s.id);
  const bool ok = train_set.size() == 10710 && dev_set.size() == 4590 && ids.size() == corpus.size();
  report("split arithmetic", ok,
         fmt("15300 sentences at 0.7 -> %zu/%zu (expected 10710/4590), disjoint cover %s", train_set.size(),
             dev_set.size(), ids.size() == corpus.size() ? "yes" : "no"));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> checks{crf_oracle,         gradient_suite,         overfit,
                                                  early_stopping_contract, ensemble_oracle, eval_oracle,
                                                  augmentation_arithmetic, determinism,     split_arithmetic};
  for (const auto& check : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      std::printf("FAIL (exception): %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
