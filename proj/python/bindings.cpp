#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nerkit/augment.hpp"
#include "nerkit/corpus.hpp"
#include "nerkit/crf.hpp"
#include "nerkit/ensemble.hpp"
#include "nerkit/error.hpp"
#include "nerkit/eval.hpp"
#include "nerkit/gradcheck_suite.hpp"
#include "nerkit/prediction.hpp"
#include "nerkit/tagger.hpp"

namespace py = pybind11;
using namespace nerkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

nn::Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) return nn::Matrix(1, a.shape(0), std::vector<double>(a.data(), a.data() + a.size()));
  if (a.ndim() != 2) throw ShapeError("expected a 1-d or 2-d array");
  return nn::Matrix(a.shape(0), a.shape(1), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const nn::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

crf::Transitions transitions_of(const Array& transitions, const std::optional<Array>& start,
                                const std::optional<Array>& end) {
  crf::Transitions t = crf::Transitions::zeros(static_cast<std::size_t>(transitions.shape(0)));
  t.transitions = to_matrix(transitions);
  if (start) t.start = to_matrix(*start);
  if (end) t.end = to_matrix(*end);
  return t;
}

py::tuple chunk_tuple(const Chunk& c) { return py::make_tuple(c.cls, c.start, c.end); }

}  // namespace

PYBIND11_MODULE(_nerkit, m) {
  m.doc() = "Complex named-entity recognition toolkit: BiLSTM-CRF tagger, voting ensemble, augmentation, chunk F1.";

  auto base = py::register_exception<Error>(m, "NerkitError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  // corpus
  py::class_<Token>(m, "Token")
      .def(py::init([](std::string surface, std::string gold_tag, std::optional<std::string> pos) {
             return Token{std::move(surface), std::move(pos), std::move(gold_tag), {}};
           }),
           py::arg("surface"), py::arg("gold_tag") = "O", py::arg("pos") = py::none())
      .def_readwrite("surface", &Token::surface)
      .def_readwrite("gold_tag", &Token::gold_tag)
      .def_readwrite("pos", &Token::pos)
      .def("__repr__", [](const Token& t) { return "Token(" + t.surface + ", " + t.gold_tag + ")"; });

  py::class_<Sentence>(m, "Sentence")
      .def(py::init([](std::string id, std::vector<Token> tokens) { return Sentence{std::move(id), std::move(tokens)}; }),
           py::arg("id"), py::arg("tokens"))
      .def_readwrite("id", &Sentence::id)
      .def_readwrite("tokens", &Sentence::tokens)
      .def("gold_tags", &Sentence::gold_tags)
      .def("__len__", &Sentence::size);

  py::class_<TagSet>(m, "TagSet")
      .def(py::init<std::vector<std::string>>(), py::arg("classes"))
      .def_property_readonly("classes", &TagSet::classes)
      .def_property_readonly("labels", &TagSet::labels)
      .def("index", &TagSet::index)
      .def("__len__", &TagSet::size);

  py::class_<LabeledCorpus>(m, "LabeledCorpus")
      .def(py::init([](std::vector<Sentence> sentences) {
             LabeledCorpus c;
             c.tagset = infer_tagset(sentences);
             c.sentences = std::move(sentences);
             return c;
           }),
           py::arg("sentences"))
      .def_readwrite("sentences", &LabeledCorpus::sentences)
      .def_readonly("tagset", &LabeledCorpus::tagset)
      .def_readonly("provenance", &LabeledCorpus::provenance)
      .def_readonly("has_gold", &LabeledCorpus::has_gold)
      .def("token_count", &LabeledCorpus::token_count)
      .def("__len__", &LabeledCorpus::size);

  m.def(
      "parse_conll",
      [](const std::string& text, std::optional<std::size_t> pos_column, bool labeled, const std::string& source) {
        ColumnConfig cols;
        cols.pos_column = pos_column;
        cols.labeled = labeled;
        return parse_conll(text, cols, source);
      },
      py::arg("text"), py::arg("pos_column") = py::none(), py::arg("labeled") = true,
      py::arg("source") = "<memory>");
  m.def(
      "read_conll",
      [](const std::string& path, std::optional<std::size_t> pos_column, bool labeled) {
        ColumnConfig cols;
        cols.pos_column = pos_column;
        cols.labeled = labeled;
        return read_conll_file(path, cols);
      },
      py::arg("path"), py::arg("pos_column") = py::none(), py::arg("labeled") = true);
  m.def(
      "write_conll", [](const LabeledCorpus& c) { return write_conll(c); }, py::arg("corpus"));
  m.def("validate_bio", &validate_bio, py::arg("tags"), "Positions of scheme-invalid tags.");
  m.def("repair_bio", &repair_bio, py::arg("tags"));
  m.def(
      "extract_chunks",
      [](const std::vector<std::string>& tags) {
        py::list out;
        for (const auto& c : extract_chunks(tags)) out.append(chunk_tuple(c));
        return out;
      },
      py::arg("tags"), "(class, start, end) triples, end exclusive.");
  m.def("split_corpus", &split_corpus, py::arg("corpus"), py::arg("train_fraction") = 0.7, py::arg("seed") = 42);

  py::class_<StatsReport>(m, "StatsReport")
      .def_readonly("sentences", &StatsReport::sentences)
      .def_readonly("tokens", &StatsReport::tokens)
      .def_readonly("chunks", &StatsReport::chunks)
      .def_readonly("single_token_chunks", &StatsReport::single_token_chunks)
      .def_readonly("multi_token_chunks", &StatsReport::multi_token_chunks)
      .def_readonly("class_frequency", &StatsReport::class_frequency)
      .def("render_table", &StatsReport::render_table)
      .def("render_key_values", &StatsReport::render_key_values);
  m.def("corpus_stats", &corpus_stats, py::arg("corpus"));

  // crf
  m.def(
      "crf_log_partition",
      [](const Array& em, const Array& trans, std::optional<Array> start, std::optional<Array> end) {
        return crf::log_partition(to_matrix(em), transitions_of(trans, start, end));
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start") = py::none(), py::arg("end") = py::none());
  m.def(
      "crf_viterbi",
      [](const Array& em, const Array& trans, std::optional<Array> start, std::optional<Array> end) {
        const auto d = crf::viterbi(to_matrix(em), transitions_of(trans, start, end));
        return py::make_tuple(d.path, d.score);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start") = py::none(), py::arg("end") = py::none(),
      "Best path and its score.");
  m.def(
      "crf_marginals",
      [](const Array& em, const Array& trans, std::optional<Array> start, std::optional<Array> end) {
        return to_array(crf::marginals(to_matrix(em), transitions_of(trans, start, end)));
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start") = py::none(), py::arg("end") = py::none());
  m.def(
      "crf_nll",
      [](const Array& em, const Array& trans, const std::vector<std::size_t>& gold, std::optional<Array> start,
         std::optional<Array> end) {
        const auto r = crf::nll_grad(to_matrix(em), transitions_of(trans, start, end), gold);
        py::dict grads;
        grads["emissions"] = to_array(r.d_emissions);
        grads["transitions"] = to_array(r.d_transitions.transitions);
        grads["start"] = to_array(r.d_transitions.start);
        grads["end"] = to_array(r.d_transitions.end);
        return py::make_tuple(r.loss, grads);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("gold"), py::arg("start") = py::none(),
      py::arg("end") = py::none(), "Negative log-likelihood of the gold path and its gradients.");

  // predictions and ensemble
  py::class_<TokenPrediction>(m, "TokenPrediction")
      .def(py::init([](std::string label, double score) { return TokenPrediction{std::move(label), score}; }),
           py::arg("label"), py::arg("score"))
      .def_readwrite("label", &TokenPrediction::label)
      .def_readwrite("score", &TokenPrediction::score)
      .def("__repr__", [](const TokenPrediction& p) {
        return "TokenPrediction(" + p.label + ", " + format_double(p.score) + ")";
      });

  py::class_<PredictionSet>(m, "PredictionSet")
      .def(py::init([](std::string model_id, std::vector<std::vector<TokenPrediction>> sentences) {
             return PredictionSet{std::move(model_id), std::move(sentences)};
           }),
           py::arg("model_id"), py::arg("sentences"))
      .def_readwrite("model_id", &PredictionSet::model_id)
      .def_readwrite("sentences", &PredictionSet::sentences)
      .def("labels", &labels_of);

  m.def("write_prediction_file", &write_prediction_file, py::arg("corpus"), py::arg("predictions"));
  m.def(
      "read_prediction_file",
      [](const std::string& path) {
        auto f = read_prediction_file(path);
        return py::make_tuple(std::move(f.corpus), std::move(f.predictions));
      },
      py::arg("path"));

  py::class_<VoteConfig>(m, "VoteConfig")
      .def(py::init([](double threshold, const std::string& majority, const std::string& fallback) {
             VoteConfig c{threshold, parse_majority_basis(majority), parse_fallback(fallback)};
             c.validate();
             return c;
           }),
           py::arg("threshold") = 0.5, py::arg("majority") = to_string(MajorityBasis::all_models),
           py::arg("fallback") = to_string(FallbackPolicy::highest_total_score))
      .def_readonly("threshold", &VoteConfig::score_threshold)
      .def_property_readonly("majority", [](const VoteConfig& c) { return to_string(c.basis); })
      .def_property_readonly("fallback", [](const VoteConfig& c) { return to_string(c.fallback); });

  m.def(
      "majority_vote",
      [](const std::vector<TokenPrediction>& votes, const VoteConfig& config) { return majority_vote(votes, config); },
      py::arg("votes"), py::arg("config") = VoteConfig{});
  m.def(
      "ensemble",
      [](const std::vector<PredictionSet>& sets, const LabeledCorpus& reference, const VoteConfig& config) {
        return ensemble_corpus(sets, reference, config).labels;
      },
      py::arg("sets"), py::arg("reference"), py::arg("config") = VoteConfig{},
      "Voted and repaired labels per sentence.");

  // eval
  py::class_<ClassScores>(m, "ClassScores")
      .def_readonly("precision", &ClassScores::precision)
      .def_readonly("recall", &ClassScores::recall)
      .def_readonly("f1", &ClassScores::f1)
      .def_readonly("support", &ClassScores::support)
      .def_readonly("predicted", &ClassScores::predicted)
      .def_readonly("true_positives", &ClassScores::true_positives);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("per_class", &EvalReport::per_class)
      .def_readonly("macro_precision", &EvalReport::macro_precision)
      .def_readonly("macro_recall", &EvalReport::macro_recall)
      .def_readonly("macro_f1", &EvalReport::macro_f1)
      .def_readonly("token_accuracy", &EvalReport::token_accuracy)
      .def_readonly("tokens", &EvalReport::tokens)
      .def("render_table", &EvalReport::render_table)
      .def("render_key_values", &EvalReport::render_key_values);

  m.def("evaluate", &evaluate, py::arg("gold"), py::arg("predicted"));
  m.def("evaluate_sequences", &evaluate_sequences, py::arg("gold"), py::arg("predicted"));

  // tagger
  py::class_<TaggerConfig>(m, "TaggerConfig")
      .def(py::init<>())
      .def_static("preset", &TaggerConfig::preset, py::arg("name"))
      .def_static("from_text", &TaggerConfig::from_text, py::arg("text"), py::arg("source") = "<memory>")
      .def_static("from_file", &TaggerConfig::from_file, py::arg("path"))
      .def("to_text", &TaggerConfig::to_text)
      .def("set", &TaggerConfig::set, py::arg("key"), py::arg("value"))
      .def("validate", &TaggerConfig::validate)
      .def_readwrite("word_dim", &TaggerConfig::word_dim)
      .def_readwrite("use_char_cnn", &TaggerConfig::use_char_cnn)
      .def_readwrite("use_pos", &TaggerConfig::use_pos)
      .def_readwrite("lstm_layers", &TaggerConfig::lstm_layers)
      .def_readwrite("hidden", &TaggerConfig::hidden)
      .def_readwrite("use_mha", &TaggerConfig::use_mha)
      .def_readwrite("use_crf", &TaggerConfig::use_crf)
      .def_readwrite("dropout", &TaggerConfig::dropout)
      .def_readwrite("batch_size", &TaggerConfig::batch_size)
      .def_readwrite("max_epochs", &TaggerConfig::max_epochs)
      .def_readwrite("patience", &TaggerConfig::patience)
      .def_readwrite("learning_rate", &TaggerConfig::learning_rate)
      .def_readwrite("weight_decay", &TaggerConfig::weight_decay)
      .def_readwrite("seed", &TaggerConfig::seed);

  py::class_<TaggerModel>(m, "TaggerModel")
      .def_readonly("config", &TaggerModel::config)
      .def_readonly("tagset", &TaggerModel::tagset)
      .def("serialize", [](const TaggerModel& model) { return serialize_model(model); })
      .def("save", [](const TaggerModel& model, const std::string& path) { save_model(model, path); },
           py::arg("path"));

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("train_loss", &EpochRecord::train_loss)
      .def_readonly("eval_loss", &EpochRecord::eval_loss)
      .def_readonly("eval_f1", &EpochRecord::eval_f1);

  py::class_<TrainHistory>(m, "TrainHistory")
      .def_readonly("epochs", &TrainHistory::epochs)
      .def_readonly("stopped_epoch", &TrainHistory::stopped_epoch)
      .def_readonly("best_epoch", &TrainHistory::best_epoch)
      .def("to_text", &TrainHistory::to_text);

  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "train",
      [](const TaggerConfig& config, const LabeledCorpus& train_set, const LabeledCorpus& dev_set) {
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train(build_model(config, train_set), train_set, dev_set);
        }
        return py::make_tuple(std::move(result.model), std::move(result.history));
      },
      py::arg("config"), py::arg("train_set"), py::arg("dev_set"), "Returns (best model, history).");
  m.def(
      "predict",
      [](const TaggerModel& model, const LabeledCorpus& corpus, const std::string& model_id) {
        py::gil_scoped_release release;
        return predict_corpus(model, corpus, nullptr, model_id);
      },
      py::arg("model"), py::arg("corpus"), py::arg("model_id") = "model");
  m.def(
      "replay_early_stopping",
      [](const std::vector<double>& values, const std::string& metric, std::size_t patience,
         std::size_t max_epochs) {
        StopMetric sm;
        if (metric == "eval_loss") sm = StopMetric::eval_loss;
        else if (metric == "eval_f1") sm = StopMetric::eval_f1;
        else throw ValidationError("metric must be eval_loss or eval_f1, got '" + metric + "'");
        const auto out = replay_early_stopping(values, sm, patience, max_epochs);
        return py::make_tuple(out.stopped_epoch, out.best_epoch);
      },
      py::arg("values"), py::arg("metric"), py::arg("patience") = 5, py::arg("max_epochs") = 30,
      "(stopped epoch, best epoch) for a scripted metric sequence.");

  m.def(
      "gradcheck",
      [](const TaggerConfig& config, std::size_t samples, double tolerance) {
        nn::GradCheckOptions options;
        options.tolerance = tolerance;
        options.max_per_param = samples;
        options.sample_seed = config.seed;
        auto cases = gradcheck_components(config.seed, options);
        for (auto& c : gradcheck_model(config, options)) cases.push_back(std::move(c));
        py::list out;
        for (const auto& c : cases) {
          out.append(py::make_tuple(c.name, c.report.max_relative_error, c.report.passed()));
        }
        return out;
      },
      py::arg("config") = TaggerConfig{}, py::arg("samples") = 24, py::arg("tolerance") = 1e-4,
      "(case, max relative error, passed) per component and for the whole model.");

  // augmentation
  m.def(
      "combine",
      [](const std::vector<std::pair<std::string, const LabeledCorpus*>>& sources, const std::string& name) {
        std::vector<CorpusSource> srcs;
        for (const auto& [n, c] : sources) srcs.push_back({n, c});
        return combine(srcs, name);
      },
      py::arg("sources"), py::arg("name") = "combined", "sources: list of (name, corpus).");
  m.def(
      "translate",
      [](const LabeledCorpus& corpus, const std::unordered_map<std::string, std::string>& lexicon,
         const std::string& source_lang, const std::string& target_lang, const std::string& fallback) {
        Lexicon lex;
        lex.source_lang = source_lang;
        lex.target_lang = target_lang;
        lex.entries = lexicon;
        LexiconBackend backend(std::move(lex));
        TranslateStats stats;
        auto out = token_translate(corpus, backend, source_lang, target_lang, parse_translate_fallback(fallback),
                                   &stats);
        py::dict s;
        s["tokens"] = stats.tokens;
        s["translated"] = stats.translated;
        s["changed"] = stats.changed;
        s["fallbacks"] = stats.fallbacks;
        return py::make_tuple(std::move(out), s);
      },
      py::arg("corpus"), py::arg("lexicon"), py::arg("source_lang"), py::arg("target_lang"),
      py::arg("fallback") = to_string(TranslateFallback::keep), "Token-wise lexicon translation; returns (corpus, stats).");
  m.def(
      "run_plan",
      [](const std::string& path) {
        auto result = run_plan_files(read_plan(path));
        return py::make_tuple(std::move(result.corpus), result.manifest);
      },
      py::arg("path"), "Runs a JSON augmentation plan; returns (corpus, manifest).");
}
