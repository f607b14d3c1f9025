#include "doctest.h"

#include "nerkit/error.hpp"
#include "nerkit/eval.hpp"
#include "nerkit/gradcheck_suite.hpp"
#include "nerkit/tagger.hpp"
#include "support/fixtures.hpp"

using namespace nerkit;

namespace {

TaggerConfig small_config() {
  TaggerConfig c;
  c.word_dim = 8;
  c.hidden = 8;
  c.lstm_layers = 1;
  c.learning_rate = 1e-2;
  c.max_epochs = 3;
  c.batch_size = 4;
  return c;
}

}  // namespace

TEST_CASE("config text round-trips and reports every bad key") {
  TaggerConfig c = TaggerConfig::preset("m6");
  CHECK(c.use_crf);
  CHECK(c.use_mha);
  CHECK(TaggerConfig::from_text(c.to_text()).to_text() == c.to_text());
  try {
    TaggerConfig::from_text("hidden = 0x\nbogus = 1\ndropout = 0.2\ndropout = 0.3\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("hidden") != std::string::npos);
    CHECK(msg.find("bogus") != std::string::npos);
    CHECK(msg.find("duplicate") != std::string::npos);
  }
  TaggerConfig bad;
  bad.lstm_layers = 0;
  bad.dropout = 1.0;
  bad.use_mha = true;
  bad.hidden = 3;
  bad.mha_heads = 4;
  const auto keys = bad.invalid_keys();
  CHECK(keys == std::vector<std::string>{"lstm_layers", "mha_heads", "dropout"});
  CHECK_THROWS_AS(TaggerConfig::preset("m9"), ValidationError);
}

TEST_CASE("presets follow the two training settings") {
  const auto s1 = TaggerConfig::s1_analog();
  CHECK(s1.max_epochs == 20);
  CHECK(s1.early_stop_metric == StopMetric::eval_loss);
  CHECK(s1.learning_rate == 1e-5);
  CHECK(s1.batch_size == 8);
  const auto s2 = TaggerConfig::s2();
  CHECK(s2.max_epochs == 30);
  CHECK(s2.early_stop_metric == StopMetric::eval_f1);
  CHECK(s2.patience == 5);
  CHECK(s2.weight_decay == 0.01);
  CHECK(s2.dropout == 0.1);
}

TEST_CASE("early stopping follows the patience rule") {
  const std::vector<double> f1{1.0, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99};
  // F1 never beats epoch 1; five stale epochs end training at epoch 6.
  auto r = replay_early_stopping(f1, StopMetric::eval_f1, 5, 30);
  CHECK(r.best_epoch == 1);
  CHECK(r.stopped_epoch == 6);
  const std::vector<double> loss{1.0, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99};
  r = replay_early_stopping(loss, StopMetric::eval_loss, 5, 30);
  CHECK(r.best_epoch == 2);
  CHECK(r.stopped_epoch == 7);
  r = replay_early_stopping({0.5, 0.6, 0.7}, StopMetric::eval_f1, 5, 3);
  CHECK(r.best_epoch == 3);
  CHECK(r.stopped_epoch == 3);
  // equal is not an improvement
  r = replay_early_stopping({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9}, StopMetric::eval_f1, 5, 30);
  CHECK(r.best_epoch == 1);
  CHECK(r.stopped_epoch == 6);
}

TEST_CASE("vocabulary and characters") {
  Vocabulary v;
  CHECK(v.size() == 1);
  CHECK(v.add("x") == 1);
  CHECK(v.add("x") == 1);
  CHECK(v.lookup("missing") == 0);
  CHECK(utf8_characters("a\xe0\xa6\xa2") == std::vector<std::string>{"a", "\xe0\xa6\xa2"});
}

TEST_CASE("build_model validates feature sources") {
  const auto corpus = fixture::synthetic_ner(4, 1, false);
  TaggerConfig c = small_config();
  c.use_pos = true;
  try {
    build_model(c, corpus);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("use_pos") != std::string::npos);
  }
  c.use_pos = false;
  c.use_contextual_slot = true;
  CHECK_THROWS_AS(build_model(c, corpus), ValidationError);
  c.use_contextual_slot = false;
  nn::WordVectors vectors;
  vectors.dim = 5;
  CHECK_THROWS_AS(build_model(c, corpus, &vectors), ValidationError);
  vectors.dim = c.word_dim;
  const std::string word = corpus.sentences[0].tokens[0].surface;
  vectors.vectors[word] = std::vector<double>(c.word_dim, 0.25);
  const auto m = build_model(c, corpus, &vectors);
  const auto row = m.params.value("word.embedding").row(m.words.lookup(word));
  for (double x : row) CHECK(x == 0.25);
}

TEST_CASE("predictions are BIO-valid with scores in [0, 1]") {
  const auto corpus = fixture::synthetic_ner(6, 2, true);
  for (const char* preset : {"m1", "m4", "m7"}) {
    TaggerConfig c = TaggerConfig::preset(preset);
    c.word_dim = 8;
    c.hidden = 8;
    c.use_pos = true;
    const auto m = build_model(c, corpus);
    const auto set = predict_corpus(m, corpus);
    REQUIRE(set.sentences.size() == corpus.size());
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      REQUIRE(set.sentences[s].size() == corpus.sentences[s].size());
      std::vector<std::string> labels;
      for (const auto& p : set.sentences[s]) {
        CHECK(p.score >= 0.0);
        CHECK(p.score <= 1.0);
        labels.push_back(p.label);
      }
      CHECK(validate_bio(labels).empty());
    }
  }
}

TEST_CASE("model files round-trip byte for byte") {
  const auto corpus = fixture::synthetic_ner(5, 3, true);
  TaggerConfig c = small_config();
  c.use_char_cnn = true;
  c.use_pos = true;
  c.use_crf = true;
  c.use_mha = true;
  const auto m = build_model(c, corpus);
  const auto text = serialize_model(m);
  const auto back = deserialize_model(text);
  CHECK(serialize_model(back) == text);
  CHECK(back.params.same_values(m.params));
  CHECK(predict_corpus(back, corpus).sentences == predict_corpus(m, corpus).sentences);
  CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), ParseError);
  CHECK_THROWS_AS(deserialize_model("nerkit-model 99\n"), ParseError);
}

TEST_CASE("training is deterministic and records history") {
  const auto corpus = fixture::synthetic_ner(12, 4);
  const auto [tr, dev] = split_corpus(corpus, 0.7, 42);
  TaggerConfig c = small_config();
  c.use_crf = true;
  const auto a = train(build_model(c, tr), tr, dev);
  const auto b = train(build_model(c, tr), tr, dev);
  CHECK(serialize_model(a.model) == serialize_model(b.model));
  CHECK(a.history.to_text() == b.history.to_text());
  CHECK(a.history.epochs.size() == a.history.stopped_epoch);
  CHECK(a.history.best_epoch >= 1);
  c.seed = 43;
  const auto other = train(build_model(c, tr), tr, dev);
  CHECK(serialize_model(other.model) != serialize_model(a.model));
}

TEST_CASE("whole-model gradients match finite differences") {
  nn::GradCheckOptions options;
  options.max_per_param = 12;
  for (const std::string preset : {"s1", "m1", "m4", "m6", "m7"}) {
    TaggerConfig c = TaggerConfig::preset(preset);
    c.word_dim = 4;
    c.hidden = 4;
    c.use_pos = true;
    c.pos_dim = 3;
    c.char_dim = 3;
    c.char_filters = 3;
    c.use_contextual_slot = true;
    c.contextual_dim = 3;
    for (const auto& r : gradcheck_model(c, options)) {
      INFO(preset << " " << r.name);
      if (!r.report.passed()) MESSAGE(render_gradcheck({r}, 1e-4));
      CHECK(r.report.passed());
    }
  }
  TaggerConfig decode = TaggerConfig::preset("m4");
  decode.word_dim = 4;
  decode.hidden = 4;
  decode.crf_mode = CrfMode::decode_only;
  decode.bio_constraints = true;
  for (const auto& r : gradcheck_model(decode, options)) {
    INFO(r.name);
    CHECK(r.report.passed());
  }
}
