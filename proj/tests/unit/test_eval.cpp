#include "doctest.h"

#include "nerkit/error.hpp"
#include "nerkit/eval.hpp"
#include "support/oracles.hpp"

using namespace nerkit;

TEST_CASE("hand case: one matched PER and one missed LOC") {
  const TagSequences gold{{"B-PER", "I-PER", "O", "B-LOC"}};
  const TagSequences pred{{"B-PER", "I-PER", "O", "O"}};
  const auto r = evaluate_sequences(gold, pred);
  CHECK(r.per_class.at("PER").f1 == 1.0);
  CHECK(r.per_class.at("LOC").precision == 0.0);
  CHECK(r.per_class.at("LOC").recall == 0.0);
  CHECK(r.per_class.at("LOC").f1 == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(0.5));
  CHECK(r.token_accuracy == doctest::Approx(0.75));
}

TEST_CASE("identity, all-O and boundary shifts") {
  const TagSequences gold{{"B-PER", "I-PER", "O"}, {"B-CW", "O", "O"}};
  const auto same = evaluate_sequences(gold, gold);
  CHECK(same.macro_f1 == 1.0);
  CHECK(same.macro_precision == 1.0);
  CHECK(same.token_accuracy == 1.0);
  const TagSequences none{{"O", "O", "O"}, {"O", "O", "O"}};
  const auto empty = evaluate_sequences(gold, none);
  CHECK(empty.macro_f1 == 0.0);
  CHECK(empty.token_accuracy == doctest::Approx(3.0 / 6.0));
  const TagSequences shifted{{"O", "B-PER", "I-PER"}, {"B-CW", "O", "O"}};
  CHECK(evaluate_sequences(gold, shifted).per_class.at("PER").true_positives == 0);
}

TEST_CASE("misaligned sequences are rejected") {
  CHECK_THROWS_AS(evaluate_sequences({{"O"}}, {{"O", "O"}}), AlignmentError);
  CHECK_THROWS_AS(evaluate_sequences({{"O"}}, {}), AlignmentError);
}

TEST_CASE("evaluation matches the set-intersection scorer") {
  Rng rng(77);
  const std::vector<std::string> classes{"CORP", "CW", "GRP", "LOC", "PER", "PROD"};
  for (int trial = 0; trial < 200; ++trial) {
    TagSequences gold, pred;
    const auto sentences = 1 + rng.below(6);
    for (std::size_t s = 0; s < sentences; ++s) {
      const auto n = 1 + rng.below(8);
      gold.push_back(oracle::random_valid_tags(rng, n, classes));
      pred.push_back(oracle::random_valid_tags(rng, n, classes));
    }
    const auto r = evaluate_sequences(gold, pred);
    const auto counts = oracle::brute_force_counts(gold, pred);
    CHECK(r.per_class.size() == counts.size());
    for (const auto& [cls, sc] : counts) {
      REQUIRE(r.per_class.count(cls));
      CHECK(r.per_class.at(cls).true_positives == sc.tp);
      CHECK(r.per_class.at(cls).support == sc.gold);
      CHECK(r.per_class.at(cls).predicted == sc.pred);
    }
    CHECK(r.macro_f1 == doctest::Approx(oracle::brute_force_macro_f1(gold, pred)).epsilon(1e-15));
  }
}

TEST_CASE("macro F1 ignores sentence order") {
  const TagSequences g{{"B-PER", "O"}, {"B-LOC"}, {"O", "B-CW"}};
  const TagSequences p{{"B-PER", "O"}, {"O"}, {"B-CW", "B-CW"}};
  const TagSequences g2{g[2], g[0], g[1]}, p2{p[2], p[0], p[1]};
  CHECK(evaluate_sequences(g, p).macro_f1 == evaluate_sequences(g2, p2).macro_f1);
}

TEST_CASE("report comparison") {
  const auto a = evaluate_sequences({{"B-PER", "O", "B-LOC"}}, {{"B-PER", "O", "O"}});
  for (const auto& d : compare_reports(a, a)) CHECK(d.delta == 0.0);
  EvalReport x = a, y = a;
  x.macro_f1 = 0.6072;
  y.macro_f1 = 0.5975;
  bool seen = false;
  for (const auto& d : compare_reports(x, y)) {
    if (d.metric == "macro_f1") {
      seen = true;
      CHECK(d.delta == doctest::Approx(-0.0097).epsilon(1e-9));
    }
  }
  CHECK(seen);
  CHECK(render_deltas(compare_reports(x, y)).find("-0.0097") != std::string::npos);
  const auto other = evaluate_sequences({{"B-CW"}}, {{"B-CW"}});
  CHECK_THROWS_AS(compare_reports(a, other), ValidationError);
}

TEST_CASE("key-value report is machine readable") {
  const auto r = evaluate_sequences({{"B-PER", "O", "B-LOC"}}, {{"B-PER", "O", "O"}});
  const auto kv = r.render_key_values();
  CHECK(kv.find("macro_f1=0.500000\n") != std::string::npos);
  CHECK(kv.find("class.LOC.f1=0.000000\n") != std::string::npos);
}
