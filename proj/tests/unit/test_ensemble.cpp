#include "doctest.h"

#include <algorithm>

#include "nerkit/ensemble.hpp"
#include "nerkit/error.hpp"
#include "support/oracles.hpp"

using namespace nerkit;

namespace {

std::vector<TokenPrediction> votes(std::initializer_list<std::pair<const char*, double>> v) {
  std::vector<TokenPrediction> out;
  for (const auto& [label, score] : v) out.push_back({label, score});
  return out;
}

}  // namespace

TEST_CASE("worked voting examples") {
  const VoteConfig config;
  CHECK(majority_vote(votes({{"B-PER", 0.9}, {"B-PER", 0.6}, {"O", 0.95}}), config) == "B-PER");
  const auto five = votes({{"B-PER", 0.9}, {"B-PER", 0.7}, {"O", 0.95}, {"B-LOC", 0.4}, {"B-PER", 0.45}});
  const auto outcome = majority_vote_detailed(five, config);
  CHECK(outcome.label == "B-PER");
  CHECK(outcome.surviving == 3);
  CHECK(outcome.fallback_used);
  CHECK(majority_vote(votes({{"B-PER", 0.5}, {"B-LOC", 0.2}}), config) == "O");
  CHECK_THROWS_AS(majority_vote({}, config), ValidationError);
}

TEST_CASE("threshold is strict and the fallback tie-break is lexicographic") {
  const VoteConfig config;
  CHECK(majority_vote(votes({{"B-PER", 0.5}, {"B-PER", 0.5}, {"O", 0.51}}), config) == "O");
  // one survivor each, equal totals: smallest label wins
  CHECK(majority_vote(votes({{"O", 0.8}, {"B-LOC", 0.8}, {"B-PER", 0.8}, {"I-PER", 0.1}}), config) == "B-LOC");
  VoteConfig outside = config;
  outside.fallback = FallbackPolicy::outside;
  CHECK(majority_vote(votes({{"B-PER", 0.9}, {"B-LOC", 0.9}}), outside) == "O");
}

TEST_CASE("majority basis switch") {
  VoteConfig survivors;
  survivors.basis = MajorityBasis::surviving_votes;
  // 2 of 3 survivors agree but 2 of 5 models is not a majority.
  const auto v = votes({{"B-PER", 0.9}, {"B-PER", 0.8}, {"O", 0.95}, {"O", 0.1}, {"O", 0.2}});
  CHECK(majority_vote_detailed(v, survivors).fallback_used == false);
  CHECK(majority_vote_detailed(v, VoteConfig{}).fallback_used == true);
}

TEST_CASE("config validation and policy names") {
  VoteConfig bad;
  bad.score_threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK(parse_fallback("highest-total-score") == FallbackPolicy::highest_total_score);
  CHECK(to_string(parse_majority_basis("surviving-votes")) == "surviving-votes");
  CHECK_THROWS_AS(parse_fallback("coin-flip"), ValidationError);
}

TEST_CASE("voting matches the oracle, unanimity and permutation invariance") {
  Rng rng(314);
  const std::vector<std::string> labels{"O", "B-PER", "I-PER", "B-LOC", "I-LOC"};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = 2 + rng.below(8);
    std::vector<TokenPrediction> v(m);
    for (auto& p : v) p = {labels[rng.below(labels.size())], std::round(rng.uniform() * 20) / 20};
    VoteConfig config;
    config.basis = trial % 2 ? MajorityBasis::all_models : MajorityBasis::surviving_votes;
    const auto got = majority_vote(v, config);
    CHECK(got == oracle::vote(v, 0.5, config.basis == MajorityBasis::surviving_votes));
    auto shuffled = v;
    rng.shuffle(shuffled);
    CHECK(majority_vote(shuffled, config) == got);
    std::vector<TokenPrediction> same(m, {labels[rng.below(labels.size())], 0.5 + 0.5 * rng.uniform() + 1e-9});
    CHECK(majority_vote(same, config) == same[0].label);
  }
}

TEST_CASE("ensemble over a corpus repairs once and reports alignment errors") {
  LabeledCorpus ref = parse_conll("# id a\nx O\ny O\n\n# id b\nz O\n");
  PredictionSet p1{"m1", {{{"O", 0.9}, {"I-PER", 0.9}}, {{"B-LOC", 0.9}}}};
  PredictionSet p2 = p1;
  p2.model_id = "m2";
  const auto r = ensemble_corpus({p1, p2}, ref, VoteConfig{});
  CHECK(r.votes[0][1].label == "I-PER");
  CHECK(r.labels[0] == std::vector<std::string>{"O", "B-PER"});
  CHECK_THROWS_AS(ensemble_corpus({p1}, ref, VoteConfig{}), ValidationError);
  PredictionSet broken = p1;
  broken.model_id = "broken";
  broken.sentences[1].push_back({"O", 0.9});
  try {
    ensemble_corpus({p1, broken}, ref, VoteConfig{});
    FAIL("expected an alignment error");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("broken") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
  const auto diag = render_vote_diagnostics(r, ref, VoteConfig{}, 2, true);
  CHECK(diag.find("# threshold 0.5 (default)") != std::string::npos);
  const auto scored = ensemble_predictions({p1, p2}, r, VoteConfig{});
  CHECK(scored.sentences[0][1].label == "B-PER");
  CHECK(scored.sentences[0][1].score == doctest::Approx(0.9));
}
