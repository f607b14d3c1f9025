#include "doctest.h"

#include <cmath>

#include "nerkit/crf.hpp"
#include "support/oracles.hpp"

using namespace nerkit;
using nerkit::nn::Matrix;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 2.0) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST_CASE("crf quantities match exhaustive enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(4), T = 1 + rng.below(4);
    const Matrix em = random_matrix(rng, n, T);
    crf::Transitions tr{random_matrix(rng, T, T), random_matrix(rng, 1, T), random_matrix(rng, 1, T)};
    const auto ref = oracle::enumerate_crf(em, tr.transitions, tr.start, tr.end);
    CHECK(crf::log_partition(em, tr) == doctest::Approx(ref.log_partition).epsilon(1e-12));
    const auto best = crf::viterbi(em, tr);
    CHECK(best.score == doctest::Approx(ref.best_score).epsilon(1e-12));
    CHECK(crf::path_score(em, tr, best.path) == doctest::Approx(ref.best_score).epsilon(1e-12));
    CHECK(nn::max_abs_difference(crf::marginals(em, tr), ref.marginals) < 1e-9);
  }
}

TEST_CASE("viterbi breaks ties toward lower tag indices") {
  const Matrix em(3, 3, 0.0);
  const auto t = crf::Transitions::zeros(3);
  const auto d = crf::viterbi(em, t);
  CHECK(d.path == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("nll is non-negative and vanishes for a dominant gold path") {
  Rng rng(8);
  const Matrix em = random_matrix(rng, 4, 3);
  const auto t = crf::Transitions::zeros(3);
  const auto r = crf::nll_grad(em, t, {0, 1, 2, 1});
  CHECK(r.loss >= 0.0);
  Matrix peaked(3, 3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) peaked(i, i) = 60.0;
  CHECK(crf::nll_grad(peaked, t, {0, 1, 2}).loss < 1e-20);
}

TEST_CASE("emission gradient equals marginals minus gold indicators") {
  Rng rng(9);
  const Matrix em = random_matrix(rng, 3, 4);
  crf::Transitions t{random_matrix(rng, 4, 4), random_matrix(rng, 1, 4), random_matrix(rng, 1, 4)};
  const std::vector<std::size_t> gold{2, 0, 3};
  const auto r = crf::nll_grad(em, t, gold);
  Matrix expected = crf::marginals(em, t);
  for (std::size_t i = 0; i < 3; ++i) expected(i, gold[i]) -= 1.0;
  CHECK(nn::max_abs_difference(r.d_emissions, expected) < 1e-12);
}

TEST_CASE("bio constraints forbid invalid moves only") {
  const TagSet tags({"LOC", "PER"});  // O B-LOC I-LOC B-PER I-PER
  const auto c = crf::bio_constraints(tags);
  CHECK(c.start[2] < -1e3);
  CHECK(c.start[4] < -1e3);
  CHECK(c.start[1] == 0.0);
  CHECK(c.transitions(0, 2) < -1e3);   // O -> I-LOC
  CHECK(c.transitions(3, 2) < -1e3);   // B-PER -> I-LOC
  CHECK(c.transitions(1, 2) == 0.0);   // B-LOC -> I-LOC
  CHECK(c.transitions(2, 2) == 0.0);   // I-LOC -> I-LOC
  CHECK(c.transitions(2, 3) == 0.0);   // I-LOC -> B-PER
  // With constraints, decoding never yields an orphan I-.
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix em = random_matrix(rng, 5, 5, 5.0);
    crf::Transitions t = crf::Transitions::zeros(5);
    t.transitions += c.transitions;
    t.start += c.start;
    t.end += c.end;
    std::vector<std::string> labels;
    for (auto i : crf::viterbi(em, t).path) labels.push_back(tags.label(i));
    CHECK(validate_bio(labels).empty());
  }
}
