#include "doctest.h"

#include "nerkit/error.hpp"
#include "nerkit/prediction.hpp"

using namespace nerkit;

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("prediction files round-trip with and without gold") {
  auto labeled = parse_conll("# id a\nJohn B-PER\nran O\n");
  PredictionSet p{"m", {{{"B-PER", 0.75}, {"O", 1.0}}}};
  const auto text = write_prediction_file(labeled, p);
  CHECK(text == "# id a\nJohn B-PER B-PER 0.75\nran O O 1\n\n");
  const auto back = parse_prediction_file(text);
  CHECK(back.predictions.sentences == p.sentences);
  CHECK(back.corpus.has_gold);
  CHECK(back.corpus.sentences[0].gold_tags() == labeled.sentences[0].gold_tags());

  ColumnConfig bare;
  bare.labeled = false;
  const auto unlabeled = parse_conll("John\nran\n", bare);
  const auto plain = write_prediction_file(unlabeled, p);
  CHECK(plain == "# id s1\nJohn B-PER 0.75\nran O 1\n\n");
  CHECK_FALSE(parse_prediction_file(plain).corpus.has_gold);
}

TEST_CASE("prediction files reject bad scores and labels") {
  CHECK_THROWS_AS(parse_prediction_file("John B-PER 1.5\n"), ParseError);
  CHECK_THROWS_AS(parse_prediction_file("John PER 0.5\n"), ParseError);
  CHECK_THROWS_AS(parse_prediction_file("John B-PER x\n"), ParseError);
}

TEST_CASE("alignment check names model and sentence") {
  const auto ref = parse_conll("# id only\na O\nb O\n");
  PredictionSet p{"model-7", {{{"O", 0.9}}}};
  try {
    check_alignment(p, ref);
    FAIL("expected an alignment error");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("model-7") != std::string::npos);
    CHECK(msg.find("only") != std::string::npos);
  }
}
