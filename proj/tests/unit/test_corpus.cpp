#include "doctest.h"

#include "nerkit/corpus.hpp"
#include "nerkit/error.hpp"
#include "support/oracles.hpp"

using namespace nerkit;

TEST_CASE("conll parses tokens, tags and ids") {
  const auto c = parse_conll("# id first\nJohn B-PER\nSmith I-PER\nruns O\n\nParis B-LOC\n");
  REQUIRE(c.size() == 2);
  CHECK(c.sentences[0].id == "first");
  CHECK(c.sentences[1].id == "s2");
  CHECK(c.sentences[0].gold_tags() == std::vector<std::string>{"B-PER", "I-PER", "O"});
  CHECK(c.tagset.classes() == std::vector<std::string>{"LOC", "PER"});
  CHECK(c.tagset.labels() == std::vector<std::string>{"O", "B-LOC", "I-LOC", "B-PER", "I-PER"});
  CHECK(c.token_count() == 4);
}

TEST_CASE("conll keeps POS and middle columns") {
  ColumnConfig cols;
  cols.pos_column = 1;
  const auto c = parse_conll("Dhaka NNP _ B-LOC\nis VBZ _ O\n", cols);
  REQUIRE(c.sentences[0].tokens[0].pos);
  CHECK(*c.sentences[0].tokens[0].pos == "NNP");
  CHECK(c.sentences[0].tokens[0].middle == std::vector<std::string>{"NNP", "_"});
}

TEST_CASE("conll errors carry the line number") {
  CHECK_THROWS_AS(parse_conll(""), ParseError);
  CHECK_THROWS_AS(parse_conll("token\n"), ParseError);
  try {
    parse_conll("a O\nb X-PER\n", {}, "f.conll");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("f.conll:2") == 0);
  }
  CHECK_THROWS_AS(parse_conll("a b O\nc O\n"), ParseError);
  CHECK_THROWS_AS(parse_conll("# id x\na O\n\n# id x\nb O\n"), ParseError);
}

TEST_CASE("conll applies NFC and a custom normalizer") {
  // "e" + combining acute -> precomposed U+00E9
  const auto c = parse_conll("caf\x65\xcc\x81 O\n");
  CHECK(c.sentences[0].tokens[0].surface == "caf\xc3\xa9");
  const auto lower = parse_conll("ABC O\n", {}, "<memory>", [](const std::string& s) {
    std::string out = s;
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
  });
  CHECK(lower.sentences[0].tokens[0].surface == "abc");
}

TEST_CASE("write_conll round-trips") {
  const std::string text = "# id a\nJohn NNP B-PER\nran VBD O\n\n# id b\nin IN O\nDhaka NNP B-LOC\n\n";
  ColumnConfig cols;
  cols.pos_column = 1;
  const auto c = parse_conll(text, cols);
  CHECK(write_conll(c) == text);
  CHECK(parse_conll(write_conll(c), cols).same_content(c));
}

TEST_CASE("validate, repair and extract") {
  CHECK(validate_bio({"B-PER", "I-PER", "O"}).empty());
  CHECK(validate_bio({"O", "I-PER", "B-LOC", "I-PER"}) == std::vector<std::size_t>{1, 3});
  CHECK(repair_bio({"O", "I-PER", "I-PER", "B-LOC", "I-PER"}) ==
        std::vector<std::string>{"O", "B-PER", "I-PER", "B-LOC", "B-PER"});
  const auto chunks = extract_chunks({"B-PER", "I-PER", "O", "B-LOC", "B-LOC"});
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0] == Chunk{"PER", 0, 2});
  CHECK(chunks[1] == Chunk{"LOC", 3, 4});
  CHECK(chunks[2] == Chunk{"LOC", 4, 5});
  CHECK_THROWS_AS(extract_chunks({"I-PER"}), ValidationError);
}

TEST_CASE("extract_chunks matches span enumeration on random sequences") {
  Rng rng(11);
  const std::vector<std::string> classes{"CW", "PER", "LOC"};
  for (int trial = 0; trial < 500; ++trial) {
    const auto tags = oracle::random_valid_tags(rng, 1 + rng.below(9), classes);
    std::vector<oracle::Triple> got;
    for (const auto& c : extract_chunks(tags)) got.emplace_back(c.cls, c.start, c.end);
    CHECK(got == oracle::chunks_by_spans(tags));
  }
}

TEST_CASE("repair output always validates and is idempotent") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto raw = oracle::random_raw_tags(rng, 1 + rng.below(8), {"A", "B"});
    const auto fixed = repair_bio(raw);
    CHECK(validate_bio(fixed).empty());
    CHECK(repair_bio(fixed) == fixed);
    CHECK(fixed == oracle::repair(raw));
  }
}

TEST_CASE("split arithmetic") {
  CHECK(split_point(10, 0.7) == 7);
  CHECK(split_point(15300, 0.7) == 10710);
  CHECK(split_point(3, 0.5) == 2);
  Rng rng(1);
  const auto c = oracle::random_corpus(rng, 40, 5, {"PER"});
  const auto [a, b] = split_corpus(c, 0.7, 42);
  CHECK(a.size() == 28);
  CHECK(b.size() == 12);
  CHECK(a.tagset == c.tagset);
  const auto [a2, b2] = split_corpus(c, 0.7, 42);
  CHECK(a2.same_content(a));
  std::set<std::string> ids;
  for (const auto& s : a.sentences) ids.insert(s.id);
  for (const auto& s : b.sentences) ids.insert(s.id);
  CHECK(ids.size() == 40);
  CHECK_THROWS_AS(split_corpus(c, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(split_corpus(c, 0.0, 1), ValidationError);
}

TEST_CASE("corpus statistics") {
  const auto c = parse_conll("a B-PER\nb I-PER\nc O\n\nd B-LOC\ne B-PER\n");
  const auto s = corpus_stats(c);
  CHECK(s.sentences == 2);
  CHECK(s.tokens == 5);
  CHECK(s.chunks == 3);
  CHECK(s.single_token_chunks == 2);
  CHECK(s.multi_token_chunks == 1);
  CHECK(s.class_frequency.at("PER") == 2);
  CHECK(s.class_frequency.at("LOC") == 1);
  CHECK(s.render_key_values().find("class.PER=2\n") != std::string::npos);
}
