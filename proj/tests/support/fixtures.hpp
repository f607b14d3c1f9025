#pragma once

#include <string>

#include "nerkit/corpus.hpp"
#include "nerkit/random.hpp"

namespace fixture {

// Synthetic corpus with three entity classes whose mentions are drawn from
// small per-class word lists, so a tagger can fit it exactly.
inline nerkit::LabeledCorpus synthetic_ner(std::size_t sentences, std::uint64_t seed, bool with_pos = false) {
  static const char* fillers[] = {"the", "a", "went", "to", "with", "saw", "and", "from", "said", "today"};
  static const char* per[] = {"anna", "rahim", "karim", "mitu", "sofia"};
  static const char* loc[] = {"dhaka", "paris", "sylhet", "delhi"};
  static const char* cw[] = {"titanic", "gitanjali", "inception"};
  nerkit::Rng rng(seed);
  std::string text;
  for (std::size_t s = 0; s < sentences; ++s) {
    text += "# id syn" + std::to_string(s + 1) + "\n";
    const auto len = 3 + rng.below(5);
    for (std::size_t i = 0; i < len; ++i) {
      const auto kind = rng.below(5);
      auto emit = [&](const std::string& w, const std::string& pos, const std::string& tag) {
        text += w + (with_pos ? " " + pos : "") + " " + tag + "\n";
      };
      if (kind == 0) {
        emit(per[rng.below(5)], "NNP", "B-PER");
        if (rng.below(2)) emit(per[rng.below(5)], "NNP", "I-PER");
      } else if (kind == 1) {
        emit(loc[rng.below(4)], "NNP", "B-LOC");
      } else if (kind == 2) {
        emit(cw[rng.below(3)], "NN", "B-CW");
        emit("part", "NN", "I-CW");
      } else {
        emit(fillers[rng.below(10)], "X", "O");
      }
    }
    text += "\n";
  }
  nerkit::ColumnConfig cols;
  if (with_pos) cols.pos_column = 1;
  return nerkit::parse_conll(text, cols, "synthetic");
}

}  // namespace fixture
