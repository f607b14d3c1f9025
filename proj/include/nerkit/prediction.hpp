#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nerkit/corpus.hpp"

namespace nerkit {

struct TokenPrediction {
  std::string label;
  double score = 0.0;  // in [0, 1]

  bool operator==(const TokenPrediction&) const = default;
};

// Per-sentence, per-token predictions of one model over a reference corpus.
struct PredictionSet {
  std::string model_id;
  std::vector<std::vector<TokenPrediction>> sentences;
};

// A prediction file parsed back: the tokens (with gold tags when the file has
// them) plus the predictions.
struct PredictionFile {
  LabeledCorpus corpus;
  PredictionSet predictions;
};

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

// Lines are "token [gold] predicted score", sentences headed by "# id" lines.
// The gold column is written only when the corpus has gold tags.
std::string write_prediction_file(const LabeledCorpus& corpus, const PredictionSet& predictions);
PredictionFile parse_prediction_file(std::string_view text, const std::string& source_name = "<memory>");
PredictionFile read_prediction_file(const std::string& path);

// Predicted labels only, one vector per sentence.
std::vector<std::vector<std::string>> labels_of(const PredictionSet& set);

// Checks that every sentence and token count matches; throws AlignmentError
// naming the model and sentence otherwise.
void check_alignment(const PredictionSet& set, const LabeledCorpus& reference);

}  // namespace nerkit
