#pragma once

#include <map>
#include <string>
#include <vector>

#include "nerkit/corpus.hpp"

namespace nerkit {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold chunks
  std::size_t predicted = 0;  // predicted chunks
  std::size_t true_positives = 0;
};

// Chunk-level scores with exact (class, start, end) matching. Empty
// denominators score 0. Macro averages run over every class that appears in
// the gold or the predicted chunks.
struct EvalReport {
  std::map<std::string, ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double token_accuracy = 0.0;
  std::size_t tokens = 0;

  std::string render_table() const;
  std::string render_key_values() const;
};

using TagSequences = std::vector<std::vector<std::string>>;

EvalReport evaluate(const LabeledCorpus& gold, const TagSequences& predicted);
EvalReport evaluate_sequences(const TagSequences& gold, const TagSequences& predicted);

struct MetricDelta {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
};

// Signed per-metric differences; both reports must cover the same classes.
std::vector<MetricDelta> compare_reports(const EvalReport& a, const EvalReport& b);
std::string render_deltas(const std::vector<MetricDelta>& deltas);

}  // namespace nerkit
