#include "nerkit/prediction.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nerkit/error.hpp"

namespace nerkit {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, ptr);
}

namespace {

bool parse_score(const std::string& s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::string write_prediction_file(const LabeledCorpus& corpus, const PredictionSet& predictions) {
  check_alignment(predictions, corpus);
  std::string out;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    out += "# id " + s.id + "\n";
    for (std::size_t j = 0; j < s.tokens.size(); ++j) {
      const auto& p = predictions.sentences[i][j];
      out += s.tokens[j].surface;
      if (corpus.has_gold) out += " " + s.tokens[j].gold_tag;
      out += " " + p.label + " " + format_double(p.score) + "\n";
    }
    out += "\n";
  }
  return out;
}

PredictionFile parse_prediction_file(std::string_view text, const std::string& source_name) {
  // Reuse the CoNLL reader: the last column is the score, the one before it
  // the predicted label, and with four or more columns the gold tag precedes
  // them.
  ColumnConfig columns;
  columns.labeled = false;
  LabeledCorpus raw = parse_conll(text, columns, source_name);

  PredictionFile file;
  file.predictions.model_id = source_name;
  file.corpus.provenance = raw.provenance;
  const std::size_t width = raw.sentences.front().tokens.front().middle.size() + 1;
  if (width < 3) throw ParseError(source_name + ": prediction files need token, label and score columns");
  file.corpus.has_gold = width >= 4;

  for (auto& s : raw.sentences) {
    Sentence sentence{s.id, {}};
    std::vector<TokenPrediction> preds;
    for (auto& t : s.tokens) {
      auto& cols = t.middle;
      TokenPrediction p;
      if (!parse_score(cols.back(), p.score) || p.score < 0.0 || p.score > 1.0) {
        throw ParseError(source_name + ": sentence '" + s.id + "': score '" + cols.back() + "' is not in [0, 1]");
      }
      p.label = cols[cols.size() - 2];
      if (!is_bio_label(p.label)) {
        throw ParseError(source_name + ": sentence '" + s.id + "': '" + p.label + "' is not a BIO label");
      }
      Token token;
      token.surface = t.surface;
      token.gold_tag = "O";
      if (file.corpus.has_gold) {
        token.gold_tag = cols[cols.size() - 3];
        if (!is_bio_label(token.gold_tag)) {
          throw ParseError(source_name + ": sentence '" + s.id + "': '" + token.gold_tag + "' is not a BIO label");
        }
        token.middle.assign(cols.begin(), cols.end() - 3);
      } else {
        token.middle.assign(cols.begin(), cols.end() - 2);
      }
      sentence.tokens.push_back(std::move(token));
      preds.push_back(std::move(p));
    }
    file.corpus.sentences.push_back(std::move(sentence));
    file.predictions.sentences.push_back(std::move(preds));
  }
  file.corpus.tagset = infer_tagset(file.corpus.sentences);
  return file;
}

PredictionFile read_prediction_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_prediction_file(buffer.str(), path);
}

std::vector<std::vector<std::string>> labels_of(const PredictionSet& set) {
  std::vector<std::vector<std::string>> out;
  out.reserve(set.sentences.size());
  for (const auto& s : set.sentences) {
    std::vector<std::string> labels;
    labels.reserve(s.size());
    for (const auto& p : s) labels.push_back(p.label);
    out.push_back(std::move(labels));
  }
  return out;
}

void check_alignment(const PredictionSet& set, const LabeledCorpus& reference) {
  if (set.sentences.size() != reference.sentences.size()) {
    throw AlignmentError("model '" + set.model_id + "' has " + std::to_string(set.sentences.size()) +
                         " sentences, reference has " + std::to_string(reference.sentences.size()));
  }
  for (std::size_t i = 0; i < reference.sentences.size(); ++i) {
    if (set.sentences[i].size() != reference.sentences[i].size()) {
      throw AlignmentError("model '" + set.model_id + "' misaligned at sentence '" + reference.sentences[i].id +
                           "': " + std::to_string(set.sentences[i].size()) + " tokens vs " +
                           std::to_string(reference.sentences[i].size()));
    }
  }
}

}  // namespace nerkit
