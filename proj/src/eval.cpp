#include "nerkit/eval.hpp"

#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "nerkit/error.hpp"

namespace nerkit {

namespace {

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

}  // namespace

EvalReport evaluate_sequences(const TagSequences& gold, const TagSequences& predicted) {
  if (gold.size() != predicted.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                         std::to_string(predicted.size()));
  }
  EvalReport report;
  std::size_t correct_tokens = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != predicted[i].size()) {
      throw AlignmentError("sentence " + std::to_string(i) + ": " + std::to_string(gold[i].size()) +
                           " gold tags vs " + std::to_string(predicted[i].size()) + " predicted");
    }
    for (std::size_t j = 0; j < gold[i].size(); ++j) {
      if (gold[i][j] == predicted[i][j]) ++correct_tokens;
    }
    report.tokens += gold[i].size();

    const auto gold_chunks = extract_chunks(repair_bio(gold[i]));
    const auto pred_chunks = extract_chunks(repair_bio(predicted[i]));
    std::set<Chunk> gold_set(gold_chunks.begin(), gold_chunks.end());
    for (const auto& c : gold_chunks) ++report.per_class[c.cls].support;
    for (const auto& c : pred_chunks) {
      auto& scores = report.per_class[c.cls];
      ++scores.predicted;
      if (gold_set.count(c)) ++scores.true_positives;
    }
  }

  for (auto& [cls, s] : report.per_class) {
    s.precision = ratio(s.true_positives, s.predicted);
    s.recall = ratio(s.true_positives, s.support);
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    report.macro_precision += s.precision;
    report.macro_recall += s.recall;
    report.macro_f1 += s.f1;
  }
  if (!report.per_class.empty()) {
    const double k = static_cast<double>(report.per_class.size());
    report.macro_precision /= k;
    report.macro_recall /= k;
    report.macro_f1 /= k;
  }
  report.token_accuracy = ratio(correct_tokens, report.tokens);
  return report;
}

EvalReport evaluate(const LabeledCorpus& gold, const TagSequences& predicted) {
  if (predicted.size() != gold.sentences.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.sentences.size()) + " sentences, predictions have " +
                         std::to_string(predicted.size()));
  }
  TagSequences gold_tags;
  gold_tags.reserve(gold.sentences.size());
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    if (predicted[i].size() != gold.sentences[i].size()) {
      throw AlignmentError("sentence '" + gold.sentences[i].id + "': " + std::to_string(gold.sentences[i].size()) +
                           " gold tokens vs " + std::to_string(predicted[i].size()) + " predicted");
    }
    gold_tags.push_back(gold.sentences[i].gold_tags());
  }
  return evaluate_sequences(gold_tags, predicted);
}

std::string EvalReport::render_table() const {
  std::size_t width = 5;
  for (const auto& [cls, s] : per_class) width = std::max(width, cls.size());
  const int w = static_cast<int>(width) + 2;
  std::ostringstream out;
  out << std::left << std::setw(w) << "class" << std::setw(11) << "precision" << std::setw(11) << "recall"
      << std::setw(11) << "f1" << "support\n";
  for (const auto& [cls, s] : per_class) {
    out << std::setw(w) << cls << std::setw(11) << fixed(s.precision) << std::setw(11) << fixed(s.recall)
        << std::setw(11) << fixed(s.f1) << s.support << '\n';
  }
  out << '\n';
  out << std::setw(w) << "macro" << std::setw(11) << fixed(macro_precision) << std::setw(11) << fixed(macro_recall)
      << fixed(macro_f1) << '\n';
  out << "token accuracy " << fixed(token_accuracy) << " over " << tokens << " tokens\n";
  return out.str();
}

std::string EvalReport::render_key_values() const {
  std::ostringstream out;
  out << "macro_precision=" << fixed(macro_precision, 6) << '\n';
  out << "macro_recall=" << fixed(macro_recall, 6) << '\n';
  out << "macro_f1=" << fixed(macro_f1, 6) << '\n';
  out << "token_accuracy=" << fixed(token_accuracy, 6) << '\n';
  out << "tokens=" << tokens << '\n';
  for (const auto& [cls, s] : per_class) {
    out << "class." << cls << ".precision=" << fixed(s.precision, 6) << '\n';
    out << "class." << cls << ".recall=" << fixed(s.recall, 6) << '\n';
    out << "class." << cls << ".f1=" << fixed(s.f1, 6) << '\n';
    out << "class." << cls << ".support=" << s.support << '\n';
  }
  return out.str();
}

std::vector<MetricDelta> compare_reports(const EvalReport& a, const EvalReport& b) {
  std::set<std::string> ca, cb;
  for (const auto& [cls, s] : a.per_class) ca.insert(cls);
  for (const auto& [cls, s] : b.per_class) cb.insert(cls);
  if (ca != cb) throw ValidationError("reports cover different class sets");

  std::vector<MetricDelta> out;
  auto add = [&](std::string name, double x, double y) { out.push_back({std::move(name), x, y, y - x}); };
  add("macro_precision", a.macro_precision, b.macro_precision);
  add("macro_recall", a.macro_recall, b.macro_recall);
  add("macro_f1", a.macro_f1, b.macro_f1);
  add("token_accuracy", a.token_accuracy, b.token_accuracy);
  for (const auto& [cls, s] : a.per_class) {
    const auto& t = b.per_class.at(cls);
    add("class." + cls + ".precision", s.precision, t.precision);
    add("class." + cls + ".recall", s.recall, t.recall);
    add("class." + cls + ".f1", s.f1, t.f1);
  }
  return out;
}

std::string render_deltas(const std::vector<MetricDelta>& deltas) {
  std::size_t width = 6;
  for (const auto& d : deltas) width = std::max(width, d.metric.size());
  std::ostringstream out;
  const int w = static_cast<int>(width) + 2;
  out << std::left << std::setw(w) << "metric" << std::setw(10) << "a" << std::setw(10) << "b" << "delta\n";
  for (const auto& d : deltas) {
    char sign[32];
    std::snprintf(sign, sizeof sign, "%+.4f", d.delta);
    out << std::setw(w) << d.metric << std::setw(10) << fixed(d.a) << std::setw(10) << fixed(d.b) << sign << '\n';
  }
  return out.str();
}

}  // namespace nerkit
