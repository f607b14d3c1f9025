#include "nerkit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "nerkit/error.hpp"
#include "nerkit/random.hpp"

namespace nerkit {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) fields.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); });
}

bool is_comment(std::string_view line) {
  return !line.empty() && line[0] == '#' && (line.size() == 1 || is_space(line[1]));
}

std::string comment_id(std::string_view line) {
  auto fields = split_fields(line.substr(1));
  if (fields.empty()) return {};
  if (fields[0] == "id" && fields.size() >= 2) return fields[1];
  return fields[0];
}

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_space(c) || c == '\n'; });
}

}  // namespace

std::vector<std::string> Sentence::gold_tags() const {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(t.gold_tag);
  return tags;
}

TagSet::TagSet(std::vector<std::string> classes) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (const auto& c : classes) {
    if (c.empty() || has_space(c)) throw ValidationError("invalid entity class name '" + c + "'");
  }
  classes_ = std::move(classes);
  labels_ = {"O"};
  for (const auto& c : classes_) {
    labels_.push_back("B-" + c);
    labels_.push_back("I-" + c);
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], i);
}

bool TagSet::has_class(std::string_view cls) const {
  return std::binary_search(classes_.begin(), classes_.end(), cls);
}

std::optional<std::size_t> TagSet::index_of(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TagSet::index(std::string_view label) const {
  auto idx = index_of(label);
  if (!idx) throw ValidationError("label '" + std::string(label) + "' is not in the tagset");
  return *idx;
}

TagSet TagSet::merged(const TagSet& other) const {
  std::vector<std::string> all = classes_;
  all.insert(all.end(), other.classes_.begin(), other.classes_.end());
  return TagSet(std::move(all));
}

std::size_t LabeledCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

bool LabeledCorpus::same_content(const LabeledCorpus& other) const {
  return sentences == other.sentences && tagset == other.tagset && has_gold == other.has_gold;
}

std::optional<BioLabel> parse_bio_label(std::string_view label) {
  if (label == "O") return BioLabel{'O', {}};
  if (label.size() < 3 || label[1] != '-') return std::nullopt;
  if (label[0] != 'B' && label[0] != 'I') return std::nullopt;
  auto cls = label.substr(2);
  if (has_space(cls)) return std::nullopt;
  return BioLabel{label[0], std::string(cls)};
}

bool is_bio_label(std::string_view label) { return parse_bio_label(label).has_value(); }

std::string nfc_normalize(const std::string& text) {
  if (std::all_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
    return text;
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(text);
  icu::UnicodeString output = nfc->normalize(input, status);
  if (U_FAILURE(status)) throw ValidationError("cannot NFC-normalize token '" + text + "'");
  std::string result;
  output.toUTF8String(result);
  return result;
}

TagSet infer_tagset(const std::vector<Sentence>& sentences) {
  std::set<std::string> classes;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      auto bio = parse_bio_label(t.gold_tag);
      if (bio && bio->prefix != 'O') classes.insert(bio->cls);
    }
  }
  return TagSet({classes.begin(), classes.end()});
}

LabeledCorpus parse_conll(std::string_view text, const ColumnConfig& columns,
                          const std::string& source_name, const TextNormalizer& normalizer) {
  if (std::all_of(text.begin(), text.end(), [](char c) { return is_space(c) || c == '\n'; })) {
    throw ParseError(source_name + ": empty input");
  }

  LabeledCorpus corpus;
  corpus.has_gold = columns.labeled;
  corpus.provenance.push_back(source_name);

  std::set<std::string> seen_ids;
  Sentence current;
  std::optional<std::string> pending_id;
  std::size_t field_count = 0;
  std::size_t generated = 0;

  auto flush = [&](std::size_t line_no) {
    if (current.tokens.empty()) {
      pending_id.reset();
      return;
    }
    ++generated;
    current.id = pending_id.value_or("s" + std::to_string(generated));
    if (!seen_ids.insert(current.id).second) {
      throw ParseError(source_name, line_no, "duplicate sentence id '" + current.id + "'");
    }
    corpus.sentences.push_back(std::move(current));
    current = Sentence{};
    pending_id.reset();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    if (is_blank(line)) {
      flush(line_no);
      continue;
    }
    if (is_comment(line) && current.tokens.empty()) {
      pending_id = comment_id(line);
      if (pending_id->empty()) pending_id.reset();
      continue;
    }

    auto fields = split_fields(line);
    if (field_count == 0) {
      field_count = fields.size();
      if (columns.labeled && field_count < 2) {
        throw ParseError(source_name, line_no, "expected a token column and a tag column, found " +
                                                   std::to_string(field_count) + " column(s)");
      }
    }
    if (fields.size() != field_count) {
      throw ParseError(source_name, line_no,
                       "expected " + std::to_string(field_count) + " columns, found " + std::to_string(fields.size()));
    }

    std::size_t tag_col = fields.size();
    if (columns.labeled) {
      const long resolved = columns.tag_column < 0 ? static_cast<long>(fields.size()) + columns.tag_column
                                                   : static_cast<long>(columns.tag_column);
      if (resolved < 0 || resolved >= static_cast<long>(fields.size())) {
        throw ParseError(source_name, line_no, "tag column out of range");
      }
      tag_col = static_cast<std::size_t>(resolved);
    }
    if (columns.token_column >= fields.size() || columns.token_column == tag_col) {
      throw ParseError(source_name, line_no, "token column out of range");
    }

    Token token;
    token.surface = nfc_normalize(fields[columns.token_column]);
    if (normalizer) token.surface = normalizer(token.surface);
    if (token.surface.empty() || has_space(token.surface)) {
      throw ParseError(source_name, line_no, "token surface empty or contains whitespace after normalization");
    }
    if (columns.labeled) {
      token.gold_tag = fields[tag_col];
      if (!is_bio_label(token.gold_tag)) {
        throw ParseError(source_name, line_no, "tag '" + token.gold_tag + "' is not a BIO label");
      }
    } else {
      token.gold_tag = "O";
    }
    if (columns.pos_column) {
      if (*columns.pos_column >= fields.size()) throw ParseError(source_name, line_no, "POS column out of range");
      token.pos = fields[*columns.pos_column];
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c != columns.token_column && c != tag_col) token.middle.push_back(fields[c]);
    }
    current.tokens.push_back(std::move(token));
  }
  flush(line_no);

  if (corpus.sentences.empty()) throw ParseError(source_name + ": input contains no sentences");
  corpus.tagset = infer_tagset(corpus.sentences);
  return corpus;
}

LabeledCorpus read_conll_file(const std::string& path, const ColumnConfig& columns, const TextNormalizer& normalizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_conll(buffer.str(), columns, path, normalizer);
}

std::string write_conll(const LabeledCorpus& corpus, const std::vector<std::vector<std::string>>* predictions) {
  if (predictions) {
    if (predictions->size() != corpus.sentences.size()) {
      throw AlignmentError("predictions cover " + std::to_string(predictions->size()) + " sentences, corpus has " +
                           std::to_string(corpus.sentences.size()));
    }
    for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
      if ((*predictions)[i].size() != corpus.sentences[i].size()) {
        throw AlignmentError("prediction length mismatch in sentence '" + corpus.sentences[i].id + "'");
      }
    }
  }
  std::string out;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    out += "# id ";
    out += s.id;
    out += '\n';
    for (std::size_t j = 0; j < s.tokens.size(); ++j) {
      const auto& t = s.tokens[j];
      out += t.surface;
      if (!t.middle.empty()) {
        for (const auto& m : t.middle) {
          out += ' ';
          out += m;
        }
      } else if (t.pos) {
        out += ' ';
        out += *t.pos;
      }
      if (corpus.has_gold) {
        out += ' ';
        out += t.gold_tag;
      }
      if (predictions) {
        out += ' ';
        out += (*predictions)[i][j];
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<std::size_t> validate_bio(const std::vector<std::string>& tags) {
  std::vector<std::size_t> violations;
  std::optional<BioLabel> prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    auto bio = parse_bio_label(tags[i]);
    if (!bio) throw ValidationError("'" + tags[i] + "' is not a BIO label");
    if (bio->prefix == 'I') {
      const bool continues = prev && prev->prefix != 'O' && prev->cls == bio->cls;
      if (!continues) violations.push_back(i);
    }
    prev = std::move(bio);
  }
  return violations;
}

std::vector<std::string> repair_bio(const std::vector<std::string>& tags) {
  std::vector<std::string> repaired = tags;
  for (std::size_t i : validate_bio(tags)) repaired[i][0] = 'B';
  return repaired;
}

std::vector<Chunk> extract_chunks(const std::vector<std::string>& tags) {
  auto violations = validate_bio(tags);
  if (!violations.empty()) {
    throw ValidationError("invalid BIO sequence at index " + std::to_string(violations.front()) +
                          "; run repair_bio before extracting chunks");
  }
  std::vector<Chunk> chunks;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i][0] == 'B') {
      chunks.push_back({tags[i].substr(2), i, i + 1});
    } else if (tags[i][0] == 'I') {
      chunks.back().end = i + 1;
    }
  }
  return chunks;
}

std::size_t split_point(std::size_t n, double fraction) {
  const double exact = static_cast<double>(n) * fraction;
  const double nearest = std::round(exact);
  if (std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(exact));
}

std::pair<LabeledCorpus, LabeledCorpus> split_corpus(const LabeledCorpus& corpus, double train_fraction,
                                                     std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1)");
  }
  if (corpus.sentences.empty()) throw ValidationError("cannot split an empty corpus");

  std::vector<std::size_t> order(corpus.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t cut = split_point(order.size(), train_fraction);
  std::ostringstream tag;
  tag << "split(fraction=" << train_fraction << ", seed=" << seed << ")";

  auto make_part = [&](std::size_t begin, std::size_t end, const char* which) {
    LabeledCorpus part;
    part.tagset = corpus.tagset;
    part.has_gold = corpus.has_gold;
    part.provenance = corpus.provenance;
    part.provenance.push_back(tag.str() + ":" + which);
    for (std::size_t i = begin; i < end; ++i) part.sentences.push_back(corpus.sentences[order[i]]);
    return part;
  };
  return {make_part(0, cut, "train"), make_part(cut, order.size(), "dev")};
}

StatsReport corpus_stats(const LabeledCorpus& corpus) {
  StatsReport report;
  report.sentences = corpus.sentences.size();
  for (const auto& cls : corpus.tagset.classes()) report.class_frequency[cls] = 0;
  for (const auto& s : corpus.sentences) {
    report.tokens += s.size();
    for (const auto& chunk : extract_chunks(repair_bio(s.gold_tags()))) {
      ++report.chunks;
      ++report.class_frequency[chunk.cls];
      if (chunk.length() == 1) {
        ++report.single_token_chunks;
      } else {
        ++report.multi_token_chunks;
      }
    }
  }
  return report;
}

std::string StatsReport::render_table() const {
  std::size_t width = 5;
  for (const auto& [cls, n] : class_frequency) width = std::max(width, cls.size());
  std::ostringstream out;
  out << std::left;
  out << std::setw(20) << "sentences" << sentences << '\n';
  out << std::setw(20) << "tokens" << tokens << '\n';
  out << std::setw(20) << "chunks" << chunks << '\n';
  out << std::setw(20) << "single-token chunks" << single_token_chunks << '\n';
  out << std::setw(20) << "multi-token chunks" << multi_token_chunks << '\n';
  out << '\n';
  out << std::setw(static_cast<int>(width) + 2) << "class" << "chunks" << '\n';
  for (const auto& [cls, n] : class_frequency) {
    out << std::setw(static_cast<int>(width) + 2) << cls << n << '\n';
  }
  return out.str();
}

std::string StatsReport::render_key_values() const {
  std::ostringstream out;
  out << "sentences=" << sentences << '\n';
  out << "tokens=" << tokens << '\n';
  out << "chunks=" << chunks << '\n';
  out << "single_token_chunks=" << single_token_chunks << '\n';
  out << "multi_token_chunks=" << multi_token_chunks << '\n';
  for (const auto& [cls, n] : class_frequency) out << "class." << cls << '=' << n << '\n';
  return out.str();
}

}  // namespace nerkit
