#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nerkit {

struct Token {
  std::string surface;
  std::optional<std::string> pos;
  std::string gold_tag;
  // Columns between the token and the gold tag, kept verbatim for writing.
  std::vector<std::string> middle;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> gold_tags() const;
  bool operator==(const Sentence&) const = default;
};

// Class inventory plus the derived BIO label list: O, then B-X, I-X for each
// class in sorted order.
class TagSet {
 public:
  TagSet() : labels_{"O"} {}
  explicit TagSet(std::vector<std::string> classes);

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  bool has_class(std::string_view cls) const;
  std::optional<std::size_t> index_of(std::string_view label) const;
  // Throws ValidationError for unknown labels.
  std::size_t index(std::string_view label) const;
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  TagSet merged(const TagSet& other) const;

  bool operator==(const TagSet& o) const { return classes_ == o.classes_; }

 private:
  std::vector<std::string> classes_;
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct LabeledCorpus {
  std::vector<Sentence> sentences;
  TagSet tagset;
  std::vector<std::string> provenance;
  bool has_gold = true;

  std::size_t size() const { return sentences.size(); }
  std::size_t token_count() const;
  // Sentences and tagset only; provenance is bookkeeping.
  bool same_content(const LabeledCorpus& other) const;
};

struct Chunk {
  std::string cls;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  auto operator<=>(const Chunk&) const = default;
};

// Parsed form of a single BIO label.
struct BioLabel {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string cls;
};

std::optional<BioLabel> parse_bio_label(std::string_view label);
bool is_bio_label(std::string_view label);

struct ColumnConfig {
  std::size_t token_column = 0;
  // Negative values count from the end; -1 is the last column.
  int tag_column = -1;
  std::optional<std::size_t> pos_column;
  // When false every line is a bare token (plus optional middle columns) and
  // gold tags are set to O.
  bool labeled = true;
};

// Applied to every token surface after Unicode NFC.
using TextNormalizer = std::function<std::string(const std::string&)>;

std::string nfc_normalize(const std::string& text);

LabeledCorpus parse_conll(std::string_view text, const ColumnConfig& columns = {},
                          const std::string& source_name = "<memory>",
                          const TextNormalizer& normalizer = {});

LabeledCorpus read_conll_file(const std::string& path, const ColumnConfig& columns = {},
                              const TextNormalizer& normalizer = {});

// predictions, when given, must align token for token and are appended as an
// extra column after the gold tag.
std::string write_conll(const LabeledCorpus& corpus,
                        const std::vector<std::vector<std::string>>* predictions = nullptr);

std::vector<std::size_t> validate_bio(const std::vector<std::string>& tags);
std::vector<std::string> repair_bio(const std::vector<std::string>& tags);
std::vector<Chunk> extract_chunks(const std::vector<std::string>& tags);

std::pair<LabeledCorpus, LabeledCorpus> split_corpus(const LabeledCorpus& corpus,
                                                     double train_fraction, std::uint64_t seed);

// Size of the first partition for n items, i.e. ceil(n * fraction) with a
// tolerance for binary rounding of the product.
std::size_t split_point(std::size_t n, double fraction);

struct StatsReport {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t chunks = 0;
  std::size_t single_token_chunks = 0;
  std::size_t multi_token_chunks = 0;
  std::map<std::string, std::size_t> class_frequency;

  std::string render_table() const;
  std::string render_key_values() const;
};

StatsReport corpus_stats(const LabeledCorpus& corpus);

// Infers the tagset from the classes that appear in the gold tags.
TagSet infer_tagset(const std::vector<Sentence>& sentences);

}  // namespace nerkit
