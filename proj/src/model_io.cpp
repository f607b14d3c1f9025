#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nerkit/error.hpp"
#include "nerkit/tagger.hpp"

namespace nerkit {

namespace {

class LineReader {
 public:
  LineReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  std::string_view next() {
    if (pos_ >= text_.size()) throw ParseError(source_ + ": truncated model file (line " + std::to_string(line_ + 1) + ")");
    auto nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) {
      throw ParseError(source_ + ": truncated model file (line " + std::to_string(line_ + 1) + ")");
    }
    auto line = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    ++line_;
    return line;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

  bool at_end() const { return pos_ >= text_.size(); }

 private:
  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::size_t to_size(LineReader& in, std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) in.fail("expected an integer, found '" + std::string(s) + "'");
  return v;
}

std::size_t expect_count(LineReader& in, std::string_view expected_tag) {
  auto w = words(in.next());
  auto tag = words(expected_tag);
  if (w.size() != tag.size() + 1 || !std::equal(tag.begin(), tag.end(), w.begin())) {
    in.fail("expected '" + std::string(expected_tag) + " <count>'");
  }
  return to_size(in, w.back());
}

void write_vocab(std::string& out, const char* name, const Vocabulary& v) {
  out += "vocab " + std::string(name) + " " + std::to_string(v.size()) + "\n";
  for (const auto& item : v.items()) out += item + "\n";
}

Vocabulary read_vocab(LineReader& in, const char* name) {
  const std::size_t n = expect_count(in, std::string("vocab ") + name);
  if (n == 0) in.fail("vocabulary must contain the unknown entry");
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) {
    std::string item(in.next());
    if (i == 0) continue;
    if (v.add(item) != i) in.fail("duplicate vocabulary entry '" + item + "'");
  }
  return v;
}

}  // namespace

std::string serialize_model(const TaggerModel& model) {
  std::string out;
  out += std::string(kModelFormat) + " " + std::to_string(kModelVersion) + "\n";
  const std::string config = model.config.to_text();
  const auto config_lines = static_cast<std::size_t>(std::count(config.begin(), config.end(), '\n'));
  out += "config " + std::to_string(config_lines) + "\n" + config;
  out += "contextual_dim " + std::to_string(model.contextual_dim) + "\n";
  out += "classes " + std::to_string(model.tagset.classes().size()) + "\n";
  for (const auto& c : model.tagset.classes()) out += c + "\n";
  write_vocab(out, "words", model.words);
  write_vocab(out, "chars", model.chars);
  write_vocab(out, "pos", model.pos_tags);
  out += "params " + std::to_string(model.params.size()) + "\n";
  for (const auto& [name, p] : model.params) {
    out += "param " + name + " " + std::to_string(p.value.rows()) + " " + std::to_string(p.value.cols()) + " " +
           (p.frozen ? "1" : "0") + "\n";
    for (std::size_t r = 0; r < p.value.rows(); ++r) {
      auto row = p.value.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ' ';
        out += format_double(row[c]);
      }
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

TaggerModel deserialize_model(std::string_view text, const std::string& source) {
  LineReader in(text, source);
  {
    auto header = words(in.next());
    if (header.size() != 2 || header[0] != kModelFormat) in.fail("not a nerkit model file");
    if (to_size(in, header[1]) != static_cast<std::size_t>(kModelVersion)) {
      in.fail("unsupported model format version " + std::string(header[1]));
    }
  }
  TaggerModel m;
  {
    const std::size_t n = expect_count(in, "config");
    std::string config;
    for (std::size_t i = 0; i < n; ++i) {
      config += in.next();
      config += '\n';
    }
    m.config = TaggerConfig::from_text(config, source);
  }
  m.contextual_dim = expect_count(in, "contextual_dim");
  {
    const std::size_t n = expect_count(in, "classes");
    std::vector<std::string> classes;
    for (std::size_t i = 0; i < n; ++i) classes.emplace_back(in.next());
    m.tagset = TagSet(std::move(classes));
  }
  m.words = read_vocab(in, "words");
  m.chars = read_vocab(in, "chars");
  m.pos_tags = read_vocab(in, "pos");
  const std::size_t params = expect_count(in, "params");
  for (std::size_t k = 0; k < params; ++k) {
    auto w = words(in.next());
    if (w.size() != 5 || w[0] != "param") in.fail("expected 'param <name> <rows> <cols> <frozen>'");
    const std::size_t rows = to_size(in, w[2]);
    const std::size_t cols = to_size(in, w[3]);
    nn::Matrix value(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      auto fields = words(in.next());
      if (fields.size() != cols) in.fail("parameter row has " + std::to_string(fields.size()) + " values");
      for (std::size_t c = 0; c < cols; ++c) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
        if (ec != std::errc() || ptr != fields[c].data() + fields[c].size() || !std::isfinite(v)) {
          in.fail("bad parameter value '" + std::string(fields[c]) + "'");
        }
        value(r, c) = v;
      }
    }
    m.params.add(std::string(w[1]), std::move(value), w[4] == "1");
  }
  if (in.next() != "end") in.fail("expected 'end'");
  if (!in.at_end()) in.fail("trailing data after 'end'");

  try {
    check_parameter_layout(m);
  } catch (const ValidationError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return m;
}

void save_model(const TaggerModel& model, const std::string& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str(), path);
}

}  // namespace nerkit
