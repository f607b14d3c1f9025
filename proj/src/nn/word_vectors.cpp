#include "nerkit/nn/word_vectors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nerkit/corpus.hpp"
#include "nerkit/error.hpp"

namespace nerkit::nn {

namespace {

std::vector<std::string> fields_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string f;
  while (in >> f) out.push_back(f);
  return out;
}

bool parse_unsigned(const std::string& s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

const std::vector<double>* WordVectors::find(const std::string& token) const {
  auto it = vectors.find(token);
  return it == vectors.end() ? nullptr : &it->second;
}

WordVectors parse_word_vectors(std::string_view text, const std::string& source) {
  WordVectors result;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared_count = 0;
  bool has_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = fields_of(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, dim = 0;
      if (parse_unsigned(fields[0], count) && parse_unsigned(fields[1], dim)) {
        has_header = true;
        declared_count = count;
        result.dim = dim;
        continue;
      }
    }
    const std::size_t dim = fields.size() - 1;
    if (dim == 0) throw ParseError(source, line_no, "word vector line has no components");
    if (result.dim == 0) result.dim = dim;
    if (dim != result.dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(result.dim) + " components, found " + std::to_string(dim));
    }
    std::vector<double> values(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      try {
        std::size_t used = 0;
        values[i] = std::stod(fields[i + 1], &used);
        if (used != fields[i + 1].size() || !std::isfinite(values[i])) throw std::invalid_argument("bad");
      } catch (const std::exception&) {
        throw ParseError(source, line_no, "component '" + fields[i + 1] + "' is not a finite number");
      }
    }
    result.vectors[nfc_normalize(fields[0])] = std::move(values);
  }
  if (has_header && declared_count != result.vectors.size()) {
    throw ParseError(source, 1, "header declares " + std::to_string(declared_count) + " vectors, file has " +
                                    std::to_string(result.vectors.size()));
  }
  return result;
}

WordVectors read_word_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_word_vectors(buffer.str(), path);
}

}  // namespace nerkit::nn
