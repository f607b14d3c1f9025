#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nerkit::nn {

struct WordVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& token) const;
};

// Text format: one token per line followed by its components. An optional
// leading "count dim" header line is detected and checked.
WordVectors parse_word_vectors(std::string_view text, const std::string& source = "<memory>");
WordVectors read_word_vectors(const std::string& path);

}  // namespace nerkit::nn
