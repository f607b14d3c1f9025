#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nerkit/nn/matrix.hpp"
#include "nerkit/nn/param_store.hpp"
#include "nerkit/random.hpp"

namespace nerkit::nn {

enum class Mode { train, eval };

// Each layer is a small descriptor (parameter names plus dimensions). The
// parameters themselves live in a ParamStore; forward fills a cache that the
// matching backward consumes, and backward accumulates into the store's
// gradient slots.

// Row lookup into a [vocab x dim] table. Index 0 is reserved for unknowns.
Matrix embed_lookup(const Matrix& table, std::span<const std::size_t> indices);
void embed_backward(std::span<const std::size_t> indices, const Matrix& d_out, Matrix& d_table);

class Embedding {
 public:
  Embedding() = default;
  Embedding(std::string name, std::size_t vocab, std::size_t dim) : name_(std::move(name)), vocab_(vocab), dim_(dim) {}

  void init(ParamStore& store, Rng& rng) const;
  Matrix forward(const ParamStore& store, std::span<const std::size_t> indices) const;
  void backward(ParamStore& store, std::span<const std::size_t> indices, const Matrix& d_out) const;

  const std::string& table_name() const { return name_; }
  std::size_t dim() const { return dim_; }
  std::size_t vocab() const { return vocab_; }

 private:
  std::string name_;
  std::size_t vocab_ = 0;
  std::size_t dim_ = 0;
};

struct LinearCache {
  Matrix input;
};

Matrix linear_forward(const Matrix& x, const Matrix& weight, const Matrix& bias, LinearCache* cache = nullptr);
// Returns the input gradient; accumulates into d_weight and d_bias.
Matrix linear_backward(const LinearCache& cache, const Matrix& weight, const Matrix& d_out, Matrix& d_weight,
                       Matrix& d_bias);

class Linear {
 public:
  Linear() = default;
  Linear(std::string prefix, std::size_t in, std::size_t out) : prefix_(std::move(prefix)), in_(in), out_(out) {}

  void init(ParamStore& store, Rng& rng) const;
  Matrix forward(const ParamStore& store, const Matrix& x, LinearCache* cache) const;
  Matrix backward(ParamStore& store, const LinearCache& cache, const Matrix& d_out) const;

  std::string weight_name() const { return prefix_ + ".weight"; }
  std::string bias_name() const { return prefix_ + ".bias"; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

struct CharCnnCache {
  Matrix padded;          // [max(m, k) x d]
  Matrix pre_activation;  // [positions x filters]
  std::vector<std::size_t> argmax;
  std::size_t input_rows = 0;
  std::size_t positions() const { return pre_activation.rows(); }
};

// Convolution over character positions, ReLU, then max-pool to one row of
// `filters` values. weight is [kernel * d x filters], bias [1 x filters].
Matrix char_cnn_forward(const Matrix& chars, std::size_t kernel, const Matrix& weight, const Matrix& bias,
                        CharCnnCache* cache = nullptr);
// Gradient flows only through the first maximal position of each filter.
Matrix char_cnn_backward(const CharCnnCache& cache, std::size_t kernel, const Matrix& weight, const Matrix& d_out,
                         Matrix& d_weight, Matrix& d_bias);

class CharCnn {
 public:
  CharCnn() = default;
  CharCnn(std::string prefix, std::size_t char_dim, std::size_t kernel, std::size_t filters);

  void init(ParamStore& store, Rng& rng) const;
  Matrix forward(const ParamStore& store, const Matrix& chars, CharCnnCache* cache) const;
  Matrix backward(ParamStore& store, const CharCnnCache& cache, const Matrix& d_out) const;

  std::size_t filters() const { return filters_; }

 private:
  std::string prefix_;
  std::size_t char_dim_ = 0;
  std::size_t kernel_ = 0;
  std::size_t filters_ = 0;
};

// Single-direction LSTM over a sequence. Gate blocks in the 4h columns are
// ordered input, forget, cell candidate, output.
struct LstmWeights {
  const Matrix& input_weight;      // [d x 4h]
  const Matrix& recurrent_weight;  // [h x 4h]
  const Matrix& bias;              // [1 x 4h]
};

struct LstmGrads {
  Matrix& input_weight;
  Matrix& recurrent_weight;
  Matrix& bias;
};

struct LstmCache {
  Matrix input;
  Matrix gates;  // activated gates per step, [n x 4h]
  Matrix cells;  // [n x h]
  Matrix hidden; // [n x h]
  bool reverse = false;
};

Matrix lstm_forward(const Matrix& x, const LstmWeights& w, bool reverse, LstmCache* cache = nullptr);
Matrix lstm_backward(const LstmCache& cache, const LstmWeights& w, const Matrix& d_hidden, const LstmGrads& g);

struct BiLstmCache {
  std::vector<LstmCache> forward_dir;
  std::vector<LstmCache> backward_dir;
};

class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(std::string prefix, std::size_t input_dim, std::size_t hidden, std::size_t layers);

  void init(ParamStore& store, Rng& rng) const;
  // [n x input_dim] -> [n x 2h]; each layer feeds the next.
  Matrix forward(const ParamStore& store, const Matrix& x, BiLstmCache* cache) const;
  Matrix backward(ParamStore& store, const BiLstmCache& cache, const Matrix& d_out) const;

  std::size_t output_dim() const { return 2 * hidden_; }

 private:
  std::string name(std::size_t layer, bool reverse, const char* what) const;

  std::string prefix_;
  std::size_t input_dim_ = 0;
  std::size_t hidden_ = 0;
  std::size_t layers_ = 0;
};

struct MhaCache {
  Matrix input;
  Matrix queries, keys, values;
  std::vector<Matrix> attention;  // per head, [n x n], rows sum to 1
  Matrix context;                 // concatenated head outputs [n x d]
};

// Scaled dot-product self-attention with `heads` heads, no mask, followed by
// an output projection.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::string prefix, std::size_t dim, std::size_t heads);

  void init(ParamStore& store, Rng& rng) const;
  Matrix forward(const ParamStore& store, const Matrix& x, MhaCache* cache) const;
  Matrix backward(ParamStore& store, const MhaCache& cache, const Matrix& d_out) const;

  std::string param(const char* what) const { return prefix_ + "." + what; }

 private:
  std::string prefix_;
  std::size_t dim_ = 0;
  std::size_t heads_ = 0;
};

// Inverted dropout. In eval mode, or with rate 0, the input is returned as is
// and the mask is all ones.
Matrix dropout_apply(const Matrix& x, double rate, Mode mode, Rng& rng, Matrix* mask = nullptr);
Matrix dropout_apply(const Matrix& x, double rate, Mode mode, std::uint64_t seed, Matrix* mask = nullptr);

// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);
double log_sum_exp(std::span<const double> xs);

}  // namespace nerkit::nn
