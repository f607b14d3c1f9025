#include "nerkit/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "nerkit/error.hpp"

namespace nerkit::nn {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1))); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

// ---------------------------------------------------------------- embedding

Matrix embed_lookup(const Matrix& table, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), table.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= table.rows()) {
      throw ValidationError("embedding index " + std::to_string(indices[i]) + " out of range for " +
                            std::to_string(table.rows()) + " rows");
    }
    auto src = table.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void embed_backward(std::span<const std::size_t> indices, const Matrix& d_out, Matrix& d_table) {
  require(d_out.rows() == indices.size() && d_out.cols() == d_table.cols(), "embedding gradient shape mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto dst = d_table.row(indices[i]);
    auto src = d_out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  }
}

void Embedding::init(ParamStore& store, Rng& rng) const {
  store.add_uniform(name_, vocab_, dim_, fan_in_bound(dim_), rng);
}

Matrix Embedding::forward(const ParamStore& store, std::span<const std::size_t> indices) const {
  return embed_lookup(store.value(name_), indices);
}

void Embedding::backward(ParamStore& store, std::span<const std::size_t> indices, const Matrix& d_out) const {
  auto& p = store.at(name_);
  if (p.frozen) return;
  embed_backward(indices, d_out, p.grad);
}

// ---------------------------------------------------------------- linear

Matrix linear_forward(const Matrix& x, const Matrix& weight, const Matrix& bias, LinearCache* cache) {
  require(x.cols() == weight.rows() || x.rows() == 0,
          "linear input " + x.shape_string() + " does not fit weight " + weight.shape_string());
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "linear bias shape mismatch");
  if (cache) cache->input = x;
  if (x.rows() == 0) return Matrix(0, weight.cols());
  Matrix y = matmul(x, weight);
  add_row_bias(y, bias);
  return y;
}

Matrix linear_backward(const LinearCache& cache, const Matrix& weight, const Matrix& d_out, Matrix& d_weight,
                       Matrix& d_bias) {
  if (cache.input.rows() == 0) return Matrix(0, weight.rows());
  d_weight += matmul_tn(cache.input, d_out);
  d_bias += column_sums(d_out);
  return matmul_nt(d_out, weight);
}

void Linear::init(ParamStore& store, Rng& rng) const {
  const double bound = fan_in_bound(in_);
  store.add_uniform(weight_name(), in_, out_, bound, rng);
  store.add_uniform(bias_name(), 1, out_, bound, rng);
}

Matrix Linear::forward(const ParamStore& store, const Matrix& x, LinearCache* cache) const {
  return linear_forward(x, store.value(weight_name()), store.value(bias_name()), cache);
}

Matrix Linear::backward(ParamStore& store, const LinearCache& cache, const Matrix& d_out) const {
  auto& w = store.at(weight_name());
  auto& b = store.at(bias_name());
  return linear_backward(cache, w.value, d_out, w.grad, b.grad);
}

// ---------------------------------------------------------------- char CNN

Matrix char_cnn_forward(const Matrix& chars, std::size_t kernel, const Matrix& weight, const Matrix& bias,
                        CharCnnCache* cache) {
  if (kernel == 0 || weight.cols() == 0) throw ValidationError("char CNN kernel and filter count must be positive");
  require(chars.rows() >= 1, "char CNN needs at least one character");
  const std::size_t dim = chars.cols();
  const std::size_t filters = weight.cols();
  require(weight.rows() == kernel * dim, "char CNN weight must be [kernel * char_dim x filters]");
  require(bias.rows() == 1 && bias.cols() == filters, "char CNN bias shape mismatch");

  const std::size_t length = std::max(chars.rows(), kernel);
  Matrix padded(length, dim);
  for (std::size_t i = 0; i < chars.rows(); ++i) {
    std::copy(chars.row(i).begin(), chars.row(i).end(), padded.row(i).begin());
  }
  const std::size_t positions = length - kernel + 1;

  Matrix pre(positions, filters);
  for (std::size_t p = 0; p < positions; ++p) {
    auto out = pre.row(p);
    for (std::size_t j = 0; j < filters; ++j) out[j] = bias[j];
    // The kernel window is rows p..p+k-1 laid out contiguously.
    const double* window = padded.values().data() + p * dim;
    for (std::size_t r = 0; r < kernel * dim; ++r) {
      const double xv = window[r];
      if (xv == 0.0) continue;
      auto wrow = weight.row(r);
      for (std::size_t j = 0; j < filters; ++j) out[j] += xv * wrow[j];
    }
  }

  Matrix pooled(1, filters);
  std::vector<std::size_t> argmax(filters, 0);
  for (std::size_t j = 0; j < filters; ++j) {
    double best = std::max(0.0, pre(0, j));
    for (std::size_t p = 1; p < positions; ++p) {
      const double a = std::max(0.0, pre(p, j));
      if (a > best) {
        best = a;
        argmax[j] = p;
      }
    }
    pooled[j] = best;
  }

  if (cache) {
    cache->padded = std::move(padded);
    cache->pre_activation = std::move(pre);
    cache->argmax = std::move(argmax);
    cache->input_rows = chars.rows();
  }
  return pooled;
}

Matrix char_cnn_backward(const CharCnnCache& cache, std::size_t kernel, const Matrix& weight, const Matrix& d_out,
                         Matrix& d_weight, Matrix& d_bias) {
  const std::size_t dim = cache.padded.cols();
  const std::size_t filters = weight.cols();
  require(d_out.rows() == 1 && d_out.cols() == filters, "char CNN output gradient shape mismatch");
  Matrix d_padded(cache.padded.rows(), dim);
  for (std::size_t j = 0; j < filters; ++j) {
    const std::size_t p = cache.argmax[j];
    if (cache.pre_activation(p, j) <= 0.0) continue;
    const double g = d_out[j];
    d_bias[j] += g;
    const double* window = cache.padded.values().data() + p * dim;
    double* d_window = d_padded.values().data() + p * dim;
    for (std::size_t r = 0; r < kernel * dim; ++r) {
      d_weight(r, j) += window[r] * g;
      d_window[r] += weight(r, j) * g;
    }
  }
  Matrix d_chars(cache.input_rows, dim);
  for (std::size_t i = 0; i < cache.input_rows; ++i) {
    std::copy(d_padded.row(i).begin(), d_padded.row(i).end(), d_chars.row(i).begin());
  }
  return d_chars;
}

CharCnn::CharCnn(std::string prefix, std::size_t char_dim, std::size_t kernel, std::size_t filters)
    : prefix_(std::move(prefix)), char_dim_(char_dim), kernel_(kernel), filters_(filters) {
  if (kernel == 0 || filters == 0) throw ValidationError("char CNN kernel and filter count must be positive");
}

void CharCnn::init(ParamStore& store, Rng& rng) const {
  const double bound = fan_in_bound(kernel_ * char_dim_);
  store.add_uniform(prefix_ + ".weight", kernel_ * char_dim_, filters_, bound, rng);
  store.add_uniform(prefix_ + ".bias", 1, filters_, bound, rng);
}

Matrix CharCnn::forward(const ParamStore& store, const Matrix& chars, CharCnnCache* cache) const {
  return char_cnn_forward(chars, kernel_, store.value(prefix_ + ".weight"), store.value(prefix_ + ".bias"), cache);
}

Matrix CharCnn::backward(ParamStore& store, const CharCnnCache& cache, const Matrix& d_out) const {
  auto& w = store.at(prefix_ + ".weight");
  auto& b = store.at(prefix_ + ".bias");
  return char_cnn_backward(cache, kernel_, w.value, d_out, w.grad, b.grad);
}

// ---------------------------------------------------------------- LSTM

Matrix lstm_forward(const Matrix& x, const LstmWeights& w, bool reverse, LstmCache* cache) {
  const std::size_t n = x.rows();
  const std::size_t h = w.recurrent_weight.rows();
  require(n >= 1, "LSTM needs at least one step");
  require(w.input_weight.rows() == x.cols() && w.input_weight.cols() == 4 * h,
          "LSTM input weight " + w.input_weight.shape_string() + " does not fit input " + x.shape_string());
  require(w.recurrent_weight.cols() == 4 * h, "LSTM recurrent weight must be [h x 4h]");
  require(w.bias.rows() == 1 && w.bias.cols() == 4 * h, "LSTM bias must be [1 x 4h]");

  Matrix pre = matmul(x, w.input_weight);
  add_row_bias(pre, w.bias);

  Matrix gates(n, 4 * h);
  Matrix cells(n, h);
  Matrix hidden(n, h);
  std::vector<double> prev_h(h, 0.0);
  std::vector<double> prev_c(h, 0.0);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    auto z = gates.row(t);
    auto base = pre.row(t);
    std::copy(base.begin(), base.end(), z.begin());
    for (std::size_t k = 0; k < h; ++k) {
      const double hk = prev_h[k];
      if (hk == 0.0) continue;
      auto wrow = w.recurrent_weight.row(k);
      for (std::size_t j = 0; j < 4 * h; ++j) z[j] += hk * wrow[j];
    }
    for (std::size_t k = 0; k < h; ++k) {
      z[k] = sigmoid(z[k]);
      z[h + k] = sigmoid(z[h + k]);
      z[2 * h + k] = std::tanh(z[2 * h + k]);
      z[3 * h + k] = sigmoid(z[3 * h + k]);
      const double c = z[h + k] * prev_c[k] + z[k] * z[2 * h + k];
      cells(t, k) = c;
      hidden(t, k) = z[3 * h + k] * std::tanh(c);
      prev_c[k] = c;
      prev_h[k] = hidden(t, k);
    }
  }
  if (cache) {
    cache->input = x;
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->hidden = hidden;
    cache->reverse = reverse;
  }
  return hidden;
}

Matrix lstm_backward(const LstmCache& cache, const LstmWeights& w, const Matrix& d_hidden, const LstmGrads& g) {
  const std::size_t n = cache.input.rows();
  const std::size_t h = w.recurrent_weight.rows();
  require(d_hidden.rows() == n && d_hidden.cols() == h, "LSTM output gradient shape mismatch");

  Matrix d_pre(n, 4 * h);
  std::vector<double> dh_next(h, 0.0);
  std::vector<double> dc_next(h, 0.0);
  for (std::size_t step = n; step-- > 0;) {
    const std::size_t t = cache.reverse ? n - 1 - step : step;
    const bool has_prev = step > 0;
    const std::size_t prev = cache.reverse ? t + 1 : t - 1;
    auto gate = cache.gates.row(t);
    auto dz = d_pre.row(t);
    for (std::size_t k = 0; k < h; ++k) {
      const double i = gate[k], f = gate[h + k], cand = gate[2 * h + k], o = gate[3 * h + k];
      const double c = cache.cells(t, k);
      const double c_prev = has_prev ? cache.cells(prev, k) : 0.0;
      const double tc = std::tanh(c);
      const double dh = d_hidden(t, k) + dh_next[k];
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
      dz[k] = dc * cand * i * (1.0 - i);
      dz[h + k] = dc * c_prev * f * (1.0 - f);
      dz[2 * h + k] = dc * i * (1.0 - cand * cand);
      dz[3 * h + k] = dh * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    if (has_prev) {
      auto h_prev = cache.hidden.row(prev);
      for (std::size_t k = 0; k < h; ++k) {
        auto wrow = w.recurrent_weight.row(k);
        auto grow = g.recurrent_weight.row(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < 4 * h; ++j) {
          acc += dz[j] * wrow[j];
          grow[j] += h_prev[k] * dz[j];
        }
        dh_next[k] = acc;
      }
    }
  }
  g.input_weight += matmul_tn(cache.input, d_pre);
  g.bias += column_sums(d_pre);
  return matmul_nt(d_pre, w.input_weight);
}

BiLstm::BiLstm(std::string prefix, std::size_t input_dim, std::size_t hidden, std::size_t layers)
    : prefix_(std::move(prefix)), input_dim_(input_dim), hidden_(hidden), layers_(layers) {
  if (input_dim == 0 || hidden == 0 || layers == 0) throw ValidationError("BiLSTM dimensions must be positive");
}

std::string BiLstm::name(std::size_t layer, bool reverse, const char* what) const {
  return prefix_ + ".l" + std::to_string(layer) + (reverse ? ".bwd." : ".fwd.") + what;
}

void BiLstm::init(ParamStore& store, Rng& rng) const {
  const double bound = fan_in_bound(hidden_);
  for (std::size_t l = 0; l < layers_; ++l) {
    const std::size_t in = l == 0 ? input_dim_ : 2 * hidden_;
    for (bool rev : {false, true}) {
      store.add_uniform(name(l, rev, "input_weight"), in, 4 * hidden_, bound, rng);
      store.add_uniform(name(l, rev, "recurrent_weight"), hidden_, 4 * hidden_, bound, rng);
      store.add_uniform(name(l, rev, "bias"), 1, 4 * hidden_, bound, rng);
    }
  }
}

Matrix BiLstm::forward(const ParamStore& store, const Matrix& x, BiLstmCache* cache) const {
  if (cache) {
    cache->forward_dir.assign(layers_, {});
    cache->backward_dir.assign(layers_, {});
  }
  Matrix current = x;
  for (std::size_t l = 0; l < layers_; ++l) {
    LstmWeights fw{store.value(name(l, false, "input_weight")), store.value(name(l, false, "recurrent_weight")),
                   store.value(name(l, false, "bias"))};
    LstmWeights bw{store.value(name(l, true, "input_weight")), store.value(name(l, true, "recurrent_weight")),
                   store.value(name(l, true, "bias"))};
    Matrix hf = lstm_forward(current, fw, false, cache ? &cache->forward_dir[l] : nullptr);
    Matrix hb = lstm_forward(current, bw, true, cache ? &cache->backward_dir[l] : nullptr);
    current = hconcat({&hf, &hb});
  }
  return current;
}

Matrix BiLstm::backward(ParamStore& store, const BiLstmCache& cache, const Matrix& d_out) const {
  Matrix d = d_out;
  for (std::size_t l = layers_; l-- > 0;) {
    Matrix d_fwd = slice_cols(d, 0, hidden_);
    Matrix d_bwd = slice_cols(d, hidden_, hidden_);
    Matrix dx;
    for (bool rev : {false, true}) {
      auto& wi = store.at(name(l, rev, "input_weight"));
      auto& wr = store.at(name(l, rev, "recurrent_weight"));
      auto& b = store.at(name(l, rev, "bias"));
      LstmWeights w{wi.value, wr.value, b.value};
      LstmGrads g{wi.grad, wr.grad, b.grad};
      Matrix part = lstm_backward(rev ? cache.backward_dir[l] : cache.forward_dir[l], w, rev ? d_bwd : d_fwd, g);
      if (dx.empty()) {
        dx = std::move(part);
      } else {
        dx += part;
      }
    }
    d = std::move(dx);
  }
  return d;
}

// ---------------------------------------------------------------- attention

MultiHeadAttention::MultiHeadAttention(std::string prefix, std::size_t dim, std::size_t heads)
    : prefix_(std::move(prefix)), dim_(dim), heads_(heads) {
  if (heads == 0 || dim == 0 || dim % heads != 0) {
    throw ValidationError("attention dimension " + std::to_string(dim) + " is not divisible by " +
                          std::to_string(heads) + " heads");
  }
}

void MultiHeadAttention::init(ParamStore& store, Rng& rng) const {
  const double bound = fan_in_bound(dim_);
  for (const char* p : {"query", "key", "value", "output"}) {
    store.add_uniform(param(p) + "_weight", dim_, dim_, bound, rng);
    // A key bias shifts every score in a softmax row equally, so keys have none.
    if (std::string_view(p) != "key") store.add_uniform(param(p) + "_bias", 1, dim_, bound, rng);
  }
}

Matrix MultiHeadAttention::forward(const ParamStore& store, const Matrix& x, MhaCache* cache) const {
  require(x.cols() == dim_, "attention input " + x.shape_string() + " does not match dim " + std::to_string(dim_));
  const std::size_t n = x.rows();
  const std::size_t dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix q = linear_forward(x, store.value(param("query_weight")), store.value(param("query_bias")));
  Matrix k = linear_forward(x, store.value(param("key_weight")), Matrix(1, dim_));
  Matrix v = linear_forward(x, store.value(param("value_weight")), store.value(param("value_bias")));

  Matrix context(n, dim_);
  std::vector<Matrix> attention;
  attention.reserve(heads_);
  for (std::size_t head = 0; head < heads_; ++head) {
    const std::size_t off = head * dh;
    Matrix scores(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q(i, off + c) * k(j, off + c);
        scores(i, j) = s * scale;
      }
    }
    Matrix a = softmax_rows(scores);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double aij = a(i, j);
        for (std::size_t c = 0; c < dh; ++c) context(i, off + c) += aij * v(j, off + c);
      }
    }
    attention.push_back(std::move(a));
  }
  Matrix y = linear_forward(context, store.value(param("output_weight")), store.value(param("output_bias")));
  if (cache) {
    cache->input = x;
    cache->queries = std::move(q);
    cache->keys = std::move(k);
    cache->values = std::move(v);
    cache->attention = std::move(attention);
    cache->context = std::move(context);
  }
  return y;
}

Matrix MultiHeadAttention::backward(ParamStore& store, const MhaCache& cache, const Matrix& d_out) const {
  const std::size_t n = cache.input.rows();
  const std::size_t dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto& wo = store.at(param("output_weight"));
  auto& bo = store.at(param("output_bias"));
  Matrix d_context = linear_backward(LinearCache{cache.context}, wo.value, d_out, wo.grad, bo.grad);

  Matrix dq(n, dim_), dk(n, dim_), dv(n, dim_);
  for (std::size_t head = 0; head < heads_; ++head) {
    const std::size_t off = head * dh;
    const Matrix& a = cache.attention[head];
    Matrix da(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          s += d_context(i, off + c) * cache.values(j, off + c);
          dv(j, off + c) += a(i, j) * d_context(i, off + c);
        }
        da(i, j) = s;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += da(i, j) * a(i, j);
      for (std::size_t j = 0; j < n; ++j) {
        const double ds = a(i, j) * (da(i, j) - dot) * scale;
        if (ds == 0.0) continue;
        for (std::size_t c = 0; c < dh; ++c) {
          dq(i, off + c) += ds * cache.keys(j, off + c);
          dk(j, off + c) += ds * cache.queries(i, off + c);
        }
      }
    }
  }

  Matrix dx(n, dim_);
  const std::pair<const char*, const Matrix*> parts[] = {{"query", &dq}, {"key", &dk}, {"value", &dv}};
  for (const auto& [p, grad] : parts) {
    auto& w = store.at(param(p) + std::string("_weight"));
    Matrix unused_bias_grad(1, dim_);
    const std::string bias = param(p) + std::string("_bias");
    Matrix& bias_grad = store.contains(bias) ? store.grad(bias) : unused_bias_grad;
    dx += linear_backward(LinearCache{cache.input}, w.value, *grad, w.grad, bias_grad);
  }
  return dx;
}

// ---------------------------------------------------------------- dropout

Matrix dropout_apply(const Matrix& x, double rate, Mode mode, Rng& rng, Matrix* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) {
    if (mask) *mask = Matrix(x.rows(), x.cols(), 1.0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix m(x.rows(), x.cols());
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    y[i] = x[i] * m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

Matrix dropout_apply(const Matrix& x, double rate, Mode mode, std::uint64_t seed, Matrix* mask) {
  Rng rng(seed);
  return dropout_apply(x, rate, mode, rng, mask);
}

// ---------------------------------------------------------------- softmax

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -INFINITY;
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto o = out.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - m);
      s += o[j];
    }
    for (auto& v : o) v /= s;
  }
  return out;
}

}  // namespace nerkit::nn
