#include "nerkit/tagger.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nerkit/error.hpp"

namespace nerkit {

using nn::Matrix;

// ---------------------------------------------------------------- vocabulary

std::size_t Vocabulary::add(const std::string& item) {
  auto it = index_.find(item);
  if (it != index_.end()) return it->second;
  items_.push_back(item);
  index_.emplace(item, items_.size() - 1);
  return items_.size() - 1;
}

std::size_t Vocabulary::lookup(const std::string& item) const {
  auto it = index_.find(item);
  return it == index_.end() ? 0 : it->second;
}

std::vector<std::string> utf8_characters(const std::string& token) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < token.size()) {
    const auto lead = static_cast<unsigned char>(token[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, token.size() - i);
    out.push_back(token.substr(i, len));
    i += len;
  }
  return out;
}

// ---------------------------------------------------------------- contextual vectors

void ContextualVectors::set(const std::string& sentence_id, std::size_t token_index, std::vector<double> values) {
  if (values.empty()) throw ValidationError("contextual vector for '" + sentence_id + "' is empty");
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_) {
    throw ValidationError("contextual vector for '" + sentence_id + "' token " + std::to_string(token_index) +
                          " has " + std::to_string(values.size()) + " components, expected " + std::to_string(dim_));
  }
  vectors_[sentence_id][token_index] = std::move(values);
}

Matrix ContextualVectors::for_sentence(const Sentence& sentence) const {
  auto it = vectors_.find(sentence.id);
  if (it == vectors_.end()) {
    throw ValidationError("contextual vectors missing for sentence '" + sentence.id + "'");
  }
  Matrix out(sentence.size(), dim_);
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    auto v = it->second.find(i);
    if (v == it->second.end()) {
      throw ValidationError("contextual vector missing for sentence '" + sentence.id + "' token " +
                            std::to_string(i));
    }
    std::copy(v->second.begin(), v->second.end(), out.row(i).begin());
  }
  return out;
}

ContextualVectors parse_contextual_vectors(std::string_view text, const std::string& source) {
  ContextualVectors out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw ParseError(source, line_no, "expected 'sentence_id<TAB>index<TAB>values'");
    const std::string id = line.substr(0, tab1);
    const std::string idx_text = line.substr(tab1 + 1, tab2 - tab1 - 1);
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
    if (id.empty() || ec != std::errc() || ptr != idx_text.data() + idx_text.size()) {
      throw ParseError(source, line_no, "bad sentence id or token index");
    }
    std::istringstream values_in(line.substr(tab2 + 1));
    std::vector<double> values;
    std::string field;
    while (values_in >> field) {
      double v = 0.0;
      auto [p, e] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (e != std::errc() || p != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError(source, line_no, "component '" + field + "' is not a finite number");
      }
      values.push_back(v);
    }
    try {
      out.set(id, index, std::move(values));
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

ContextualVectors read_contextual_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_contextual_vectors(buffer.str(), path);
}

// ---------------------------------------------------------------- architecture

namespace {

struct Architecture {
  nn::Embedding word;
  nn::Embedding chars;
  nn::CharCnn cnn;
  nn::Embedding pos;
  nn::BiLstm encoder;
  nn::MultiHeadAttention attention;
  nn::Linear head;
  std::size_t word_offset = 0, contextual_offset = 0, char_offset = 0, pos_offset = 0;
};

Architecture architecture(const TaggerModel& m) {
  const auto& c = m.config;
  Architecture a;
  std::size_t offset = 0;
  a.word = nn::Embedding("word.embedding", m.words.size(), c.word_dim);
  a.word_offset = offset;
  offset += c.word_dim;
  if (c.use_contextual_slot) {
    a.contextual_offset = offset;
    offset += m.contextual_dim;
  }
  if (c.use_char_cnn) {
    a.chars = nn::Embedding("char.embedding", m.chars.size(), c.char_dim);
    a.cnn = nn::CharCnn("char.cnn", c.char_dim, c.char_kernel, c.char_filters);
    a.char_offset = offset;
    offset += c.char_filters;
  }
  if (c.use_pos) {
    a.pos = nn::Embedding("pos.embedding", m.pos_tags.size(), c.pos_dim);
    a.pos_offset = offset;
    offset += c.pos_dim;
  }
  a.encoder = nn::BiLstm("encoder", offset, c.hidden, c.lstm_layers);
  if (c.use_mha) a.attention = nn::MultiHeadAttention("attention", 2 * c.hidden, c.mha_heads);
  a.head = nn::Linear("head", 2 * c.hidden, m.tagset.size());
  return a;
}

struct ForwardState {
  std::vector<std::size_t> word_ids;
  std::vector<std::size_t> pos_ids;
  std::vector<std::vector<std::size_t>> char_ids;
  std::vector<nn::CharCnnCache> cnn;
  Matrix dropout_mask;
  nn::BiLstmCache encoder;
  nn::MhaCache attention;
  nn::LinearCache head;
};

Matrix logits_forward(const TaggerModel& m, const Architecture& a, const Sentence& s, nn::Mode mode,
                      const ContextualVectors* contextual, Rng* dropout_rng, ForwardState* st) {
  if (s.tokens.empty()) throw ValidationError("sentence '" + s.id + "' is empty");
  const auto& c = m.config;
  const std::size_t n = s.size();
  ForwardState local;
  ForwardState& state = st ? *st : local;

  state.word_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) state.word_ids[i] = m.words.lookup(s.tokens[i].surface);
  Matrix word = a.word.forward(m.params, state.word_ids);
  std::vector<const Matrix*> parts{&word};

  Matrix ctx;
  if (c.use_contextual_slot) {
    if (!contextual) throw ValidationError("contextual vectors missing for sentence '" + s.id + "'");
    ctx = contextual->for_sentence(s);
    if (ctx.cols() != m.contextual_dim) {
      throw ValidationError("contextual vectors for sentence '" + s.id + "' have dimension " +
                            std::to_string(ctx.cols()) + ", model expects " + std::to_string(m.contextual_dim));
    }
    parts.push_back(&ctx);
  }

  Matrix char_features;
  if (c.use_char_cnn) {
    char_features = Matrix(n, c.char_filters);
    state.char_ids.assign(n, {});
    state.cnn.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& ch : utf8_characters(s.tokens[i].surface)) state.char_ids[i].push_back(m.chars.lookup(ch));
      Matrix emb = a.chars.forward(m.params, state.char_ids[i]);
      Matrix pooled = a.cnn.forward(m.params, emb, &state.cnn[i]);
      std::copy(pooled.values().begin(), pooled.values().end(), char_features.row(i).begin());
    }
    parts.push_back(&char_features);
  }

  Matrix pos;
  if (c.use_pos) {
    state.pos_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      state.pos_ids[i] = s.tokens[i].pos ? m.pos_tags.lookup(*s.tokens[i].pos) : 0;
    }
    pos = a.pos.forward(m.params, state.pos_ids);
    parts.push_back(&pos);
  }

  Matrix features = hconcat(parts);
  if (mode == nn::Mode::train && c.dropout > 0.0) {
    if (!dropout_rng) throw Error("train-mode forward needs a dropout generator");
    features = nn::dropout_apply(features, c.dropout, mode, *dropout_rng, &state.dropout_mask);
  }
  Matrix hidden = a.encoder.forward(m.params, features, &state.encoder);
  if (c.use_mha) hidden = a.attention.forward(m.params, hidden, &state.attention);
  return a.head.forward(m.params, hidden, &state.head);
}

void logits_backward(TaggerModel& m, const Architecture& a, const ForwardState& state, const Matrix& d_logits) {
  const auto& c = m.config;
  Matrix d = a.head.backward(m.params, state.head, d_logits);
  if (c.use_mha) d = a.attention.backward(m.params, state.attention, d);
  d = a.encoder.backward(m.params, state.encoder, d);
  if (!state.dropout_mask.empty()) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= state.dropout_mask[i];
  }
  a.word.backward(m.params, state.word_ids, nn::slice_cols(d, a.word_offset, c.word_dim));
  if (c.use_char_cnn) {
    for (std::size_t i = 0; i < state.cnn.size(); ++i) {
      Matrix d_pooled(1, c.char_filters);
      for (std::size_t j = 0; j < c.char_filters; ++j) d_pooled[j] = d(i, a.char_offset + j);
      Matrix d_chars = a.cnn.backward(m.params, state.cnn[i], d_pooled);
      a.chars.backward(m.params, state.char_ids[i], d_chars);
    }
  }
  if (c.use_pos) a.pos.backward(m.params, state.pos_ids, nn::slice_cols(d, a.pos_offset, c.pos_dim));
}

crf::Transitions effective_transitions(const TaggerModel& m) {
  crf::Transitions t{m.params.value("crf.transitions"), m.params.value("crf.start"), m.params.value("crf.end")};
  if (m.config.bio_constraints) {
    const auto penalty = crf::bio_constraints(m.tagset);
    t.transitions += penalty.transitions;
    t.start += penalty.start;
    t.end += penalty.end;
  }
  return t;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double lse = nn::log_sum_exp(logits.row(i));
    for (std::size_t j = 0; j < logits.cols(); ++j) out(i, j) = logits(i, j) - lse;
  }
  return out;
}

// Gold indices; labels outside the model's tagset map to O when lenient.
std::vector<std::size_t> gold_indices(const TaggerModel& m, const Sentence& s, bool lenient) {
  std::vector<std::size_t> gold(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto idx = m.tagset.index_of(s.tokens[i].gold_tag);
    if (!idx) {
      if (!lenient) {
        throw ValidationError("sentence '" + s.id + "': label '" + s.tokens[i].gold_tag +
                              "' is not in the model tagset");
      }
      idx = 0;
    }
    gold[i] = *idx;
  }
  return gold;
}

struct LossAndGrad {
  double loss = 0.0;
  Matrix d_logits;
  crf::TransitionGrads d_transitions;
  bool has_transition_grads = false;
};

double cross_entropy(const Matrix& logits, const std::vector<std::size_t>& gold, Matrix* d_logits) {
  const std::size_t n = logits.rows();
  Matrix log_p = log_softmax_rows(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss -= log_p(i, gold[i]);
  loss /= static_cast<double>(n);
  if (d_logits) {
    *d_logits = Matrix(n, logits.cols());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < logits.cols(); ++j) (*d_logits)(i, j) = std::exp(log_p(i, j)) / n;
      (*d_logits)(i, gold[i]) -= 1.0 / n;
    }
  }
  return loss;
}

LossAndGrad loss_of(const TaggerModel& m, const Matrix& logits, const std::vector<std::size_t>& gold, bool need_grad) {
  LossAndGrad r;
  const auto& c = m.config;
  if (!c.use_crf) {
    r.loss = cross_entropy(logits, gold, need_grad ? &r.d_logits : nullptr);
    return r;
  }
  const auto trans = effective_transitions(m);
  if (c.crf_mode == CrfMode::trained) {
    auto nll = crf::nll_grad(logits, trans, gold);
    r.loss = nll.loss;
    r.d_logits = std::move(nll.d_emissions);
    r.d_transitions = std::move(nll.d_transitions);
    r.has_transition_grads = true;
    return r;
  }
  // Decode-only: the emissions see only the token cross-entropy; the CRF
  // likelihood over detached log-probabilities trains the transitions.
  r.loss = cross_entropy(logits, gold, need_grad ? &r.d_logits : nullptr);
  auto nll = crf::nll_grad(log_softmax_rows(logits), trans, gold);
  r.loss += nll.loss;
  r.d_transitions = std::move(nll.d_transitions);
  r.has_transition_grads = true;
  return r;
}

Matrix crf_emissions(const TaggerModel& m, const Matrix& logits) {
  return m.config.crf_mode == CrfMode::decode_only ? log_softmax_rows(logits) : logits;
}

void init_parameters(TaggerModel& m, Rng rng) {
  const auto& config = m.config;
  const Architecture a = architecture(m);
  a.word.init(m.params, rng);
  if (config.use_char_cnn) {
    a.chars.init(m.params, rng);
    a.cnn.init(m.params, rng);
  }
  if (config.use_pos) a.pos.init(m.params, rng);
  a.encoder.init(m.params, rng);
  if (config.use_mha) a.attention.init(m.params, rng);
  a.head.init(m.params, rng);
  if (config.use_crf) {
    const std::size_t T = m.tagset.size();
    m.params.add("crf.transitions", Matrix(T, T));
    m.params.add("crf.start", Matrix(1, T));
    m.params.add("crf.end", Matrix(1, T));
  }
}

}  // namespace

std::size_t TaggerModel::feature_dim() const {
  std::size_t d = config.word_dim;
  if (config.use_contextual_slot) d += contextual_dim;
  if (config.use_char_cnn) d += config.char_filters;
  if (config.use_pos) d += config.pos_dim;
  return d;
}

void check_parameter_layout(const TaggerModel& model) {
  TaggerModel scratch;
  scratch.config = model.config;
  scratch.words = model.words;
  scratch.chars = model.chars;
  scratch.pos_tags = model.pos_tags;
  scratch.tagset = model.tagset;
  scratch.contextual_dim = model.contextual_dim;
  init_parameters(scratch, Rng(0));
  if (scratch.params.names() != model.params.names()) {
    throw ValidationError("parameter names do not match the model configuration");
  }
  for (const auto& [name, p] : scratch.params) {
    if (!p.value.same_shape(model.params.value(name))) {
      throw ValidationError("parameter '" + name + "' has shape " + model.params.value(name).shape_string() +
                            ", expected " + p.value.shape_string());
    }
  }
}

TaggerModel build_model(const TaggerConfig& config, const LabeledCorpus& corpus, const nn::WordVectors* pretrained,
                        const ContextualVectors* contextual) {
  config.validate();
  if (corpus.sentences.empty()) throw ValidationError("cannot build a model from an empty corpus");

  TaggerModel m;
  m.config = config;
  m.tagset = corpus.tagset;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) {
      m.words.add(t.surface);
      if (config.use_char_cnn) {
        for (const auto& ch : utf8_characters(t.surface)) m.chars.add(ch);
      }
      if (config.use_pos) {
        if (!t.pos) throw ValidationError("use_pos: corpus has no POS column (sentence '" + s.id + "')");
        m.pos_tags.add(*t.pos);
      }
    }
  }

  if (config.use_contextual_slot) {
    const std::size_t file_dim = contextual ? contextual->dim() : 0;
    if (config.contextual_dim != 0 && file_dim != 0 && file_dim != config.contextual_dim) {
      throw ValidationError("contextual_dim: config says " + std::to_string(config.contextual_dim) +
                            ", vector file has " + std::to_string(file_dim));
    }
    m.contextual_dim = config.contextual_dim != 0 ? config.contextual_dim : file_dim;
    if (m.contextual_dim == 0) {
      throw ValidationError("use_contextual_slot: no contextual vectors given and contextual_dim is 0");
    }
  }
  if (pretrained && pretrained->dim != config.word_dim) {
    throw ValidationError("word_dim: config says " + std::to_string(config.word_dim) +
                          ", pretrained vectors have dimension " + std::to_string(pretrained->dim));
  }

  init_parameters(m, Rng(derive_seed(config.seed, 0)));

  if (pretrained) {
    auto& table = m.params.value("word.embedding");
    for (std::size_t i = 1; i < m.words.size(); ++i) {
      if (const auto* v = pretrained->find(m.words.items()[i])) std::copy(v->begin(), v->end(), table.row(i).begin());
    }
  }
  return m;
}

Matrix model_forward(const TaggerModel& model, const Sentence& sentence, nn::Mode mode,
                     const ContextualVectors* contextual, std::uint64_t dropout_seed) {
  const Architecture a = architecture(model);
  Rng rng(dropout_seed);
  Matrix logits = logits_forward(model, a, sentence, mode, contextual, &rng, nullptr);
  if (model.config.use_crf) return crf_emissions(model, logits);
  return nn::softmax_rows(logits);
}

double sentence_loss(const TaggerModel& model, const Sentence& sentence, const ContextualVectors* contextual) {
  const Architecture a = architecture(model);
  Matrix logits = logits_forward(model, a, sentence, nn::Mode::eval, contextual, nullptr, nullptr);
  return loss_of(model, logits, gold_indices(model, sentence, true), false).loss;
}

double accumulate_gradients(TaggerModel& model, const Sentence& sentence, Rng& dropout_rng, double scale,
                            const ContextualVectors* contextual) {
  const Architecture a = architecture(model);
  ForwardState state;
  Matrix logits = logits_forward(model, a, sentence, nn::Mode::train, contextual, &dropout_rng, &state);
  auto r = loss_of(model, logits, gold_indices(model, sentence, false), true);
  if (!std::isfinite(r.loss)) return r.loss;
  if (r.has_transition_grads) {
    r.d_transitions.transitions *= scale;
    r.d_transitions.start *= scale;
    r.d_transitions.end *= scale;
    model.params.grad("crf.transitions") += r.d_transitions.transitions;
    model.params.grad("crf.start") += r.d_transitions.start;
    model.params.grad("crf.end") += r.d_transitions.end;
  }
  r.d_logits *= scale;
  logits_backward(model, a, state, r.d_logits);
  return r.loss;
}

std::vector<TokenPrediction> predict(const TaggerModel& model, const Sentence& sentence,
                                     const ContextualVectors* contextual) {
  if (sentence.tokens.empty()) throw ValidationError("cannot predict an empty sentence '" + sentence.id + "'");
  const Architecture a = architecture(model);
  Matrix logits = logits_forward(model, a, sentence, nn::Mode::eval, contextual, nullptr, nullptr);
  const std::size_t n = sentence.size();

  std::vector<std::string> labels(n);
  std::vector<double> scores(n);
  if (model.config.use_crf) {
    const Matrix emissions = crf_emissions(model, logits);
    const auto trans = effective_transitions(model);
    const auto decoded = crf::viterbi(emissions, trans);
    const Matrix marg = crf::marginals(emissions, trans);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = model.tagset.label(decoded.path[i]);
      scores[i] = marg(i, decoded.path[i]);
    }
  } else {
    const Matrix probs = nn::softmax_rows(logits);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < probs.cols(); ++j) {
        if (probs(i, j) > probs(i, best)) best = j;
      }
      labels[i] = model.tagset.label(best);
      scores[i] = probs(i, best);
    }
  }
  labels = repair_bio(labels);
  std::vector<TokenPrediction> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {labels[i], std::clamp(scores[i], 0.0, 1.0)};
  return out;
}

PredictionSet predict_corpus(const TaggerModel& model, const LabeledCorpus& corpus,
                             const ContextualVectors* contextual, const std::string& model_id) {
  PredictionSet set;
  set.model_id = model_id;
  set.sentences.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) set.sentences.push_back(predict(model, s, contextual));
  return set;
}

}  // namespace nerkit
