#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nerkit/corpus.hpp"
#include "nerkit/crf.hpp"
#include "nerkit/nn/layers.hpp"
#include "nerkit/nn/param_store.hpp"
#include "nerkit/nn/word_vectors.hpp"
#include "nerkit/prediction.hpp"

namespace nerkit {

enum class StopMetric { eval_loss, eval_f1 };

enum class CrfMode {
  trained,      // emissions and transitions trained jointly on the CRF likelihood
  decode_only,  // emissions trained with token cross-entropy; transitions fit on detached log-probabilities
};

struct TaggerConfig {
  std::size_t word_dim = 32;
  bool use_contextual_slot = false;
  std::size_t contextual_dim = 0;  // 0: take the dimension from the vector file
  bool use_char_cnn = false;
  std::size_t char_dim = 16;
  std::size_t char_kernel = 3;
  std::size_t char_filters = 16;
  bool use_pos = false;
  std::size_t pos_dim = 8;
  std::size_t lstm_layers = 2;
  std::size_t hidden = 32;
  bool use_mha = false;
  std::size_t mha_heads = 2;
  bool use_crf = false;
  CrfMode crf_mode = CrfMode::trained;
  bool bio_constraints = false;
  double dropout = 0.1;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  StopMetric early_stop_metric = StopMetric::eval_f1;
  std::uint64_t seed = 42;

  // Throws ValidationError listing every offending key.
  void validate() const;
  std::vector<std::string> invalid_keys() const;

  // Flat "key = value" text, keys named after the fields above.
  std::string to_text() const;
  static TaggerConfig from_text(std::string_view text, const std::string& source = "<memory>");
  static TaggerConfig from_file(const std::string& path);
  // Applies one key; throws ValidationError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  // Softmax head, early stopping on eval loss.
  static TaggerConfig s1_analog();
  // Full stack, early stopping on eval F1.
  static TaggerConfig s2();
  // Architecture toggles of the eight individual ensemble members, "m1".."m8".
  static TaggerConfig preset(const std::string& name);
};

std::string to_string(StopMetric metric);
std::string to_string(CrfMode mode);

class Vocabulary {
 public:
  // Index 0 is the unknown entry.
  Vocabulary() : items_{"<unk>"}, index_{{"<unk>", 0}} {}

  std::size_t add(const std::string& item);
  std::size_t lookup(const std::string& item) const;
  bool contains(const std::string& item) const { return index_.count(item) != 0; }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  bool operator==(const Vocabulary& o) const { return items_ == o.items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// UTF-8 code points of a token, each as its own string.
std::vector<std::string> utf8_characters(const std::string& token);

// Frozen per-token feature vectors keyed by (sentence id, token index).
class ContextualVectors {
 public:
  std::size_t dim() const { return dim_; }
  void set(const std::string& sentence_id, std::size_t token_index, std::vector<double> values);
  // [n x dim]; throws ValidationError naming the sentence when any token is missing.
  nn::Matrix for_sentence(const Sentence& sentence) const;
  bool empty() const { return vectors_.empty(); }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> vectors_;
};

// "sentence_id TAB token_index TAB v1 v2 ... vd" per line.
ContextualVectors parse_contextual_vectors(std::string_view text, const std::string& source = "<memory>");
ContextualVectors read_contextual_vectors(const std::string& path);

struct TaggerModel {
  TaggerConfig config;
  Vocabulary words;
  Vocabulary chars;
  Vocabulary pos_tags;
  TagSet tagset;
  std::size_t contextual_dim = 0;
  nn::ParamStore params;

  std::size_t feature_dim() const;
};

TaggerModel build_model(const TaggerConfig& config, const LabeledCorpus& corpus,
                        const nn::WordVectors* pretrained = nullptr, const ContextualVectors* contextual = nullptr);

// Throws ValidationError unless the parameters match what the config,
// vocabularies and tagset imply, name for name and shape for shape.
void check_parameter_layout(const TaggerModel& model);

// Emissions [n x T] when the CRF head is on, row-wise probabilities otherwise.
// In train mode dropout draws from `dropout_seed`.
nn::Matrix model_forward(const TaggerModel& model, const Sentence& sentence, nn::Mode mode,
                         const ContextualVectors* contextual = nullptr, std::uint64_t dropout_seed = 0);

// Mean per-token cross-entropy (softmax head) or sentence NLL (CRF head) in
// eval mode.
double sentence_loss(const TaggerModel& model, const Sentence& sentence,
                     const ContextualVectors* contextual = nullptr);

// Loss for one sentence in train mode; accumulates scale * d(loss)/d(params)
// into the model's gradient slots and returns the unscaled loss.
double accumulate_gradients(TaggerModel& model, const Sentence& sentence, Rng& dropout_rng, double scale,
                            const ContextualVectors* contextual = nullptr);

std::vector<TokenPrediction> predict(const TaggerModel& model, const Sentence& sentence,
                                     const ContextualVectors* contextual = nullptr);
PredictionSet predict_corpus(const TaggerModel& model, const LabeledCorpus& corpus,
                             const ContextualVectors* contextual = nullptr, const std::string& model_id = "model");

// Patience bookkeeping for early stopping. Improvement is strict: a lower loss
// or a higher F1.
class EarlyStopping {
 public:
  EarlyStopping(StopMetric metric, std::size_t patience);

  // Records the metric for the next epoch (1-based) and returns true when
  // training should stop.
  bool observe(double value);
  bool improved_last() const { return improved_last_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epochs_seen() const { return epochs_; }
  double best_value() const { return best_value_; }

 private:
  StopMetric metric_;
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_value_ = 0.0;
  bool improved_last_ = false;
};

struct StopOutcome {
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
};

// Replays a scripted metric sequence through EarlyStopping, capped at
// max_epochs.
StopOutcome replay_early_stopping(const std::vector<double>& values, StopMetric metric, std::size_t patience,
                                  std::size_t max_epochs);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_f1 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;

  // One line per epoch: epoch, train_loss, eval_loss, eval_macro_f1.
  std::string to_text() const;
};

struct TrainResult {
  TaggerModel model;  // parameters from the best epoch
  TrainHistory history;
};

TrainResult train(TaggerModel model, const LabeledCorpus& train_set, const LabeledCorpus& dev_set,
                  const ContextualVectors* train_contextual = nullptr,
                  const ContextualVectors* dev_contextual = nullptr);

// Byte-deterministic, self-describing text serialization.
std::string serialize_model(const TaggerModel& model);
TaggerModel deserialize_model(std::string_view text, const std::string& source = "<memory>");
void save_model(const TaggerModel& model, const std::string& path);
TaggerModel load_model(const std::string& path);

inline constexpr const char* kModelFormat = "nerkit-model";
inline constexpr int kModelVersion = 1;

}  // namespace nerkit
