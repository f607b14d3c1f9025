#include <cmath>
#include <sstream>

#include "nerkit/error.hpp"
#include "nerkit/eval.hpp"
#include "nerkit/nn/optim.hpp"
#include "nerkit/tagger.hpp"

namespace nerkit {

EarlyStopping::EarlyStopping(StopMetric metric, std::size_t patience) : metric_(metric), patience_(patience) {
  if (patience == 0) throw ValidationError("patience must be at least 1");
}

bool EarlyStopping::observe(double value) {
  ++epochs_;
  const bool better = best_epoch_ == 0 ||
                      (metric_ == StopMetric::eval_loss ? value < best_value_ : value > best_value_);
  improved_last_ = better;
  if (better) {
    best_value_ = value;
    best_epoch_ = epochs_;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

StopOutcome replay_early_stopping(const std::vector<double>& values, StopMetric metric, std::size_t patience,
                                  std::size_t max_epochs) {
  EarlyStopping stopper(metric, patience);
  StopOutcome out;
  for (std::size_t e = 0; e < values.size() && e < max_epochs; ++e) {
    const bool stop = stopper.observe(values[e]);
    out.stopped_epoch = e + 1;
    if (stop) break;
  }
  out.best_epoch = stopper.best_epoch();
  return out;
}

std::string TrainHistory::to_text() const {
  std::ostringstream out;
  out << "# epoch train_loss eval_loss eval_macro_f1\n";
  for (const auto& e : epochs) {
    out << e.epoch << ' ' << format_double(e.train_loss) << ' ' << format_double(e.eval_loss) << ' '
        << format_double(e.eval_f1) << '\n';
  }
  out << "# stopped_epoch " << stopped_epoch << '\n';
  out << "# best_epoch " << best_epoch << '\n';
  return out.str();
}

TrainResult train(TaggerModel model, const LabeledCorpus& train_set, const LabeledCorpus& dev_set,
                  const ContextualVectors* train_contextual, const ContextualVectors* dev_contextual) {
  const auto& config = model.config;
  config.validate();
  if (train_set.sentences.empty()) throw ValidationError("training corpus is empty");
  if (dev_set.sentences.empty()) throw ValidationError("dev corpus is empty");

  Rng order_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));
  const nn::AdamConfig adam{config.learning_rate, config.weight_decay};

  TrainResult result;
  EarlyStopping stopper(config.early_stop_metric, config.patience);
  nn::ParamStore best = model.params;
  std::size_t step = 0;

  std::vector<std::size_t> order(train_set.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TagSequences dev_gold;
  for (const auto& s : dev_set.sentences) dev_gold.push_back(s.gold_tags());

  model.params.zero_grad();
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& sentence = train_set.sentences[order[k]];
        const double loss = accumulate_gradients(model, sentence, dropout_rng, scale, train_contextual);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", sentence '" +
                             sentence.id + "'");
        }
        total += loss;
      }
      nn::adam_step(model.params, adam, ++step);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = total / static_cast<double>(order.size());
    TagSequences predicted;
    for (const auto& s : dev_set.sentences) {
      record.eval_loss += sentence_loss(model, s, dev_contextual);
      std::vector<std::string> labels;
      for (auto& p : predict(model, s, dev_contextual)) labels.push_back(std::move(p.label));
      predicted.push_back(std::move(labels));
    }
    record.eval_loss /= static_cast<double>(dev_set.sentences.size());
    record.eval_f1 = evaluate_sequences(dev_gold, predicted).macro_f1;
    if (!std::isfinite(record.eval_loss)) {
      throw NumericError("non-finite evaluation loss at epoch " + std::to_string(epoch));
    }
    result.history.epochs.push_back(record);

    const bool stop =
        stopper.observe(config.early_stop_metric == StopMetric::eval_loss ? record.eval_loss : record.eval_f1);
    if (stopper.improved_last()) best = model.params;
    result.history.stopped_epoch = epoch;
    if (stop) break;
  }
  result.history.best_epoch = stopper.best_epoch();
  model.params = std::move(best);
  model.params.zero_grad();
  result.model = std::move(model);
  return result;
}

}  // namespace nerkit
