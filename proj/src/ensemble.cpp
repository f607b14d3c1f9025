#include "nerkit/ensemble.hpp"

#include <map>
#include <sstream>

#include "nerkit/error.hpp"

namespace nerkit {

void VoteConfig::validate() const {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw ValidationError("vote threshold must lie in [0, 1]");
  }
}

FallbackPolicy parse_fallback(const std::string& name) {
  if (name == "highest-total-score") return FallbackPolicy::highest_total_score;
  if (name == "outside") return FallbackPolicy::outside;
  throw ValidationError("unknown fallback policy '" + name + "'");
}

std::string to_string(FallbackPolicy policy) {
  return policy == FallbackPolicy::highest_total_score ? "highest-total-score" : "outside";
}

MajorityBasis parse_majority_basis(const std::string& name) {
  if (name == "all-models") return MajorityBasis::all_models;
  if (name == "surviving-votes") return MajorityBasis::surviving_votes;
  throw ValidationError("unknown majority basis '" + name + "'");
}

std::string to_string(MajorityBasis basis) {
  return basis == MajorityBasis::all_models ? "all-models" : "surviving-votes";
}

VoteOutcome majority_vote_detailed(std::span<const TokenPrediction> votes, const VoteConfig& config) {
  if (votes.empty()) throw ValidationError("majority vote needs at least one vote");

  // Ordered by label so that every tie-break below is total and independent
  // of model order.
  std::map<std::string, std::pair<std::size_t, double>> tally;
  std::size_t surviving = 0;
  for (const auto& v : votes) {
    if (v.score > config.score_threshold) {
      auto& [count, total] = tally[v.label];
      ++count;
      total += v.score;
      ++surviving;
    }
  }
  VoteOutcome out{"O", surviving, false};
  if (surviving == 0) return out;

  const std::size_t base = config.basis == MajorityBasis::all_models ? votes.size() : surviving;
  for (const auto& [label, entry] : tally) {
    if (2 * entry.first > base) {
      out.label = label;
      return out;
    }
  }

  out.fallback_used = true;
  if (config.fallback == FallbackPolicy::outside) return out;
  double best = -1.0;
  for (const auto& [label, entry] : tally) {
    if (entry.second > best) {
      best = entry.second;
      out.label = label;
    }
  }
  return out;
}

std::string majority_vote(std::span<const TokenPrediction> votes, const VoteConfig& config) {
  return majority_vote_detailed(votes, config).label;
}

EnsembleResult ensemble_corpus(const std::vector<PredictionSet>& sets, const LabeledCorpus& reference,
                               const VoteConfig& config) {
  config.validate();
  if (sets.size() < 2) throw ValidationError("ensembling needs at least two prediction sets");
  for (const auto& s : sets) check_alignment(s, reference);

  EnsembleResult result;
  std::vector<TokenPrediction> votes(sets.size());
  for (std::size_t i = 0; i < reference.sentences.size(); ++i) {
    const std::size_t n = reference.sentences[i].size();
    std::vector<VoteOutcome> outcomes;
    std::vector<std::string> raw;
    outcomes.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m = 0; m < sets.size(); ++m) votes[m] = sets[m].sentences[i][j];
      auto outcome = majority_vote_detailed(votes, config);
      if (outcome.fallback_used) ++result.fallback_count;
      raw.push_back(outcome.label);
      outcomes.push_back(std::move(outcome));
    }
    result.labels.push_back(repair_bio(raw));
    result.votes.push_back(std::move(outcomes));
  }
  return result;
}

std::string render_vote_diagnostics(const EnsembleResult& result, const LabeledCorpus& reference,
                                    const VoteConfig& config, std::size_t model_count, bool threshold_defaulted) {
  std::ostringstream out;
  out << "# models " << model_count << '\n';
  out << "# threshold " << format_double(config.score_threshold) << (threshold_defaulted ? " (default)" : "") << '\n';
  out << "# majority " << to_string(config.basis) << '\n';
  out << "# fallback " << to_string(config.fallback) << '\n';
  out << "# fallback_activations " << result.fallback_count << '\n';
  out << "sentence\ttoken\tsurviving\tvoted\tfinal\tfallback\n";
  for (std::size_t i = 0; i < reference.sentences.size(); ++i) {
    for (std::size_t j = 0; j < reference.sentences[i].size(); ++j) {
      const auto& v = result.votes[i][j];
      out << reference.sentences[i].id << '\t' << j << '\t' << v.surviving << '\t' << v.label << '\t'
          << result.labels[i][j] << '\t' << (v.fallback_used ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

PredictionSet ensemble_predictions(const std::vector<PredictionSet>& sets, const EnsembleResult& result,
                                   const VoteConfig& config, const std::string& model_id) {
  PredictionSet out;
  out.model_id = model_id;
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    std::vector<TokenPrediction> sentence;
    for (std::size_t j = 0; j < result.labels[i].size(); ++j) {
      const auto& voted = result.votes[i][j].label;
      double total = 0.0;
      std::size_t count = 0;
      for (const auto& s : sets) {
        const auto& p = s.sentences[i][j];
        if (p.score > config.score_threshold && p.label == voted) {
          total += p.score;
          ++count;
        }
      }
      sentence.push_back({result.labels[i][j], count ? total / static_cast<double>(count) : 0.0});
    }
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace nerkit
