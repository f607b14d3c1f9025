#pragma once

#include <span>
#include <string>
#include <vector>

#include "nerkit/corpus.hpp"
#include "nerkit/prediction.hpp"

namespace nerkit {

enum class MajorityBasis {
  all_models,       // strictly more than half of every participating model
  surviving_votes,  // strictly more than half of the votes left after thresholding
};

enum class FallbackPolicy {
  highest_total_score,  // label with the largest summed surviving score
  outside,              // emit O
};

struct VoteConfig {
  double score_threshold = 0.5;  // votes with score <= threshold are discarded
  MajorityBasis basis = MajorityBasis::all_models;
  FallbackPolicy fallback = FallbackPolicy::highest_total_score;

  void validate() const;
};

FallbackPolicy parse_fallback(const std::string& name);
std::string to_string(FallbackPolicy policy);
MajorityBasis parse_majority_basis(const std::string& name);
std::string to_string(MajorityBasis basis);

struct VoteOutcome {
  std::string label;
  std::size_t surviving = 0;
  bool fallback_used = false;
};

VoteOutcome majority_vote_detailed(std::span<const TokenPrediction> votes, const VoteConfig& config);
std::string majority_vote(std::span<const TokenPrediction> votes, const VoteConfig& config);

struct EnsembleResult {
  std::vector<std::vector<std::string>> labels;  // repaired
  std::vector<std::vector<VoteOutcome>> votes;   // labels before repair
  std::size_t fallback_count = 0;
};

// Votes per token across all sets, then repairs each sentence once.
EnsembleResult ensemble_corpus(const std::vector<PredictionSet>& sets, const LabeledCorpus& reference,
                               const VoteConfig& config);

// Tab-separated per-token table: sentence id, token index, surviving votes,
// voted label, final label, fallback flag.
std::string render_vote_diagnostics(const EnsembleResult& result, const LabeledCorpus& reference,
                                    const VoteConfig& config, std::size_t model_count, bool threshold_defaulted);

// Final per-token score: mean score of the surviving votes that agree with the
// voted label, 0 when none do.
PredictionSet ensemble_predictions(const std::vector<PredictionSet>& sets, const EnsembleResult& result,
                                   const VoteConfig& config, const std::string& model_id = "ensemble");

}  // namespace nerkit
