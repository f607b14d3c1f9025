#pragma once

#include <cstddef>
#include <vector>

#include "nerkit/corpus.hpp"
#include "nerkit/nn/matrix.hpp"

namespace nerkit::crf {

using nn::Matrix;

// Transition scores: transitions(i, j) scores tag i followed by tag j. start
// and end are 1 x T rows applied at the first and last position.
struct Transitions {
  Matrix transitions;
  Matrix start;
  Matrix end;

  static Transitions zeros(std::size_t tags);
  std::size_t tags() const { return transitions.rows(); }
};

struct TransitionGrads {
  Matrix transitions;
  Matrix start;
  Matrix end;
};

struct Decoded {
  std::vector<std::size_t> path;
  double score = 0.0;
};

struct NllResult {
  double loss = 0.0;
  Matrix d_emissions;
  TransitionGrads d_transitions;
};

// Score of one tag path: start + emissions + transitions + end.
double path_score(const Matrix& emissions, const Transitions& trans, const std::vector<std::size_t>& path);

double log_partition(const Matrix& emissions, const Transitions& trans);

// Ties go to the lower tag index at every backpointer and at the final step.
Decoded viterbi(const Matrix& emissions, const Transitions& trans);

// [n x T] posterior tag probabilities from forward-backward.
Matrix marginals(const Matrix& emissions, const Transitions& trans);

// Negative log-likelihood of the gold path with gradients for emissions and
// all transition scores.
NllResult nll_grad(const Matrix& emissions, const Transitions& trans, const std::vector<std::size_t>& gold);

// Additive penalty matrix forbidding BIO-invalid moves: O -> I-X, B-X/I-X ->
// I-Y (Y != X), and start -> I-X. Entries are 0 or `penalty`.
Transitions bio_constraints(const TagSet& tagset, double penalty = -1e4);

}  // namespace nerkit::crf
