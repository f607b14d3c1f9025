#include "nerkit/crf.hpp"

#include <cmath>
#include <limits>

#include "nerkit/error.hpp"
#include "nerkit/nn/layers.hpp"

namespace nerkit::crf {

namespace {

void check_shapes(const Matrix& emissions, const Transitions& trans) {
  const std::size_t t = emissions.cols();
  if (emissions.rows() == 0 || t == 0) throw ShapeError("CRF emissions must be at least 1 x 1");
  if (trans.transitions.rows() != t || trans.transitions.cols() != t || trans.start.rows() != 1 ||
      trans.start.cols() != t || trans.end.rows() != 1 || trans.end.cols() != t) {
    throw ShapeError("CRF transitions do not match " + std::to_string(t) + " tags");
  }
}

// alpha(i, t): log-sum of all prefixes ending in tag t at position i,
// including the emission at i.
Matrix forward_scores(const Matrix& e, const Transitions& tr) {
  const std::size_t n = e.rows(), T = e.cols();
  Matrix alpha(n, T);
  for (std::size_t t = 0; t < T; ++t) alpha(0, t) = tr.start[t] + e(0, t);
  std::vector<double> terms(T);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) terms[s] = alpha(i - 1, s) + tr.transitions(s, t);
      alpha(i, t) = e(i, t) + nn::log_sum_exp(terms);
    }
  }
  return alpha;
}

// beta(i, t): log-sum of all suffixes after position i given tag t at i,
// including the end score.
Matrix backward_scores(const Matrix& e, const Transitions& tr) {
  const std::size_t n = e.rows(), T = e.cols();
  Matrix beta(n, T);
  for (std::size_t t = 0; t < T; ++t) beta(n - 1, t) = tr.end[t];
  std::vector<double> terms(T);
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t s = 0; s < T; ++s) {
      for (std::size_t t = 0; t < T; ++t) terms[t] = tr.transitions(s, t) + e(i + 1, t) + beta(i + 1, t);
      beta(i, s) = nn::log_sum_exp(terms);
    }
  }
  return beta;
}

double final_log_partition(const Matrix& alpha, const Transitions& tr) {
  const std::size_t n = alpha.rows(), T = alpha.cols();
  std::vector<double> terms(T);
  for (std::size_t t = 0; t < T; ++t) terms[t] = alpha(n - 1, t) + tr.end[t];
  return nn::log_sum_exp(terms);
}

}  // namespace

Transitions Transitions::zeros(std::size_t tags) { return {Matrix(tags, tags), Matrix(1, tags), Matrix(1, tags)}; }

double path_score(const Matrix& emissions, const Transitions& trans, const std::vector<std::size_t>& path) {
  check_shapes(emissions, trans);
  if (path.size() != emissions.rows()) throw ShapeError("path length does not match emissions");
  for (auto t : path) {
    if (t >= emissions.cols()) throw ValidationError("tag index " + std::to_string(t) + " out of range");
  }
  double score = trans.start[path.front()] + trans.end[path.back()];
  for (std::size_t i = 0; i < path.size(); ++i) {
    score += emissions(i, path[i]);
    if (i > 0) score += trans.transitions(path[i - 1], path[i]);
  }
  return score;
}

double log_partition(const Matrix& emissions, const Transitions& trans) {
  check_shapes(emissions, trans);
  return final_log_partition(forward_scores(emissions, trans), trans);
}

Decoded viterbi(const Matrix& emissions, const Transitions& trans) {
  check_shapes(emissions, trans);
  const std::size_t n = emissions.rows(), T = emissions.cols();
  Matrix best(n, T);
  std::vector<std::size_t> back(n * T, 0);
  for (std::size_t t = 0; t < T; ++t) best(0, t) = trans.start[t] + emissions(0, t);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t arg = 0;
      double top = best(i - 1, 0) + trans.transitions(0, t);
      for (std::size_t s = 1; s < T; ++s) {
        const double cand = best(i - 1, s) + trans.transitions(s, t);
        if (cand > top) {
          top = cand;
          arg = s;
        }
      }
      best(i, t) = top + emissions(i, t);
      back[i * T + t] = arg;
    }
  }
  Decoded out;
  std::size_t last = 0;
  double top = best(n - 1, 0) + trans.end[0];
  for (std::size_t t = 1; t < T; ++t) {
    const double cand = best(n - 1, t) + trans.end[t];
    if (cand > top) {
      top = cand;
      last = t;
    }
  }
  out.score = top;
  out.path.assign(n, 0);
  out.path[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) out.path[i - 1] = back[i * T + out.path[i]];
  return out;
}

Matrix marginals(const Matrix& emissions, const Transitions& trans) {
  check_shapes(emissions, trans);
  const Matrix alpha = forward_scores(emissions, trans);
  const Matrix beta = backward_scores(emissions, trans);
  const double log_z = final_log_partition(alpha, trans);
  Matrix p(emissions.rows(), emissions.cols());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(alpha[i] + beta[i] - log_z);
  return p;
}

NllResult nll_grad(const Matrix& emissions, const Transitions& trans, const std::vector<std::size_t>& gold) {
  check_shapes(emissions, trans);
  const std::size_t n = emissions.rows(), T = emissions.cols();
  if (gold.size() != n) throw ShapeError("gold length does not match emissions");
  for (auto t : gold) {
    if (t >= T) throw ValidationError("gold tag index " + std::to_string(t) + " out of range");
  }
  const Matrix alpha = forward_scores(emissions, trans);
  const Matrix beta = backward_scores(emissions, trans);
  const double log_z = final_log_partition(alpha, trans);

  NllResult r;
  r.loss = log_z - path_score(emissions, trans, gold);
  r.d_emissions = Matrix(n, T);
  r.d_transitions = {Matrix(T, T), Matrix(1, T), Matrix(1, T)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) r.d_emissions(i, t) = std::exp(alpha(i, t) + beta(i, t) - log_z);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t s = 0; s < T; ++s) {
      for (std::size_t t = 0; t < T; ++t) {
        r.d_transitions.transitions(s, t) +=
            std::exp(alpha(i, s) + trans.transitions(s, t) + emissions(i + 1, t) + beta(i + 1, t) - log_z);
      }
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    r.d_transitions.start[t] = r.d_emissions(0, t);
    r.d_transitions.end[t] = r.d_emissions(n - 1, t);
  }
  for (std::size_t i = 0; i < n; ++i) {
    r.d_emissions(i, gold[i]) -= 1.0;
    if (i > 0) r.d_transitions.transitions(gold[i - 1], gold[i]) -= 1.0;
  }
  r.d_transitions.start[gold.front()] -= 1.0;
  r.d_transitions.end[gold.back()] -= 1.0;
  return r;
}

Transitions bio_constraints(const TagSet& tagset, double penalty) {
  const std::size_t T = tagset.size();
  Transitions c = Transitions::zeros(T);
  for (std::size_t j = 0; j < T; ++j) {
    auto to = parse_bio_label(tagset.label(j));
    if (to->prefix != 'I') continue;
    c.start[j] = penalty;
    for (std::size_t i = 0; i < T; ++i) {
      auto from = parse_bio_label(tagset.label(i));
      if (from->prefix == 'O' || from->cls != to->cls) c.transitions(i, j) = penalty;
    }
  }
  return c;
}

}  // namespace nerkit::crf
