#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nerkit/nn/gradcheck.hpp"
#include "nerkit/tagger.hpp"

namespace nerkit {

struct GradCheckCase {
  std::string name;
  nn::GradCheckReport report;
};

// Each layer on its own, on random inputs with a random linear readout so
// that every output position carries gradient.
std::vector<GradCheckCase> gradcheck_components(std::uint64_t seed, const nn::GradCheckOptions& options = {});

// The whole tagger for `config` (dropout off) on a small built-in corpus.
// A decode-only CRF head is checked in two parts: the encoder against the
// token cross-entropy and the transitions against the CRF likelihood.
std::vector<GradCheckCase> gradcheck_model(TaggerConfig config, const nn::GradCheckOptions& options = {});

std::string render_gradcheck(const std::vector<GradCheckCase>& cases, double tolerance);

}  // namespace nerkit
