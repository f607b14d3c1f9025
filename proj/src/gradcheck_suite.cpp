#include "nerkit/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>

#include "nerkit/crf.hpp"
#include "nerkit/nn/layers.hpp"

namespace nerkit {

using nn::GradCheckOptions;
using nn::Matrix;
using nn::ParamStore;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

double readout(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

struct Instance {
  ParamStore store;
  std::function<double(const ParamStore&)> loss;
  std::function<void(ParamStore&)> backprop;
};

// A central difference at the fixed step carries roughly 1e-10 * |loss| of
// roundoff, so nonzero gradients below 1e-6 * max(1, |loss|) cannot be
// resolved to the tolerance. Instances with such entries among the checked
// scalars are redrawn; the screen looks at analytic gradients only.
constexpr double kResolvableScale = 1e-6;
constexpr int kMaxDraws = 64;

bool well_conditioned(Instance& inst, const GradCheckOptions& options) {
  const double floor = kResolvableScale * std::max(1.0, std::abs(inst.loss(inst.store)));
  inst.store.zero_grad();
  inst.backprop(inst.store);
  for (const auto& [name, positions] : nn::check_plan(inst.store, options)) {
    const auto& grad = inst.store.grad(name);
    for (const std::size_t i : positions) {
      if (grad[i] != 0.0 && std::abs(grad[i]) < floor) return false;
    }
  }
  return true;
}

GradCheckCase run_case(const std::string& name, const std::function<Instance(Rng&)>& draw, Rng& rng,
                       const GradCheckOptions& options) {
  Instance inst = draw(rng);
  int attempt = 1;
  for (; attempt < kMaxDraws && !well_conditioned(inst, options); ++attempt) inst = draw(rng);
  return {name, nn::gradient_check(inst.store, inst.loss, inst.backprop, options)};
}

// Layer with an optional trainable input: loss = sum(forward(input) * r).
template <typename Layer, typename Cache>
Instance layer_instance(const Layer& layer, Rng& rng, std::size_t rows, std::size_t cols, std::size_t out_rows,
                        std::size_t out_cols) {
  Instance inst;
  layer.init(inst.store, rng);
  inst.store.add("input", random_matrix(rows, cols, rng));
  const Matrix r = random_matrix(out_rows, out_cols, rng);
  inst.loss = [layer, r](const ParamStore& s) { return readout(layer.forward(s, s.value("input"), nullptr), r); };
  inst.backprop = [layer, r](ParamStore& s) {
    Cache cache;
    layer.forward(s, s.value("input"), &cache);
    s.grad("input") += layer.backward(s, cache, r);
  };
  return inst;
}

Instance embedding_instance(Rng& rng) {
  const nn::Embedding layer("table", 6, 4);
  Instance inst;
  layer.init(inst.store, rng);
  const std::vector<std::size_t> ids{1, 3, 3, 0, 5};
  const Matrix r = random_matrix(ids.size(), 4, rng);
  inst.loss = [layer, ids, r](const ParamStore& s) { return readout(layer.forward(s, ids), r); };
  inst.backprop = [layer, ids, r](ParamStore& s) { layer.backward(s, ids, r); };
  return inst;
}

Instance crf_instance(Rng& rng) {
  const std::size_t n = 5, T = 4;
  Instance inst;
  inst.store.add("emissions", random_matrix(n, T, rng));
  inst.store.add("transitions", random_matrix(T, T, rng));
  inst.store.add("start", random_matrix(1, T, rng));
  inst.store.add("end", random_matrix(1, T, rng));
  std::vector<std::size_t> gold(n);
  for (auto& g : gold) g = rng.below(T);
  auto trans = [](const ParamStore& s) {
    return crf::Transitions{s.value("transitions"), s.value("start"), s.value("end")};
  };
  inst.loss = [gold, trans](const ParamStore& s) { return crf::nll_grad(s.value("emissions"), trans(s), gold).loss; };
  inst.backprop = [gold, trans](ParamStore& s) {
    auto r = crf::nll_grad(s.value("emissions"), trans(s), gold);
    s.grad("emissions") += r.d_emissions;
    s.grad("transitions") += r.d_transitions.transitions;
    s.grad("start") += r.d_transitions.start;
    s.grad("end") += r.d_transitions.end;
  };
  return inst;
}

constexpr const char* kFixture =
    "John NNP B-PER\nSmith NNP I-PER\nvisited VBD O\nParis NNP B-LOC\n\n"
    "the DT O\nRiver NNP B-LOC\nThames NNP I-LOC\nflows VBZ O\n\n"
    "Anna NNP B-PER\nsaw VBD O\nJohn NNP B-PER\n\n";

LabeledCorpus fixture_corpus() {
  ColumnConfig columns;
  columns.pos_column = 1;
  return parse_conll(kFixture, columns, "gradcheck-fixture");
}

ContextualVectors fixture_contextual(const LabeledCorpus& corpus, std::size_t dim, std::uint64_t seed) {
  ContextualVectors ctx;
  Rng rng(seed);
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      ctx.set(s.id, i, std::move(v));
    }
  }
  return ctx;
}

GradCheckCase check_model(const std::string& name, const TaggerConfig& config, const LabeledCorpus& corpus,
                          const ContextualVectors* ctx, const GradCheckOptions& options) {
  const TaggerModel base = build_model(config, corpus, nullptr, ctx);
  // Default init leaves attention almost uniform and the CRF scores at zero,
  // so parameters are redrawn wider.
  auto draw = [&](Rng& rng) {
    auto model = std::make_shared<TaggerModel>(base);
    Instance inst;
    for (auto& [pname, p] : model->params) {
      for (auto& v : p.value.values()) v = rng.uniform(-1.0, 1.0);
    }
    inst.store = model->params;
    inst.loss = [model, &corpus, ctx](const ParamStore& s) {
      TaggerModel probe = *model;
      probe.params = s;
      double total = 0.0;
      for (const auto& sentence : corpus.sentences) total += sentence_loss(probe, sentence, ctx);
      return total;
    };
    inst.backprop = [model, &corpus, ctx](ParamStore& s) {
      std::swap(model->params, s);
      Rng unused(0);
      for (const auto& sentence : corpus.sentences) accumulate_gradients(*model, sentence, unused, 1.0, ctx);
      std::swap(model->params, s);
    };
    return inst;
  };
  Rng rng(derive_seed(config.seed, 7));
  return run_case(name, draw, rng, options);
}

}  // namespace

std::vector<GradCheckCase> gradcheck_components(std::uint64_t seed, const GradCheckOptions& options) {
  Rng rng(seed);
  std::vector<GradCheckCase> out;
  out.push_back(run_case("embedding", embedding_instance, rng, options));
  out.push_back(run_case(
      "linear",
      [](Rng& r) { return layer_instance<nn::Linear, nn::LinearCache>(nn::Linear("linear", 5, 3), r, 4, 5, 4, 3); },
      rng, options));
  out.push_back(run_case(
      "char_cnn",
      [](Rng& r) { return layer_instance<nn::CharCnn, nn::CharCnnCache>(nn::CharCnn("cnn", 3, 3, 4), r, 6, 3, 1, 4); },
      rng, options));
  out.push_back(run_case(
      "bilstm",
      [](Rng& r) { return layer_instance<nn::BiLstm, nn::BiLstmCache>(nn::BiLstm("lstm", 3, 4, 2), r, 5, 3, 5, 8); },
      rng, options));
  out.push_back(run_case("attention",
                         [](Rng& r) {
                           return layer_instance<nn::MultiHeadAttention, nn::MhaCache>(
                               nn::MultiHeadAttention("mha", 6, 2), r, 4, 6, 4, 6);
                         },
                         rng, options));
  out.push_back(run_case("crf", crf_instance, rng, options));
  return out;
}

std::vector<GradCheckCase> gradcheck_model(TaggerConfig config, const GradCheckOptions& options) {
  config.dropout = 0.0;
  const LabeledCorpus corpus = fixture_corpus();
  ContextualVectors ctx;
  if (config.use_contextual_slot) {
    ctx = fixture_contextual(corpus, config.contextual_dim != 0 ? config.contextual_dim : 4, config.seed);
  }
  const ContextualVectors* ctx_ptr = config.use_contextual_slot ? &ctx : nullptr;

  std::vector<GradCheckCase> out;
  if (config.use_crf && config.crf_mode == CrfMode::decode_only) {
    TaggerConfig encoder_only = config;
    encoder_only.use_crf = false;
    out.push_back(check_model("model.encoder", encoder_only, corpus, ctx_ptr, options));
    GradCheckOptions crf_only = options;
    crf_only.only = {"crf.end", "crf.start", "crf.transitions"};
    out.push_back(check_model("model.crf", config, corpus, ctx_ptr, crf_only));
  } else {
    out.push_back(check_model("model", config, corpus, ctx_ptr, options));
  }
  return out;
}

std::string render_gradcheck(const std::vector<GradCheckCase>& cases, double tolerance) {
  std::ostringstream out;
  char buf[64];
  bool all = true;
  for (const auto& c : cases) {
    for (const auto& p : c.report.params) {
      std::snprintf(buf, sizeof buf, "%.3e", p.max_relative_error);
      const bool ok = p.max_relative_error < tolerance;
      all = all && ok;
      out << (ok ? "ok   " : "FAIL ") << c.name << ' ' << p.name << " scalars=" << p.scalars
          << " max_rel_error=" << buf << '\n';
    }
  }
  std::snprintf(buf, sizeof buf, "%.1e", tolerance);
  out << (all ? "gradcheck passed" : "gradcheck FAILED") << " (tolerance " << buf << ")\n";
  return out.str();
}

}  // namespace nerkit
