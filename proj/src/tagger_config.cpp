#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nerkit/error.hpp"
#include "nerkit/tagger.hpp"

namespace nerkit {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError(key + ": expected a real number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string to_string(StopMetric metric) { return metric == StopMetric::eval_loss ? "eval_loss" : "eval_f1"; }
std::string to_string(CrfMode mode) { return mode == CrfMode::trained ? "trained" : "decode_only"; }

void TaggerConfig::set(const std::string& key, const std::string& value) {
  if (key == "word_dim") word_dim = to_size(key, value);
  else if (key == "use_contextual_slot") use_contextual_slot = to_bool(key, value);
  else if (key == "contextual_dim") contextual_dim = to_size(key, value);
  else if (key == "use_char_cnn") use_char_cnn = to_bool(key, value);
  else if (key == "char_dim") char_dim = to_size(key, value);
  else if (key == "char_kernel") char_kernel = to_size(key, value);
  else if (key == "char_filters") char_filters = to_size(key, value);
  else if (key == "use_pos") use_pos = to_bool(key, value);
  else if (key == "pos_dim") pos_dim = to_size(key, value);
  else if (key == "lstm_layers") lstm_layers = to_size(key, value);
  else if (key == "hidden") hidden = to_size(key, value);
  else if (key == "use_mha") use_mha = to_bool(key, value);
  else if (key == "mha_heads") mha_heads = to_size(key, value);
  else if (key == "use_crf") use_crf = to_bool(key, value);
  else if (key == "crf_mode") {
    if (value == "trained") crf_mode = CrfMode::trained;
    else if (value == "decode_only") crf_mode = CrfMode::decode_only;
    else throw ValidationError("crf_mode: expected trained or decode_only, got '" + value + "'");
  } else if (key == "bio_constraints") bio_constraints = to_bool(key, value);
  else if (key == "dropout") dropout = to_real(key, value);
  else if (key == "batch_size") batch_size = to_size(key, value);
  else if (key == "max_epochs") max_epochs = to_size(key, value);
  else if (key == "patience") patience = to_size(key, value);
  else if (key == "learning_rate") learning_rate = to_real(key, value);
  else if (key == "weight_decay") weight_decay = to_real(key, value);
  else if (key == "early_stop_metric") {
    if (value == "eval_loss") early_stop_metric = StopMetric::eval_loss;
    else if (value == "eval_f1") early_stop_metric = StopMetric::eval_f1;
    else throw ValidationError("early_stop_metric: expected eval_loss or eval_f1, got '" + value + "'");
  } else if (key == "seed") seed = to_size(key, value);
  else throw ValidationError("unknown config key '" + key + "'");
}

std::vector<std::string> TaggerConfig::invalid_keys() const {
  std::vector<std::string> bad;
  if (word_dim == 0) bad.push_back("word_dim");
  if (use_char_cnn) {
    if (char_dim == 0) bad.push_back("char_dim");
    if (char_kernel == 0) bad.push_back("char_kernel");
    if (char_filters == 0) bad.push_back("char_filters");
  }
  if (use_pos && pos_dim == 0) bad.push_back("pos_dim");
  // The BiLSTM encoder is mandatory in every configuration.
  if (lstm_layers == 0) bad.push_back("lstm_layers");
  if (hidden == 0) bad.push_back("hidden");
  if (use_mha && (mha_heads == 0 || (2 * hidden) % mha_heads != 0)) bad.push_back("mha_heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad.push_back("dropout");
  if (batch_size == 0) bad.push_back("batch_size");
  if (max_epochs == 0) bad.push_back("max_epochs");
  if (patience == 0) bad.push_back("patience");
  if (!(learning_rate > 0.0)) bad.push_back("learning_rate");
  if (!(weight_decay >= 0.0)) bad.push_back("weight_decay");
  return bad;
}

void TaggerConfig::validate() const {
  auto bad = invalid_keys();
  if (bad.empty()) return;
  std::string msg = "invalid config value(s):";
  for (const auto& k : bad) msg += " " + k;
  throw ValidationError(msg);
}

std::string TaggerConfig::to_text() const {
  std::ostringstream out;
  out << "word_dim = " << word_dim << '\n';
  out << "use_contextual_slot = " << bool_text(use_contextual_slot) << '\n';
  out << "contextual_dim = " << contextual_dim << '\n';
  out << "use_char_cnn = " << bool_text(use_char_cnn) << '\n';
  out << "char_dim = " << char_dim << '\n';
  out << "char_kernel = " << char_kernel << '\n';
  out << "char_filters = " << char_filters << '\n';
  out << "use_pos = " << bool_text(use_pos) << '\n';
  out << "pos_dim = " << pos_dim << '\n';
  out << "lstm_layers = " << lstm_layers << '\n';
  out << "hidden = " << hidden << '\n';
  out << "use_mha = " << bool_text(use_mha) << '\n';
  out << "mha_heads = " << mha_heads << '\n';
  out << "use_crf = " << bool_text(use_crf) << '\n';
  out << "crf_mode = " << to_string(crf_mode) << '\n';
  out << "bio_constraints = " << bool_text(bio_constraints) << '\n';
  out << "dropout = " << format_double(dropout) << '\n';
  out << "batch_size = " << batch_size << '\n';
  out << "max_epochs = " << max_epochs << '\n';
  out << "patience = " << patience << '\n';
  out << "learning_rate = " << format_double(learning_rate) << '\n';
  out << "weight_decay = " << format_double(weight_decay) << '\n';
  out << "early_stop_metric = " << to_string(early_stop_metric) << '\n';
  out << "seed = " << seed << '\n';
  return out.str();
}

TaggerConfig TaggerConfig::from_text(std::string_view text, const std::string& source) {
  TaggerConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  std::vector<std::string> errors;
  while (std::getline(in, line)) {
    ++line_no;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const auto key = trim(std::string_view(stripped).substr(0, eq));
    const auto value = trim(std::string_view(stripped).substr(eq + 1));
    if (!seen.insert(key).second) {
      errors.push_back(key + ": duplicate key");
      continue;
    }
    try {
      config.set(key, value);
    } catch (const ValidationError& e) {
      errors.push_back(e.what());
    }
  }
  for (const auto& key : config.invalid_keys()) errors.push_back(key + ": invalid value");
  if (!errors.empty()) {
    std::string msg = source + ": invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return config;
}

TaggerConfig TaggerConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str(), path);
}

TaggerConfig TaggerConfig::s1_analog() {
  TaggerConfig c;
  c.use_crf = false;
  c.dropout = 0.1;
  c.batch_size = 8;
  c.max_epochs = 20;
  c.patience = 5;
  c.learning_rate = 1e-5;
  c.weight_decay = 0.01;
  c.early_stop_metric = StopMetric::eval_loss;
  return c;
}

TaggerConfig TaggerConfig::s2() {
  TaggerConfig c;
  c.lstm_layers = 2;
  c.dropout = 0.1;
  c.batch_size = 8;
  c.max_epochs = 30;
  c.patience = 5;
  c.learning_rate = 1e-5;
  c.weight_decay = 0.01;
  c.early_stop_metric = StopMetric::eval_f1;
  return c;
}

TaggerConfig TaggerConfig::preset(const std::string& name) {
  if (name == "s1") return s1_analog();
  if (name == "s2") return s2();
  if (name == "m2" || name == "m3" || name == "m8") return s1_analog();
  if (name == "m1") {
    auto c = s1_analog();
    c.use_mha = true;
    return c;
  }
  if (name == "m4" || name == "m5" || name == "m6") {
    auto c = s2();
    c.use_crf = true;
    c.use_mha = name == "m6";
    return c;
  }
  if (name == "m7") {
    auto c = s2();
    c.use_char_cnn = true;
    return c;
  }
  throw ValidationError("unknown preset '" + name + "'");
}

}  // namespace nerkit
