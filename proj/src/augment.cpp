#include "nerkit/augment.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "nerkit/error.hpp"

namespace nerkit {

namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << contents;
    if (!out) throw IoError("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path + "': " + ec.message());
}

bool has_space(const std::string& s) {
  return s.find_first_of(" \t\r\n\v\f") != std::string::npos;
}

std::string cache_key(const std::string& src, const std::string& tgt, const std::string& token) {
  return src + '\t' + tgt + '\t' + token;
}

}  // namespace

// ---------------------------------------------------------------- lexicon

const std::string* Lexicon::find(const std::string& token) const {
  auto it = entries.find(token);
  return it == entries.end() ? nullptr : &it->second;
}

Lexicon parse_lexicon(std::string_view text, std::string name, std::string source_lang, std::string target_lang) {
  Lexicon lex{std::move(name), std::move(source_lang), std::move(target_lang), {}};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(lex.name, line_no, "expected 'source<TAB>target'");
    }
    std::string src = nfc_normalize(line.substr(0, tab));
    std::string tgt = nfc_normalize(line.substr(tab + 1));
    if (src.empty() || tgt.empty() || has_space(src) || has_space(tgt)) {
      throw ParseError(lex.name, line_no, "lexicon entries must be non-empty and whitespace-free");
    }
    auto [it, inserted] = lex.entries.emplace(src, tgt);
    if (!inserted && it->second != tgt) {
      throw ParseError(lex.name, line_no, "conflicting translations for '" + src + "'");
    }
  }
  return lex;
}

Lexicon read_lexicon(const std::string& path, std::string name, std::string source_lang, std::string target_lang) {
  return parse_lexicon(slurp(path), std::move(name), std::move(source_lang), std::move(target_lang));
}

std::optional<std::string> LexiconBackend::translate_token(const std::string& token, const std::string& source_lang,
                                                           const std::string& target_lang) {
  if (source_lang != lexicon_.source_lang || target_lang != lexicon_.target_lang) {
    throw ValidationError("lexicon '" + lexicon_.name + "' translates " + lexicon_.source_lang + "->" +
                          lexicon_.target_lang + ", asked for " + source_lang + "->" + target_lang);
  }
  if (const auto* t = lexicon_.find(token)) return *t;
  return std::nullopt;
}

// ---------------------------------------------------------------- cached service

CachedServiceBackend::CachedServiceBackend(std::string cache_path, Fetcher fetcher,
                                           std::chrono::milliseconds min_interval)
    : cache_path_(std::move(cache_path)), fetcher_(std::move(fetcher)), min_interval_(min_interval) {
  if (!fs::exists(cache_path_)) return;
  std::istringstream in(slurp(cache_path_));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    // src TAB tgt TAB token TAB translation (translation may be empty)
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) throw ParseError(cache_path_, line_no, "malformed translation cache line");
    cache_[cache_key(fields[0], fields[1], fields[2])] = fields[3];
  }
}

void CachedServiceBackend::persist() const {
  std::string out;
  for (const auto& [key, value] : cache_) out += key + '\t' + value + '\n';
  write_atomic(cache_path_, out);
}

std::optional<std::string> CachedServiceBackend::translate_token(const std::string& token,
                                                                 const std::string& source_lang,
                                                                 const std::string& target_lang) {
  const auto key = cache_key(source_lang, target_lang, token);
  if (auto it = cache_.find(key); it != cache_.end()) {
    if (it->second.empty()) return std::nullopt;
    return it->second;
  }
  if (!fetcher_) {
    throw IoError("translation service unreachable and no cached translation for '" + token + "' (" + source_lang +
                  "->" + target_lang + ")");
  }
  if (min_interval_.count() > 0 && remote_calls_ > 0) {
    const auto ready = last_call_ + min_interval_;
    const auto now = std::chrono::steady_clock::now();
    if (now < ready) std::this_thread::sleep_for(ready - now);
  }
  std::optional<std::string> result;
  try {
    result = fetcher_(token, source_lang, target_lang);
  } catch (const std::exception& e) {
    throw IoError("translation service failed for '" + token + "': " + e.what());
  }
  last_call_ = std::chrono::steady_clock::now();
  ++remote_calls_;
  std::string stored = result.value_or("");
  if (has_space(stored)) {
    throw ValidationError("translation of '" + token + "' contains whitespace; token-wise translation needs one token");
  }
  cache_[key] = stored;
  persist();
  if (stored.empty()) return std::nullopt;
  return stored;
}

// ---------------------------------------------------------------- translate / combine

TranslateFallback parse_translate_fallback(const std::string& name) {
  if (name == "keep") return TranslateFallback::keep;
  if (name == "mark-unknown") return TranslateFallback::mark_unknown;
  throw ValidationError("unknown translation fallback '" + name + "'");
}

std::string to_string(TranslateFallback fallback) {
  return fallback == TranslateFallback::keep ? "keep" : "mark-unknown";
}

LabeledCorpus token_translate(const LabeledCorpus& corpus, TranslatorBackend& backend, const std::string& source_lang,
                              const std::string& target_lang, TranslateFallback fallback, TranslateStats* stats) {
  LabeledCorpus out = corpus;
  TranslateStats local;
  for (auto& s : out.sentences) {
    for (auto& t : s.tokens) {
      ++local.tokens;
      auto translated = backend.translate_token(t.surface, source_lang, target_lang);
      std::string replacement;
      if (translated && !translated->empty()) {
        ++local.translated;
        replacement = nfc_normalize(*translated);
        if (has_space(replacement)) {
          throw ValidationError("translation of '" + t.surface + "' is not a single token");
        }
      } else {
        ++local.fallbacks;
        replacement = fallback == TranslateFallback::keep ? t.surface : kUnknownToken;
      }
      if (replacement != t.surface) ++local.changed;
      t.surface = std::move(replacement);
    }
  }
  out.provenance.push_back("token_translate(" + source_lang + "->" + target_lang + ", backend=" + backend.kind() +
                           ", fallback=" + to_string(fallback) + ")");
  if (stats) *stats = local;
  return out;
}

LabeledCorpus combine(const std::vector<CorpusSource>& sources, const std::string& output_name) {
  if (sources.empty()) throw ValidationError("combine needs at least one corpus");
  LabeledCorpus out;
  out.has_gold = sources.front().corpus->has_gold;
  out.provenance.push_back("combine(" + output_name + ")");
  const bool namespaced = sources.size() > 1;
  std::set<std::string> ids;
  for (const auto& src : sources) {
    if (!src.corpus) throw ValidationError("combine: source '" + src.name + "' is null");
    if (src.corpus->has_gold != out.has_gold) {
      throw ValidationError("combine: source '" + src.name + "' differs in gold-column convention");
    }
    const std::size_t first = out.sentences.size();
    for (const auto& s : src.corpus->sentences) {
      Sentence copy = s;
      if (namespaced) copy.id = src.name + "/" + s.id;
      if (!ids.insert(copy.id).second) {
        throw ValidationError("combine: duplicate sentence id '" + copy.id + "' in output '" + output_name + "'");
      }
      out.sentences.push_back(std::move(copy));
    }
    out.tagset = out.tagset.merged(src.corpus->tagset);
    std::string trail;
    for (const auto& p : src.corpus->provenance) trail += (trail.empty() ? "" : " | ") + p;
    out.provenance.push_back("source " + src.name + " sentences [" + std::to_string(first) + ", " +
                             std::to_string(out.sentences.size()) + "): " + trail);
  }
  return out;
}

// ---------------------------------------------------------------- plans

AugmentPlan parse_plan(std::string_view json_text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("augment plan: ") + e.what());
  }
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
  };
  try {
    AugmentPlan plan;
    plan.name = j.at("name").get<std::string>();
    plan.output_path = resolve(j.at("output").get<std::string>());
    if (j.contains("backends")) {
      for (const auto& [name, b] : j.at("backends").items()) {
        BackendSpec spec;
        spec.kind = b.at("kind").get<std::string>();
        if (spec.kind == "lexicon") {
          spec.path = resolve(b.at("path").get<std::string>());
          spec.source_lang = b.at("source_lang").get<std::string>();
          spec.target_lang = b.at("target_lang").get<std::string>();
        } else if (spec.kind == "external-service") {
          spec.path = resolve(b.at("cache").get<std::string>());
        } else {
          throw ValidationError("backend '" + name + "': unknown kind '" + spec.kind + "'");
        }
        plan.backends.emplace(name, std::move(spec));
      }
    }
    for (const auto& s : j.at("sources")) {
      PlanSource src;
      src.name = s.at("name").get<std::string>();
      src.path = resolve(s.at("path").get<std::string>());
      if (s.contains("max_sentences")) src.max_sentences = s.at("max_sentences").get<std::size_t>();
      if (s.contains("translate")) {
        const auto& t = s.at("translate");
        TranslationStep step;
        step.backend = t.at("backend").get<std::string>();
        step.source_lang = t.at("from").get<std::string>();
        step.target_lang = t.at("to").get<std::string>();
        if (t.contains("fallback")) step.fallback = parse_translate_fallback(t.at("fallback").get<std::string>());
        if (!plan.backends.count(step.backend)) {
          throw ValidationError("source '" + src.name + "' uses undeclared backend '" + step.backend + "'");
        }
        src.translate = std::move(step);
      }
      plan.sources.push_back(std::move(src));
    }
    if (plan.sources.empty()) throw ValidationError("augment plan lists no sources");
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("augment plan: ") + e.what());
  }
}

AugmentPlan read_plan(const std::string& path) {
  return parse_plan(slurp(path), fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

PlanResult run_plan(const AugmentPlan& plan, const std::map<std::string, LabeledCorpus>& sources,
                    const std::map<std::string, TranslatorBackend*>& backends) {
  if (plan.sources.empty()) throw ValidationError("augment plan lists no sources");
  std::ostringstream manifest;
  manifest << "plan " << plan.name << '\n';

  std::vector<LabeledCorpus> prepared;
  prepared.reserve(plan.sources.size());
  std::size_t step_no = 0;
  for (const auto& src : plan.sources) {
    auto it = sources.find(src.name);
    if (it == sources.end()) throw ValidationError("augment plan: source '" + src.name + "' was not provided");
    LabeledCorpus corpus = it->second;
    manifest << "step " << ++step_no << ": source " << src.name << ": " << corpus.size() << " sentences\n";
    if (src.max_sentences && *src.max_sentences < corpus.size()) {
      const std::size_t before = corpus.size();
      corpus.sentences.resize(*src.max_sentences);
      corpus.provenance.push_back("cap(" + std::to_string(*src.max_sentences) + ")");
      manifest << "step " << ++step_no << ": cap " << src.name << ": " << before << " -> " << corpus.size()
               << " sentences\n";
    }
    if (src.translate) {
      const auto& t = *src.translate;
      auto b = backends.find(t.backend);
      if (b == backends.end() || !b->second) {
        throw ValidationError("augment plan: backend '" + t.backend + "' was not provided");
      }
      TranslateStats stats;
      const std::size_t before = corpus.size();
      corpus = token_translate(corpus, *b->second, t.source_lang, t.target_lang, t.fallback, &stats);
      manifest << "step " << ++step_no << ": translate " << src.name << " " << t.source_lang << "->"
               << t.target_lang << " via " << t.backend << " (" << b->second->kind() << ", fallback "
               << to_string(t.fallback) << "): " << before << " -> " << corpus.size() << " sentences, "
               << stats.translated << " of " << stats.tokens << " tokens translated, " << stats.changed
               << " changed\n";
    }
    prepared.push_back(std::move(corpus));
  }

  std::vector<CorpusSource> parts;
  for (std::size_t i = 0; i < plan.sources.size(); ++i) parts.push_back({plan.sources[i].name, &prepared[i]});
  PlanResult result;
  result.corpus = combine(parts, plan.name);
  manifest << "step " << ++step_no << ": combine " << parts.size() << " source(s): " << result.corpus.size()
           << " sentences, " << result.corpus.token_count() << " tokens\n";
  result.manifest = manifest.str();
  return result;
}

PlanResult run_plan_files(const AugmentPlan& plan) {
  std::map<std::string, LabeledCorpus> sources;
  for (const auto& src : plan.sources) {
    if (sources.count(src.name)) throw ValidationError("augment plan: duplicate source name '" + src.name + "'");
    sources.emplace(src.name, read_conll_file(src.path));
  }
  std::vector<std::unique_ptr<TranslatorBackend>> owned;
  std::map<std::string, TranslatorBackend*> backends;
  for (const auto& [name, spec] : plan.backends) {
    if (spec.kind == "lexicon") {
      owned.push_back(std::make_unique<LexiconBackend>(read_lexicon(spec.path, name, spec.source_lang, spec.target_lang)));
    } else {
      owned.push_back(std::make_unique<CachedServiceBackend>(spec.path));
    }
    backends[name] = owned.back().get();
  }
  PlanResult result = run_plan(plan, sources, backends);
  write_atomic(plan.output_path, write_conll(result.corpus));
  write_atomic(plan.output_path + ".manifest", result.manifest);
  return result;
}

}  // namespace nerkit
