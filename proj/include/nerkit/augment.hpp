#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nerkit/corpus.hpp"

namespace nerkit {

struct Lexicon {
  std::string name;
  std::string source_lang;
  std::string target_lang;
  std::unordered_map<std::string, std::string> entries;

  const std::string* find(const std::string& token) const;
};

// One "source<TAB>target" pair per line.
Lexicon parse_lexicon(std::string_view text, std::string name, std::string source_lang, std::string target_lang);
Lexicon read_lexicon(const std::string& path, std::string name, std::string source_lang, std::string target_lang);

class TranslatorBackend {
 public:
  virtual ~TranslatorBackend() = default;
  // nullopt when the backend has no translation for the token.
  virtual std::optional<std::string> translate_token(const std::string& token, const std::string& source_lang,
                                                     const std::string& target_lang) = 0;
  virtual std::string kind() const = 0;
};

class LexiconBackend final : public TranslatorBackend {
 public:
  explicit LexiconBackend(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

  std::optional<std::string> translate_token(const std::string& token, const std::string& source_lang,
                                             const std::string& target_lang) override;
  std::string kind() const override { return "offline-lexicon"; }
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  Lexicon lexicon_;
};

// Wraps a remote translation call with a disk cache keyed by (language pair,
// token) and a minimum interval between remote calls. Without a fetcher the
// backend answers from the cache only and a miss is an IoError.
class CachedServiceBackend final : public TranslatorBackend {
 public:
  using Fetcher = std::function<std::optional<std::string>(const std::string& token, const std::string& source_lang,
                                                           const std::string& target_lang)>;

  CachedServiceBackend(std::string cache_path, Fetcher fetcher = {},
                       std::chrono::milliseconds min_interval = std::chrono::milliseconds(0));

  std::optional<std::string> translate_token(const std::string& token, const std::string& source_lang,
                                             const std::string& target_lang) override;
  std::string kind() const override { return "external-service"; }

  std::size_t remote_calls() const { return remote_calls_; }
  std::size_t cache_size() const { return cache_.size(); }

 private:
  void persist() const;

  std::string cache_path_;
  Fetcher fetcher_;
  std::chrono::milliseconds min_interval_;
  std::chrono::steady_clock::time_point last_call_{};
  std::size_t remote_calls_ = 0;
  // key: "src\ttgt\ttoken"; empty value records a known miss.
  std::map<std::string, std::string> cache_;
};

enum class TranslateFallback {
  keep,          // untranslatable tokens pass through verbatim
  mark_unknown,  // untranslatable tokens become kUnknownToken
};

inline constexpr const char* kUnknownToken = "<unk>";

TranslateFallback parse_translate_fallback(const std::string& name);
std::string to_string(TranslateFallback fallback);

struct TranslateStats {
  std::size_t tokens = 0;
  std::size_t translated = 0;
  std::size_t changed = 0;
  std::size_t fallbacks = 0;
};

// Replaces every token surface with its translation. Tags, POS, middle
// columns, sentence ids and sentence structure are untouched.
LabeledCorpus token_translate(const LabeledCorpus& corpus, TranslatorBackend& backend, const std::string& source_lang,
                              const std::string& target_lang, TranslateFallback fallback = TranslateFallback::keep,
                              TranslateStats* stats = nullptr);

struct CorpusSource {
  std::string name;
  const LabeledCorpus* corpus = nullptr;
};

// Concatenates in order. With more than one source, sentence ids become
// "<source name>/<id>". The tagset is the union of all sources.
LabeledCorpus combine(const std::vector<CorpusSource>& sources, const std::string& output_name);

struct TranslationStep {
  std::string backend;
  std::string source_lang;
  std::string target_lang;
  TranslateFallback fallback = TranslateFallback::keep;
};

struct PlanSource {
  std::string name;
  std::string path;
  std::optional<std::size_t> max_sentences;  // first N sentences; all when unset
  std::optional<TranslationStep> translate;
};

struct BackendSpec {
  std::string kind;  // "lexicon" or "external-service"
  std::string path;  // lexicon file or cache file
  std::string source_lang;
  std::string target_lang;
};

struct AugmentPlan {
  std::string name;
  std::string output_path;
  std::vector<PlanSource> sources;
  std::map<std::string, BackendSpec> backends;
};

// JSON plan; relative paths resolve against base_dir.
AugmentPlan parse_plan(std::string_view json_text, const std::string& base_dir = ".");
AugmentPlan read_plan(const std::string& path);

struct PlanResult {
  LabeledCorpus corpus;
  std::string manifest;
};

// Runs the plan over already-loaded sources (keyed by source name) and
// backends (keyed by backend name).
PlanResult run_plan(const AugmentPlan& plan, const std::map<std::string, LabeledCorpus>& sources,
                    const std::map<std::string, TranslatorBackend*>& backends);

// Loads every source and backend named by the plan, runs it, and writes the
// corpus to plan.output_path and the manifest next to it.
PlanResult run_plan_files(const AugmentPlan& plan);

}  // namespace nerkit
