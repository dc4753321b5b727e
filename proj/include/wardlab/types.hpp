#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wardlab {

enum class Series { C, R };
enum class Condition { C1, C2, C3, C4 };
enum class Language { JA, EN };
enum class AlignmentLevel { base, standard, heavy };  // L-base, L-default, L-heavy
enum class ActionKind { talk, whisper, monologue };
enum class Verdict { pass, marker_replaced, silent_drop };
enum class FilterLayer { experimental, api };
enum class NormalizationScope { agent_level, run_level };

// Thrown when a config file or run spec violates an invariant.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when input data (logs, CSVs, lexicons) is malformed or incomplete.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a remote backend is unreachable or exhausted its retry budget.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(Series s);
std::string to_string(Condition c);
std::string to_string(Language l);
std::string to_string(AlignmentLevel a);
std::string to_string(ActionKind k);
std::string to_string(Verdict v);
std::string to_string(FilterLayer l);
std::string to_string(NormalizationScope s);

Series series_from_string(std::string_view s);
Condition condition_from_string(std::string_view s);
Language language_from_string(std::string_view s);
AlignmentLevel alignment_level_from_string(std::string_view s);
ActionKind action_kind_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);
FilterLayer filter_layer_from_string(std::string_view s);
NormalizationScope scope_from_string(std::string_view s);

// A string with one variant per supported language.
struct LangText {
  std::string ja;
  std::string en;

  const std::string& for_language(Language l) const {
    return l == Language::JA ? ja : en;
  }
};

}  // namespace wardlab
