#include "wardlab/types.hpp"

namespace wardlab {

std::string to_string(Series s) { return s == Series::C ? "C" : "R"; }

std::string to_string(Condition c) {
  switch (c) {
    case Condition::C1: return "C1";
    case Condition::C2: return "C2";
    case Condition::C3: return "C3";
    case Condition::C4: return "C4";
  }
  return "?";
}

std::string to_string(Language l) { return l == Language::JA ? "JA" : "EN"; }

std::string to_string(AlignmentLevel a) {
  switch (a) {
    case AlignmentLevel::base: return "L-base";
    case AlignmentLevel::standard: return "L-default";
    case AlignmentLevel::heavy: return "L-heavy";
  }
  return "?";
}

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::talk: return "talk";
    case ActionKind::whisper: return "whisper";
    case ActionKind::monologue: return "monologue";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::marker_replaced: return "marker_replaced";
    case Verdict::silent_drop: return "silent_drop";
  }
  return "?";
}

std::string to_string(FilterLayer l) {
  return l == FilterLayer::experimental ? "experimental" : "api";
}

std::string to_string(NormalizationScope s) {
  return s == NormalizationScope::agent_level ? "agent_level" : "run_level";
}

Series series_from_string(std::string_view s) {
  if (s == "C") return Series::C;
  if (s == "R") return Series::R;
  throw ConfigError("unknown series: " + std::string(s));
}

Condition condition_from_string(std::string_view s) {
  if (s == "C1") return Condition::C1;
  if (s == "C2") return Condition::C2;
  if (s == "C3") return Condition::C3;
  if (s == "C4") return Condition::C4;
  throw ConfigError("unknown condition: " + std::string(s));
}

Language language_from_string(std::string_view s) {
  if (s == "JA") return Language::JA;
  if (s == "EN") return Language::EN;
  throw ConfigError("unknown language: " + std::string(s));
}

AlignmentLevel alignment_level_from_string(std::string_view s) {
  if (s == "L-base") return AlignmentLevel::base;
  if (s == "L-default") return AlignmentLevel::standard;
  if (s == "L-heavy") return AlignmentLevel::heavy;
  throw ConfigError("unknown alignment level: " + std::string(s));
}

ActionKind action_kind_from_string(std::string_view s) {
  if (s == "talk") return ActionKind::talk;
  if (s == "whisper") return ActionKind::whisper;
  if (s == "monologue") return ActionKind::monologue;
  throw DataError("unknown action kind: " + std::string(s));
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "pass") return Verdict::pass;
  if (s == "marker_replaced") return Verdict::marker_replaced;
  if (s == "silent_drop") return Verdict::silent_drop;
  throw DataError("unknown verdict: " + std::string(s));
}

FilterLayer filter_layer_from_string(std::string_view s) {
  if (s == "experimental") return FilterLayer::experimental;
  if (s == "api") return FilterLayer::api;
  throw DataError("unknown filter layer: " + std::string(s));
}

NormalizationScope scope_from_string(std::string_view s) {
  if (s == "agent_level" || s == "agent") return NormalizationScope::agent_level;
  if (s == "run_level" || s == "run") return NormalizationScope::run_level;
  throw ConfigError("unknown normalization scope: " + std::string(s));
}

}  // namespace wardlab
