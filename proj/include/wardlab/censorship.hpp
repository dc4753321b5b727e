#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wardlab/engine.hpp"
#include "wardlab/measures.hpp"
#include "wardlab/types.hpp"

namespace wardlab::censorship {

enum class RuleScope { sexual, political, both };
enum class RuleTarget { one_agent, all_agents };

struct FilterRule {
  std::string id;  // file stem by default
  std::vector<std::string> patterns;
  RuleScope scope = RuleScope::sexual;
  FilterLayer layer = FilterLayer::experimental;
  RuleTarget target = RuleTarget::one_agent;
  Language language = Language::EN;
};

// Pattern list files: one pattern per line, '#' comments, '@key value'
// directives for scope/layer/target/language.
struct FilterRuleSet {
  std::vector<FilterRule> rules;

  static FilterRule parse_file(const std::filesystem::path& path);
  // loads every *.txt under dir, keeping rules for the given language
  static FilterRuleSet load_dir(const std::filesystem::path& dir, Language lang);
};

struct DeliveryDecision {
  Verdict verdict = Verdict::pass;
  std::optional<FilterLayer> layer;
  std::optional<std::string> rule_id;
};

// Experimental layer (C1/C2 on the configured censored agent), then the
// api layer for flagged backends. An action that fired on the experimental
// layer is never re-evaluated by the api layer. Monologues are never
// filtered.
DeliveryDecision apply_filter(const engine::RunConfig& config,
                              const engine::Action& action,
                              const FilterRuleSet& rules,
                              const measures::LexiconSet& lexicons);

// Infrastructure-level filter: silent drop on match, invisible to the
// producing model (its own context keeps the text).
DeliveryDecision api_level_filter(const engine::Action& action,
                                  const FilterRuleSet& rules, Language lang);

struct FiringStats {
  Condition condition = Condition::C4;
  int experimental_firings = 0;
  int api_firings = 0;
  int eligible_actions = 0;  // delivered-eligible: talks and whispers
  double rate = 0.0;         // firings / eligible
  bool flagged = false;      // log was partial
};

FiringStats firing_stats(const engine::RunLog& log);

}  // namespace wardlab::censorship
