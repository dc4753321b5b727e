#include "wardlab/censorship.hpp"

#include <fstream>

namespace wardlab::censorship {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

RuleScope scope_from(const std::string& v) {
  if (v == "sexual") return RuleScope::sexual;
  if (v == "political") return RuleScope::political;
  if (v == "both") return RuleScope::both;
  throw ConfigError("unknown rule scope: " + v);
}

RuleTarget target_from(const std::string& v) {
  if (v == "one_agent") return RuleTarget::one_agent;
  if (v == "all_agents") return RuleTarget::all_agents;
  throw ConfigError("unknown rule target: " + v);
}

}  // namespace

FilterRule FilterRuleSet::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open filter rule file: " + path.string());
  FilterRule rule;
  rule.id = path.stem().string();
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '@') {
      auto space = t.find(' ');
      if (space == std::string::npos) {
        throw ConfigError(path.string() + ": malformed directive: " + t);
      }
      std::string key = t.substr(1, space - 1);
      std::string value = trim(t.substr(space + 1));
      if (key == "scope") rule.scope = scope_from(value);
      else if (key == "layer") rule.layer = filter_layer_from_string(value);
      else if (key == "target") rule.target = target_from(value);
      else if (key == "language") rule.language = language_from_string(value);
      else throw ConfigError(path.string() + ": unknown directive @" + key);
      continue;
    }
    rule.patterns.push_back(t);
  }
  if (rule.patterns.empty()) {
    throw DataError("filter rule file has no patterns: " + path.string());
  }
  return rule;
}

FilterRuleSet FilterRuleSet::load_dir(const std::filesystem::path& dir,
                                      Language lang) {
  FilterRuleSet set;
  if (!std::filesystem::exists(dir)) return set;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    FilterRule rule = parse_file(f);
    if (rule.language == lang) set.rules.push_back(std::move(rule));
  }
  return set;
}

DeliveryDecision api_level_filter(const engine::Action& action,
                                  const FilterRuleSet& rules, Language lang) {
  if (action.text.empty()) return {};
  for (const auto& rule : rules.rules) {
    if (rule.layer != FilterLayer::api || rule.language != lang) continue;
    if (measures::match_keywords(action.text, rule.patterns, lang) > 0) {
      return {Verdict::silent_drop, FilterLayer::api, rule.id};
    }
  }
  return {};
}

DeliveryDecision apply_filter(const engine::RunConfig& config,
                              const engine::Action& action,
                              const FilterRuleSet& rules,
                              const measures::LexiconSet& lexicons) {
  if (action.kind == ActionKind::monologue) {
    // monologues are never delivered, so they are never filtered
    return {};
  }
  if (action.kind == ActionKind::whisper && !config.filter_whispers) {
    return {};
  }
  if ((config.condition == Condition::C1 || config.condition == Condition::C2) &&
      config.censored_agent && action.speaker == *config.censored_agent) {
    // C1 and C2 impose the identical filter; only the visibility differs.
    bool fired = measures::match_keywords(action.text, lexicons.sexual,
                                          lexicons.language) > 0;
    std::string rule_id = "sexual-lexicon";
    if (!fired) {
      for (const auto& rule : rules.rules) {
        if (rule.layer != FilterLayer::experimental ||
            rule.language != config.language) {
          continue;
        }
        if (measures::match_keywords(action.text, rule.patterns,
                                     config.language) > 0) {
          fired = true;
          rule_id = rule.id;
          break;
        }
      }
    }
    if (fired) {
      if (config.condition == Condition::C1) {
        return {Verdict::marker_replaced, FilterLayer::experimental, rule_id};
      }
      return {Verdict::silent_drop, FilterLayer::experimental, rule_id};
    }
  }
  // C3 is instructed silence, not enforcement; C4 is the uncensored control.
  // One firing per action at most: only unfired actions reach the api layer.
  if (config.agents[static_cast<size_t>(action.speaker)].api_filtered) {
    return api_level_filter(action, rules, config.language);
  }
  return {};
}

FiringStats firing_stats(const engine::RunLog& log) {
  FiringStats stats;
  stats.condition = log.config.condition;
  stats.flagged = !log.analyzable();
  for (const auto& ev : log.events) {
    if (const auto* ae = std::get_if<engine::ActionEvent>(&ev)) {
      if (ae->action.kind != ActionKind::monologue) ++stats.eligible_actions;
    } else if (const auto* fe = std::get_if<engine::FiringEvent>(&ev)) {
      if (fe->layer == FilterLayer::experimental) ++stats.experimental_firings;
      else ++stats.api_firings;
    }
  }
  if (stats.eligible_actions > 0) {
    stats.rate = static_cast<double>(stats.experimental_firings + stats.api_firings) /
                 static_cast<double>(stats.eligible_actions);
  }
  return stats;
}

}  // namespace wardlab::censorship
