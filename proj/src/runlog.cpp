#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wardlab/engine.hpp"

// JSONL log format: first line is the config object, then one event object
// per line, strictly ordered by (day, turn, seq). Keys serialize sorted, so
// replaying the same config and seed with scripted backends reproduces the
// file byte-identically. UTF-8 throughout.

namespace wardlab::engine {

namespace {

using nlohmann::json;

json agent_to_json(const AgentSpec& a) {
  json j;
  j["name"] = a.name;
  j["backend"] = a.backend == BackendKind::scripted ? "scripted" : "remote";
  j["model_id"] = a.model_id;
  j["persona"] = {{"ja", a.persona.ja}, {"en", a.persona.en}};
  j["api_filtered"] = a.api_filtered;
  if (a.backend == BackendKind::scripted) {
    json p;
    p["monologue_prob"] = a.profile.monologue_prob;
    p["whisper_prob"] = a.profile.whisper_prob;
    p["sexual_rate"] = a.profile.sexual_rate;
    p["protective_rate"] = a.profile.protective_rate;
    p["escalation_delta"] = a.profile.escalation_delta;
    p["sexual_start_day"] = a.profile.sexual_start_day;
    if (!a.profile.templates_ja.empty()) p["templates_ja"] = a.profile.templates_ja;
    if (!a.profile.templates_en.empty()) p["templates_en"] = a.profile.templates_en;
    j["profile"] = p;
  }
  if (a.endpoint) {
    json e;
    e["base_url"] = a.endpoint->base_url;
    e["path"] = a.endpoint->path;
    e["auth_env"] = a.endpoint->auth_env;
    e["temperature"] = a.endpoint->temperature;
    e["max_tokens"] = a.endpoint->max_tokens;
    e["retries"] = a.endpoint->retries;
    e["backoff_ms"] = a.endpoint->backoff_ms;
    j["endpoint"] = e;
  }
  return j;
}

AgentSpec agent_from_json(const json& j) {
  AgentSpec a;
  a.name = j.at("name").get<std::string>();
  a.backend = j.at("backend").get<std::string>() == "remote" ? BackendKind::remote
                                                             : BackendKind::scripted;
  a.model_id = j.at("model_id").get<std::string>();
  if (j.contains("persona")) {
    a.persona.ja = j["persona"].value("ja", "");
    a.persona.en = j["persona"].value("en", "");
  }
  a.api_filtered = j.value("api_filtered", false);
  if (j.contains("profile")) {
    const auto& p = j["profile"];
    a.profile.monologue_prob = p.value("monologue_prob", 0.2);
    a.profile.whisper_prob = p.value("whisper_prob", 0.1);
    a.profile.sexual_rate = p.value("sexual_rate", 0.0);
    a.profile.protective_rate = p.value("protective_rate", 0.0);
    a.profile.escalation_delta = p.value("escalation_delta", 0.0);
    a.profile.sexual_start_day = p.value("sexual_start_day", 5);
    if (p.contains("templates_ja")) {
      a.profile.templates_ja = p["templates_ja"].get<std::vector<std::string>>();
    }
    if (p.contains("templates_en")) {
      a.profile.templates_en = p["templates_en"].get<std::vector<std::string>>();
    }
  }
  if (j.contains("endpoint")) {
    const auto& e = j["endpoint"];
    RemoteEndpoint ep;
    ep.base_url = e.value("base_url", "");
    ep.path = e.value("path", "/v1/chat/completions");
    ep.auth_env = e.value("auth_env", "");
    ep.temperature = e.value("temperature", 0.7);
    ep.max_tokens = e.value("max_tokens", 512);
    ep.retries = e.value("retries", 3);
    ep.backoff_ms = e.value("backoff_ms", 250);
    a.endpoint = ep;
  }
  return a;
}

json config_to_json(const RunConfig& c, const std::string& schema_version) {
  json j;
  j["type"] = "config";
  j["schema_version"] = schema_version;
  j["run_id"] = c.run_id;
  j["series"] = to_string(c.series);
  j["condition"] = to_string(c.condition);
  j["language"] = to_string(c.language);
  if (c.alignment_level) j["alignment_level"] = to_string(*c.alignment_level);
  if (c.censored_agent) j["censored_agent"] = *c.censored_agent;
  j["replication_index"] = c.replication_index;
  j["seed"] = c.seed;
  j["turns_per_day"] = c.turns_per_day;
  j["days"] = c.days;
  j["max_context_events"] = c.max_context_events;
  j["c2_speaker_retains_blocked"] = c.c2_speaker_retains_blocked;
  j["filter_whispers"] = c.filter_whispers;
  j["count_whispers"] = c.count_whispers;
  j["marker_text"] = c.marker_text;
  j["retry_budget"] = c.retry_budget;
  j["retry_backoff_ms"] = c.retry_backoff_ms;
  json agents = json::array();
  for (const auto& a : c.agents) agents.push_back(agent_to_json(a));
  j["agents"] = agents;
  return j;
}

RunConfig config_from_json(const json& j, std::string* schema_version) {
  RunConfig c;
  if (schema_version) *schema_version = j.value("schema_version", "1");
  c.run_id = j.at("run_id").get<std::string>();
  c.series = series_from_string(j.at("series").get<std::string>());
  c.condition = condition_from_string(j.at("condition").get<std::string>());
  c.language = language_from_string(j.at("language").get<std::string>());
  if (j.contains("alignment_level")) {
    c.alignment_level =
        alignment_level_from_string(j["alignment_level"].get<std::string>());
  }
  if (j.contains("censored_agent")) c.censored_agent = j["censored_agent"].get<int>();
  c.replication_index = j.value("replication_index", 1);
  c.seed = j.at("seed").get<std::uint64_t>();
  c.turns_per_day = j.value("turns_per_day", 6);
  c.days = j.value("days", 7);
  c.max_context_events = j.value("max_context_events", 0);
  c.c2_speaker_retains_blocked = j.value("c2_speaker_retains_blocked", true);
  c.filter_whispers = j.value("filter_whispers", true);
  c.count_whispers = j.value("count_whispers", true);
  c.marker_text = j.value("marker_text", "[CENSORED]");
  c.retry_budget = j.value("retry_budget", 3);
  c.retry_backoff_ms = j.value("retry_backoff_ms", 250);
  for (const auto& a : j.at("agents")) c.agents.push_back(agent_from_json(a));
  return c;
}

json event_to_json(const Event& ev) {
  json j;
  std::visit(
      [&](const auto& e) {
        j["day"] = e.day;
        j["turn"] = e.turn;
        j["seq"] = e.seq;
      },
      ev);
  if (const auto* e = std::get_if<ActionEvent>(&ev)) {
    j["type"] = "action";
    j["speaker"] = e->action.speaker;
    j["kind"] = to_string(e->action.kind);
    if (e->action.addressee) j["addressee"] = *e->action.addressee;
    j["text"] = e->action.text;
    if (e->fallback) j["fallback"] = true;
  } else if (const auto* e = std::get_if<DeliveryEvent>(&ev)) {
    j["type"] = "delivery";
    j["action_seq"] = e->action_seq;
    j["verdict"] = to_string(e->verdict);
    if (e->layer) j["layer"] = to_string(*e->layer);
    if (e->rule_id) j["rule"] = *e->rule_id;
  } else if (const auto* e = std::get_if<FiringEvent>(&ev)) {
    j["type"] = "censorship";
    j["action_seq"] = e->action_seq;
    j["speaker"] = e->speaker;
    j["layer"] = to_string(e->layer);
    j["rule"] = e->rule_id;
  } else if (const auto* e = std::get_if<VoteEvent>(&ev)) {
    j["type"] = "vote";
    j["voter"] = e->voter;
    if (e->target) j["target"] = *e->target;
    else j["target"] = nullptr;
  } else if (const auto* e = std::get_if<VoteResultEvent>(&ev)) {
    j["type"] = "vote_result";
    if (e->expelled) j["expelled"] = *e->expelled;
    else j["expelled"] = nullptr;
    j["tally"] = e->tally;
    j["abstentions"] = e->abstentions;
  } else if (const auto* e = std::get_if<AbortEvent>(&ev)) {
    j["type"] = "aborted";
    j["reason"] = e->reason;
  }
  return j;
}

Event event_from_json(const json& j) {
  std::string type = j.at("type").get<std::string>();
  int day = j.at("day").get<int>();
  int turn = j.at("turn").get<int>();
  std::uint64_t seq = j.at("seq").get<std::uint64_t>();
  if (type == "action") {
    ActionEvent e;
    e.day = day;
    e.turn = turn;
    e.seq = seq;
    e.action.day = day;
    e.action.turn = turn;
    e.action.speaker = j.at("speaker").get<int>();
    e.action.kind = action_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("addressee")) e.action.addressee = j["addressee"].get<int>();
    e.action.text = j.at("text").get<std::string>();
    e.fallback = j.value("fallback", false);
    return e;
  }
  if (type == "delivery") {
    DeliveryEvent e;
    e.day = day;
    e.turn = turn;
    e.seq = seq;
    e.action_seq = j.at("action_seq").get<std::uint64_t>();
    e.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (j.contains("layer")) {
      e.layer = filter_layer_from_string(j["layer"].get<std::string>());
    }
    if (j.contains("rule")) e.rule_id = j["rule"].get<std::string>();
    return e;
  }
  if (type == "censorship") {
    FiringEvent e;
    e.day = day;
    e.turn = turn;
    e.seq = seq;
    e.action_seq = j.at("action_seq").get<std::uint64_t>();
    e.speaker = j.at("speaker").get<int>();
    e.layer = filter_layer_from_string(j.at("layer").get<std::string>());
    e.rule_id = j.value("rule", "");
    return e;
  }
  if (type == "vote") {
    VoteEvent e;
    e.day = day;
    e.turn = turn;
    e.seq = seq;
    e.voter = j.at("voter").get<int>();
    if (j.contains("target") && !j["target"].is_null()) {
      e.target = j["target"].get<int>();
    }
    return e;
  }
  if (type == "vote_result") {
    VoteResultEvent e;
    e.day = day;
    e.turn = turn;
    e.seq = seq;
    if (j.contains("expelled") && !j["expelled"].is_null()) {
      e.expelled = j["expelled"].get<int>();
    }
    e.tally = j.value("tally", std::vector<int>{});
    e.abstentions = j.value("abstentions", 0);
    return e;
  }
  if (type == "aborted") {
    AbortEvent e;
    e.day = day;
    e.turn = turn;
    e.seq = seq;
    e.reason = j.value("reason", "");
    return e;
  }
  throw DataError("unknown event type in log: " + type);
}

}  // namespace

std::string RunLog::to_jsonl() const {
  std::string out = config_to_json(config, schema_version).dump();
  out += '\n';
  for (const auto& ev : events) {
    out += event_to_json(ev).dump();
    out += '\n';
  }
  return out;
}

RunLog RunLog::from_jsonl(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  bool config_seen = false;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("log line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!config_seen) {
      if (j.value("type", "") != "config") {
        throw DataError("log must begin with a config line");
      }
      log.config = config_from_json(j, &log.schema_version);
      config_seen = true;
    } else {
      log.events.push_back(event_from_json(j));
    }
  }
  if (!config_seen) throw DataError("empty log");
  return log;
}

void RunLog::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write log file: " + path);
  out << to_jsonl();
  if (!out.good()) throw DataError("write failed: " + path);
}

RunLog RunLog::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open log file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

}  // namespace wardlab::engine
