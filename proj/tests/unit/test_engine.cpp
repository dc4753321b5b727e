#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "wardlab/agents.hpp"
#include "wardlab/censorship.hpp"
#include "wardlab/engine.hpp"
#include "wardlab/measures.hpp"

using namespace wardlab;
using namespace wardlab::engine;

namespace {

measures::LexiconSet test_lexicon(Language lang = Language::EN) {
  measures::LexiconSet lex;
  lex.language = lang;
  if (lang == Language::EN) {
    lex.sexual = {"desire", "naked"};
    lex.protective = {"consent", "safety"};
    lex.conflict_markers = {"torn"};
    lex.compliance_markers = {"agree"};
  } else {
    lex.sexual = {"欲望", "裸"};
    lex.protective = {"同意", "安全"};
    lex.conflict_markers = {"葛藤"};
    lex.compliance_markers = {"賛成"};
  }
  return lex;
}

RunConfig scripted_config(Condition cond = Condition::C4,
                          Language lang = Language::EN, std::uint64_t seed = 42,
                          double sexual_rate = 0.0, double delta = 0.0) {
  RunConfig rc;
  rc.run_id = "test_" + to_string(cond) + "_" + to_string(lang) + "_s" +
              std::to_string(seed);
  rc.series = Series::C;
  rc.condition = cond;
  rc.language = lang;
  rc.seed = seed;
  rc.turns_per_day = 3;
  rc.days = 7;
  if (cond != Condition::C4) rc.censored_agent = 0;
  const char* names[] = {"Aoi", "Ren", "Sora", "Yuki"};
  for (int i = 0; i < 4; ++i) {
    AgentSpec a;
    a.name = names[i];
    a.backend = BackendKind::scripted;
    a.model_id = "scripted";
    a.profile.monologue_prob = 0.2;
    a.profile.whisper_prob = 0.15;
    if (i == 0) {
      a.profile.sexual_rate = sexual_rate;
      a.profile.escalation_delta = delta;
    }
    rc.agents.push_back(a);
  }
  return rc;
}

RunLog run_scripted(const RunConfig& rc,
                    const censorship::FilterRuleSet& rules = {}) {
  auto lex = test_lexicon(rc.language);
  agents::ScriptedBackend b0(rc.agents[0].profile, lex);
  agents::ScriptedBackend b1(rc.agents[1].profile, lex);
  agents::ScriptedBackend b2(rc.agents[2].profile, lex);
  agents::ScriptedBackend b3(rc.agents[3].profile, lex);
  BackendArray arr{&b0, &b1, &b2, &b3};
  return run_simulation(rc, arr, lex, rules);
}

int count_actions(const RunLog& log) {
  int n = 0;
  for (const auto& ev : log.events) {
    if (std::holds_alternative<ActionEvent>(ev)) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("config validation enforces the run invariants") {
  auto rc = scripted_config();
  CHECK_NOTHROW(rc.validate());

  SUBCASE("exactly four agents") {
    rc.agents.pop_back();
    CHECK_THROWS_AS(rc.validate(), ConfigError);
  }
  SUBCASE("censored agent present iff C1-C3") {
    rc.censored_agent = 1;  // C4 with a censored agent
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    rc.condition = Condition::C2;
    rc.censored_agent.reset();
    CHECK_THROWS_AS(rc.validate(), ConfigError);
  }
  SUBCASE("series R carries only C2 and C4") {
    rc.series = Series::R;
    rc.condition = Condition::C1;
    rc.censored_agent = 0;
    rc.alignment_level = AlignmentLevel::heavy;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    rc.condition = Condition::C2;
    CHECK_NOTHROW(rc.validate());
  }
  SUBCASE("series R requires an alignment level, series C forbids it") {
    rc.series = Series::R;
    rc.condition = Condition::C4;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
    rc.series = Series::C;
    rc.alignment_level = AlignmentLevel::base;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
  }
  SUBCASE("agent names unique") {
    rc.agents[1].name = rc.agents[0].name;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
  }
  SUBCASE("days bounded by the topic partition") {
    rc.days = 8;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
  }
}

TEST_CASE("schedule: round-robin with daily offset") {
  CHECK(agent_for_slot(1, 0) == 0);
  CHECK(agent_for_slot(1, 1) == 1);
  CHECK(agent_for_slot(1, 2) == 2);
  CHECK(agent_for_slot(1, 3) == 3);
  CHECK(agent_for_slot(2, 0) == 1);
  CHECK(agent_for_slot(2, 1) == 2);
  CHECK(agent_for_slot(2, 2) == 3);
  CHECK(agent_for_slot(2, 3) == 0);
}

TEST_CASE("schedule: every agent takes exactly days x turns_per_day actions") {
  auto rc = scripted_config();
  auto log = run_scripted(rc);
  std::map<int, int> per_agent;
  for (const auto& ev : log.events) {
    if (const auto* ae = std::get_if<ActionEvent>(&ev)) {
      per_agent[ae->action.speaker] += 1;
    }
  }
  for (int i = 0; i < 4; ++i) {
    CHECK(per_agent[i] == rc.days * rc.turns_per_day);
  }
}

TEST_CASE("topic phases partition days 1-7") {
  CHECK(topic_for_day(1).label == Topic::relationship);
  CHECK(topic_for_day(2).label == Topic::relationship);
  CHECK(topic_for_day(3).label == Topic::political_ethical);
  CHECK(topic_for_day(5).label == Topic::bodily_sexual);
  CHECK(topic_for_day(6).label == Topic::punitive);
  CHECK(topic_for_day(7).label == Topic::exit_vote);
  CHECK_THROWS_AS((void)topic_for_day(8), ConfigError);
  CHECK_THROWS_AS((void)topic_for_day(0), ConfigError);
}

TEST_CASE("tally: plurality, tie, and all-abstain") {
  auto expel = tally_exit_vote({1, 1, 1, std::nullopt});
  CHECK(expel.expelled == 1);
  auto tie = tally_exit_vote({1, 2, 1, 2});
  CHECK(!tie.expelled.has_value());
  auto none = tally_exit_vote({std::nullopt, std::nullopt, std::nullopt, std::nullopt});
  CHECK(!none.expelled.has_value());
  CHECK(none.abstentions == 4);
}

TEST_CASE("determinism: identical config and seed give byte-identical logs") {
  auto rc = scripted_config(Condition::C2, Language::JA, 99, 1.5, 0.2);
  auto log1 = run_scripted(rc);
  auto log2 = run_scripted(rc);
  CHECK(log1.to_jsonl() == log2.to_jsonl());
}

TEST_CASE("conservation: days x turns x 4 actions, one delivery each") {
  auto rc = scripted_config(Condition::C2, Language::EN, 5, 2.0, 0.0);
  auto log = run_scripted(rc);
  CHECK(count_actions(log) == log.expected_actions());

  std::set<std::uint64_t> action_seqs, delivered;
  for (const auto& ev : log.events) {
    if (const auto* ae = std::get_if<ActionEvent>(&ev)) action_seqs.insert(ae->seq);
    if (const auto* de = std::get_if<DeliveryEvent>(&ev)) {
      CHECK(!delivered.count(de->action_seq));
      delivered.insert(de->action_seq);
    }
  }
  CHECK(action_seqs == delivered);
}

TEST_CASE("forced choice: at most one action per (day, turn)") {
  auto log = run_scripted(scripted_config());
  std::set<std::pair<int, int>> seen;
  for (const auto& ev : log.events) {
    if (const auto* ae = std::get_if<ActionEvent>(&ev)) {
      auto key = std::make_pair(ae->day, ae->turn);
      CHECK(!seen.count(key));
      seen.insert(key);
    }
  }
}

TEST_CASE("log round-trip: parse(to_jsonl) reproduces the bytes") {
  auto rc = scripted_config(Condition::C1, Language::JA, 7, 2.0, 0.0);
  auto log = run_scripted(rc);
  auto text = log.to_jsonl();
  auto reparsed = RunLog::from_jsonl(text);
  CHECK(reparsed.to_jsonl() == text);
  CHECK(reparsed.analyzable());
}

TEST_CASE("log parsing rejects malformed input with line diagnostics") {
  CHECK_THROWS_AS((void)RunLog::from_jsonl(""), DataError);
  CHECK_THROWS_AS((void)RunLog::from_jsonl("{\"type\":\"action\"}\n"), DataError);
  CHECK_THROWS_AS((void)RunLog::from_jsonl("not json at all\n"), DataError);

  auto rc = scripted_config();
  RunLog log;
  log.config = rc;
  auto text = log.to_jsonl();
  text += "{\"type\":\"mystery\",\"day\":1,\"turn\":0,\"seq\":0}\n";
  CHECK_THROWS_AS((void)RunLog::from_jsonl(text), DataError);
}

TEST_CASE("view consistency: every event lands in exactly the predicted views") {
  auto rc = scripted_config(Condition::C2, Language::EN, 21, 2.0, 0.0);
  auto log = run_scripted(rc);

  std::array<TranscriptView, 4> views;
  for (int v = 0; v < 4; ++v) views[v] = visible_context(rc, log.events, v);
  auto view_has = [&](int viewer, std::uint64_t seq) {
    for (const auto& item : views[viewer].items) {
      if (item.seq == seq) return true;
    }
    return false;
  };

  std::map<std::uint64_t, const DeliveryEvent*> deliveries;
  for (const auto& ev : log.events) {
    if (const auto* de = std::get_if<DeliveryEvent>(&ev)) {
      deliveries[de->action_seq] = de;
    }
  }

  for (const auto& ev : log.events) {
    const auto* ae = std::get_if<ActionEvent>(&ev);
    if (!ae) continue;
    const auto& act = ae->action;
    const auto* de = deliveries.at(ae->seq);
    for (int viewer = 0; viewer < 4; ++viewer) {
      bool expected = false;
      bool own = viewer == act.speaker;
      if (act.kind == ActionKind::monologue) {
        expected = own;
      } else if (act.kind == ActionKind::whisper) {
        bool party = own || viewer == act.addressee.value_or(-1);
        if (de->verdict == Verdict::pass) expected = party;
        else if (de->verdict == Verdict::marker_replaced) expected = party;
        else expected = own && rc.c2_speaker_retains_blocked;
      } else {
        if (de->verdict == Verdict::pass) expected = true;
        else if (de->verdict == Verdict::marker_replaced) expected = true;
        else expected = own && rc.c2_speaker_retains_blocked;
      }
      INFO("seq=", ae->seq, " viewer=", viewer, " kind=", to_string(act.kind));
      CHECK(view_has(viewer, ae->seq) == expected);
    }
  }
}

TEST_CASE("monologue privacy: own view only") {
  auto rc = scripted_config();
  rc.agents[0].profile.monologue_prob = 1.0;
  rc.agents[0].profile.whisper_prob = 0.0;
  auto log = run_scripted(rc);
  for (int viewer = 1; viewer < 4; ++viewer) {
    auto view = visible_context(rc, log.events, viewer);
    for (const auto& item : view.items) {
      CHECK(!(item.kind == ActionKind::monologue && item.speaker == 0));
    }
  }
  auto own = visible_context(rc, log.events, 0);
  int monologues = 0;
  for (const auto& item : own.items) {
    if (item.kind == ActionKind::monologue) ++monologues;
  }
  CHECK(monologues == rc.days * rc.turns_per_day);
}

TEST_CASE("C1: blocked talk appears as the marker in all four views") {
  auto rc = scripted_config(Condition::C1, Language::EN, 11, 3.0, 0.0);
  rc.agents[0].profile.monologue_prob = 0.0;
  rc.agents[0].profile.whisper_prob = 0.0;
  auto log = run_scripted(rc);

  std::uint64_t marker_seq = 0;
  bool found = false;
  for (const auto& ev : log.events) {
    if (const auto* de = std::get_if<DeliveryEvent>(&ev)) {
      if (de->verdict == Verdict::marker_replaced) {
        marker_seq = de->action_seq;
        found = true;
        break;
      }
    }
  }
  REQUIRE(found);  // rate 3.0 guarantees sexual keywords on day 5 talks
  for (int viewer = 0; viewer < 4; ++viewer) {
    auto view = visible_context(rc, log.events, viewer);
    bool seen = false;
    for (const auto& item : view.items) {
      if (item.seq == marker_seq) {
        seen = true;
        CHECK(item.text == rc.marker_text);
        CHECK(item.marker);
      }
    }
    CHECK(seen);
  }
}

TEST_CASE("C2: speaker retains blocked text, others see nothing") {
  auto rc = scripted_config(Condition::C2, Language::EN, 11, 3.0, 0.0);
  rc.agents[0].profile.monologue_prob = 0.0;
  rc.agents[0].profile.whisper_prob = 0.0;
  auto log = run_scripted(rc);

  std::uint64_t dropped_seq = 0;
  bool found = false;
  for (const auto& ev : log.events) {
    if (const auto* de = std::get_if<DeliveryEvent>(&ev)) {
      if (de->verdict == Verdict::silent_drop) {
        dropped_seq = de->action_seq;
        found = true;
        break;
      }
    }
  }
  REQUIRE(found);

  std::string original_text;
  for (const auto& ev : log.events) {
    const auto* ae = std::get_if<ActionEvent>(&ev);
    if (ae && ae->seq == dropped_seq) original_text = ae->action.text;
  }
  auto speaker_view = visible_context(rc, log.events, 0);
  bool in_own = false;
  for (const auto& item : speaker_view.items) {
    if (item.seq == dropped_seq) {
      in_own = true;
      CHECK(!item.marker);
      CHECK(item.text == original_text);  // it believes it spoke
    }
  }
  CHECK(in_own);
  for (int viewer = 1; viewer < 4; ++viewer) {
    auto view = visible_context(rc, log.events, viewer);
    int present = 0;
    for (const auto& item : view.items) {
      if (item.seq == dropped_seq) ++present;
    }
    CHECK(present == 0);
  }

  SUBCASE("retention toggle removes it from the speaker's view too") {
    rc.c2_speaker_retains_blocked = false;
    auto view = visible_context(rc, log.events, 0);
    for (const auto& item : view.items) {
      CHECK(item.seq != dropped_seq);
    }
  }

  SUBCASE("per-view event counts differ by exactly the drop") {
    // the speaker's view contains one more copy of this event than others'
    int speaker_count = 0, other_count = 0;
    for (const auto& item : visible_context(rc, log.events, 0).items) {
      if (item.seq == dropped_seq) ++speaker_count;
    }
    for (const auto& item : visible_context(rc, log.events, 1).items) {
      if (item.seq == dropped_seq) ++other_count;
    }
    CHECK(speaker_count - other_count == 1);
  }
}

TEST_CASE("measurement sees pre-censorship text by default; post-delivery toggle") {
  auto rc = scripted_config(Condition::C2, Language::EN, 13, 2.0, 0.0);
  auto log = run_scripted(rc);
  auto lex = test_lexicon();

  auto pre = measures::extract_metrics(log, lex);
  CHECK(pre[0].sexual_count > 0);  // blocked content still counts

  measures::MeasureOptions post;
  post.pre_censorship = false;
  auto after = measures::extract_metrics(log, lex, post);
  // every keyword-carrying talk of agent 0 was silently dropped
  CHECK(after[0].sexual_count == 0);
  CHECK(after[0].monologue_ratio == pre[0].monologue_ratio);
}

TEST_CASE("whisper counting toggle") {
  auto rc = scripted_config(Condition::C4, Language::EN, 13, 0.0, 0.0);
  auto log = run_scripted(rc);
  auto lex = test_lexicon();
  // inject a whisper with a keyword into a copy of the log text path:
  // instead, verify the toggle end-to-end on a constructed event
  for (auto& ev : log.events) {
    if (auto* ae = std::get_if<ActionEvent>(&ev)) {
      if (ae->action.kind == ActionKind::whisper) {
        ae->action.text = "desire between us";
        break;
      }
    }
  }
  measures::MeasureOptions with, without;
  without.count_whispers = false;
  auto counted = measures::extract_metrics(log, lex, with);
  auto skipped = measures::extract_metrics(log, lex, without);
  int total_with = 0, total_without = 0;
  for (int i = 0; i < 4; ++i) {
    total_with += counted[static_cast<size_t>(i)].sexual_count;
    total_without += skipped[static_cast<size_t>(i)].sexual_count;
  }
  CHECK(total_with == total_without + 1);
}

TEST_CASE("secrets: the env var name is logged, never the credential") {
  auto rc = scripted_config();
  rc.agents[0].backend = BackendKind::remote;
  rc.agents[0].endpoint = RemoteEndpoint{};
  rc.agents[0].endpoint->base_url = "http://example.invalid";
  rc.agents[0].endpoint->auth_env = "WARDLAB_TEST_KEY";
  setenv("WARDLAB_TEST_KEY", "super-secret-token-value", 1);
  engine::RunLog log;
  log.config = rc;
  auto text = log.to_jsonl();
  CHECK(text.find("WARDLAB_TEST_KEY") != std::string::npos);
  CHECK(text.find("super-secret-token-value") == std::string::npos);
  unsetenv("WARDLAB_TEST_KEY");
}

TEST_CASE("context window: oldest items dropped, own monologues kept") {
  auto rc = scripted_config();
  rc.max_context_events = 5;
  rc.agents[0].profile.monologue_prob = 0.5;
  rc.agents[0].profile.whisper_prob = 0.0;
  auto log = run_scripted(rc);
  auto view = visible_context(rc, log.events, 0);
  CHECK(view.items.size() == 5);
  // with a cap this small, own monologues crowd out everything else by the end
  int own_monologues = 0;
  for (const auto& item : view.items) {
    if (item.kind == ActionKind::monologue && item.speaker == 0) ++own_monologues;
  }
  int total_own_monologues = 0;
  for (const auto& ev : log.events) {
    const auto* ae = std::get_if<ActionEvent>(&ev);
    if (ae && ae->action.speaker == 0 && ae->action.kind == ActionKind::monologue) {
      ++total_own_monologues;
    }
  }
  CHECK(own_monologues == std::min(5, total_own_monologues));
}

namespace {

class FailingBackend final : public AgentBackend {
 public:
  explicit FailingBackend(int fail_after) : fail_after_(fail_after) {}
  Action next_action(const TranscriptView&, const TurnMeta& meta) override {
    ++calls_;
    if (calls_ > fail_after_) throw BackendError("synthetic outage");
    Action a;
    a.kind = ActionKind::talk;
    a.speaker = meta.agent_index;
    a.text = "ok";
    return a;
  }
  std::optional<int> cast_vote(const TranscriptView&, const TurnMeta&) override {
    return std::nullopt;
  }
  int calls() const { return calls_; }

 private:
  int fail_after_;
  int calls_ = 0;
};

}  // namespace

namespace {

class SelfWhisperBackend final : public AgentBackend {
 public:
  Action next_action(const TranscriptView&, const TurnMeta& meta) override {
    Action a;
    a.kind = ActionKind::whisper;
    a.speaker = meta.agent_index;
    a.addressee = meta.agent_index;  // invalid: whisper to oneself
    a.text = "me to me";
    return a;
  }
  std::optional<int> cast_vote(const TranscriptView&, const TurnMeta&) override {
    return std::nullopt;
  }
};

}  // namespace

TEST_CASE("a whisper to oneself is rejected through the retry policy") {
  auto rc = scripted_config();
  rc.retry_backoff_ms = 0;
  auto lex = test_lexicon();
  SelfWhisperBackend bad;
  agents::ScriptedBackend ok(rc.agents[1].profile, lex);
  BackendArray arr{&bad, &ok, &ok, &ok};
  auto log = run_simulation(rc, arr, lex, {});
  CHECK(!log.analyzable());
}

TEST_CASE("backend exhaustion: aborted run is flagged non-analyzable") {
  auto rc = scripted_config();
  rc.retry_backoff_ms = 0;
  auto lex = test_lexicon();
  FailingBackend bad(2);  // two good turns, then a permanent outage
  agents::ScriptedBackend ok(rc.agents[1].profile, lex);
  BackendArray arr{&bad, &ok, &ok, &ok};
  auto log = run_simulation(rc, arr, lex, {});
  CHECK(!log.analyzable());
  bool aborted = false;
  for (const auto& ev : log.events) {
    if (std::holds_alternative<AbortEvent>(ev)) aborted = true;
  }
  CHECK(aborted);
  // 2 successes + 1 failing call + retry budget of 3 further attempts
  CHECK(bad.calls() == 2 + 1 + rc.retry_budget);

  CHECK_THROWS_AS((void)measures::extract_metrics(log, lex), DataError);
}
