#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wardlab/agent_spec.hpp"
#include "wardlab/types.hpp"

namespace wardlab::measures {
struct LexiconSet;
}
namespace wardlab::censorship {
struct FilterRuleSet;
}

namespace wardlab::engine {

inline constexpr const char* kSchemaVersion = "1";
inline constexpr int kAgentsPerRun = 4;

// Complete declarative description of one simulation run.
struct RunConfig {
  std::string run_id;
  Series series = Series::C;
  Condition condition = Condition::C4;
  Language language = Language::EN;
  std::optional<AlignmentLevel> alignment_level;  // Series R only
  std::vector<AgentSpec> agents;                  // exactly 4
  std::optional<int> censored_agent;              // present iff C1/C2/C3
  int replication_index = 1;
  std::uint64_t seed = 0;
  int turns_per_day = 6;  // rounds per day; every agent acts once per round
  int days = 7;

  // engine knobs
  int max_context_events = 0;  // 0 = unbounded
  bool c2_speaker_retains_blocked = true;
  bool filter_whispers = true;
  bool count_whispers = true;  // whisper text counts toward keyword measures
  std::string marker_text = "[CENSORED]";
  int retry_budget = 3;
  int retry_backoff_ms = 250;

  void validate() const;  // throws ConfigError on any invariant violation
};

struct Action {
  ActionKind kind = ActionKind::talk;
  int speaker = 0;
  std::optional<int> addressee;  // whisper only
  std::string text;
  int day = 0;
  int turn = 0;  // slot within the day, 0-based
  // set by the remote fallback path, recorded on the event rather than the
  // serialized action
  bool fallback = false;
};

struct ActionEvent {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  Action action;
  bool fallback = false;  // unparseable remote output replayed as raw talk
};

struct DeliveryEvent {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  std::uint64_t action_seq = 0;
  Verdict verdict = Verdict::pass;
  std::optional<FilterLayer> layer;
  std::optional<std::string> rule_id;
};

struct FiringEvent {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  std::uint64_t action_seq = 0;
  int speaker = 0;
  FilterLayer layer = FilterLayer::experimental;
  std::string rule_id;
};

struct VoteEvent {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  int voter = 0;
  std::optional<int> target;  // nullopt = abstain
};

struct VoteResultEvent {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  std::optional<int> expelled;  // nullopt = no expulsion (tie or abstention)
  std::vector<int> tally;       // votes received per agent index
  int abstentions = 0;
};

struct AbortEvent {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  std::string reason;
};

using Event = std::variant<ActionEvent, DeliveryEvent, FiringEvent, VoteEvent,
                           VoteResultEvent, AbortEvent>;

int event_day(const Event& e);
int event_turn(const Event& e);
std::uint64_t event_seq(const Event& e);

// Append-only record of one run; the single source of truth for measurement.
struct RunLog {
  RunConfig config;
  std::vector<Event> events;
  std::string schema_version = kSchemaVersion;

  bool analyzable() const;  // complete and not aborted
  int expected_actions() const {
    return config.days * config.turns_per_day * kAgentsPerRun;
  }

  std::string to_jsonl() const;
  static RunLog from_jsonl(const std::string& text);
  void save(const std::string& path) const;
  static RunLog load(const std::string& path);
};

enum class Topic { relationship, political_ethical, bodily_sexual, punitive, exit_vote };

struct TopicPhase {
  int day_from = 1;
  int day_to = 1;
  Topic label = Topic::relationship;
  LangText prompt;
};

// Phases partition days 1-7: 1-2, 3-4, 5, 6, 7. Out-of-range day throws.
const TopicPhase& topic_for_day(int day);

std::string to_string(Topic t);

// One agent's accumulated context: everything this viewer is allowed to see.
struct ViewItem {
  int day = 0;
  int turn = 0;
  std::uint64_t seq = 0;
  int speaker = 0;
  ActionKind kind = ActionKind::talk;
  std::optional<int> addressee;
  std::string text;
  bool marker = false;  // text was replaced by the censorship marker
};

struct TranscriptView {
  int viewer = 0;
  std::vector<ViewItem> items;
};

TranscriptView visible_context(const RunConfig& config,
                               const std::vector<Event>& events, int viewer);

// Mutable state of a run in progress; confined to its run.
struct RunState {
  const RunConfig* config = nullptr;
  std::vector<Event> events;
  int day = 1;
  int slot = 0;  // 0 .. 4*turns_per_day-1 within the day
  std::uint64_t next_seq = 0;
  bool complete = false;
};

// Round-robin with the starting offset rotated by day number.
int agent_for_slot(int day, int slot, int n_agents = kAgentsPerRun);
int schedule_next(const RunState& state);

struct VoteOutcome {
  std::optional<int> expelled;
  std::vector<int> tally;
  int abstentions = 0;
};

// Plurality target wins; ties and all-abstain yield no expulsion.
VoteOutcome tally_exit_vote(const std::vector<std::optional<int>>& votes,
                            int n_agents = kAgentsPerRun);

struct TurnMeta {
  int day = 0;
  int turn = 0;
  int agent_index = 0;
  Language language = Language::EN;
  const TopicPhase* phase = nullptr;
  std::uint64_t run_seed = 0;
  std::vector<std::string> names;
};

// Produces exactly one action per turn; errors propagate to the engine's
// retry policy.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual Action next_action(const TranscriptView& view, const TurnMeta& meta) = 0;
  virtual std::optional<int> cast_vote(const TranscriptView& view,
                                       const TurnMeta& meta) = 0;
};

using BackendArray = std::array<AgentBackend*, kAgentsPerRun>;

RunLog run_simulation(const RunConfig& config, const BackendArray& backends,
                      const measures::LexiconSet& lexicons,
                      const censorship::FilterRuleSet& rules);

}  // namespace wardlab::engine
