#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wardlab/engine.hpp"
#include "wardlab/measures.hpp"
#include "wardlab/types.hpp"

namespace wardlab::agents {

// Prompt-level alignment components. L-base adds nothing; L-default adds the
// safety prompt; L-heavy adds the safety prompt, all six principles, and the
// self-monitoring protocol, cumulatively.
struct AlignmentPromptKit {
  LangText default_safety;
  std::vector<LangText> constitutional_principles;
  LangText self_monitoring_protocol;

  // Loads prompts/{en,ja}/{safety,principles,protocol}.txt; principles.txt
  // holds one principle per non-empty line.
  static AlignmentPromptKit load_dir(const std::filesystem::path& dir);
  static AlignmentPromptKit builtin();  // placeholder texts
};

// Fixed concatenation order: persona, safety prompt, principles, protocol,
// condition notice. Throws ConfigError when the kit lacks text required by
// the level for the language.
std::string assemble_system_prompt(const AlignmentPromptKit& kit,
                                   std::optional<AlignmentLevel> level,
                                   Language language, const std::string& persona,
                                   const std::optional<std::string>& condition_notice);

// Output grammar: "TALK: ...", "WHISPER(name): ...", "MONOLOGUE: ...".
struct ParsedAction {
  ActionKind kind = ActionKind::talk;
  std::string addressee_name;  // whisper only
  std::string text;
};

std::optional<ParsedAction> parse_action(std::string_view raw);
std::string render_action(const engine::Action& action,
                          const std::vector<std::string>& names);
// "VOTE(name)" or "VOTE(abstain)"; anything else is a failed parse.
std::optional<std::optional<int>> parse_vote(std::string_view raw,
                                             const std::vector<std::string>& names);

// Deterministic oracle agent. Action kind, whisper target, template choice
// and keyword emissions are all drawn from streams keyed on
// (run seed, agent, day, turn), so the schedule is reproducible and
// condition-independent. Talks address the most recent visible public
// speaker by name ("@name, ..."); an own talk counts as unanswered until a
// later public talk from someone else addresses this agent, which is what
// makes invisible blocking feed the escalation term.
engine::Action scripted_policy(const ScriptedProfile& profile,
                               std::uint64_t run_seed,
                               const engine::TranscriptView& view,
                               const engine::TurnMeta& meta,
                               const measures::LexiconSet& lexicons);

class ScriptedBackend final : public engine::AgentBackend {
 public:
  ScriptedBackend(ScriptedProfile profile, measures::LexiconSet lexicons)
      : profile_(std::move(profile)), lexicons_(std::move(lexicons)) {}

  engine::Action next_action(const engine::TranscriptView& view,
                             const engine::TurnMeta& meta) override;
  std::optional<int> cast_vote(const engine::TranscriptView& view,
                               const engine::TurnMeta& meta) override;

 private:
  ScriptedProfile profile_;
  measures::LexiconSet lexicons_;
};

// Minimal HTTP seam so the client logic is testable without sockets.
struct HttpRequest {
  std::string url;
  std::string path;
  std::string body;  // JSON
  std::string auth_bearer;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;  // transport failure when non-empty
};

using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

// Default transport backed by cpp-httplib.
HttpTransport default_transport();

// Chat-completion client. Builds the usual message list (system prompt, then
// the visible transcript as alternating user/assistant history), sends the
// request with the endpoint's retry budget, and parses the reply through
// parse_action with up to two reprompts before falling back to a raw talk.
class RemoteBackend final : public engine::AgentBackend {
 public:
  RemoteBackend(std::string model_id, RemoteEndpoint endpoint,
                std::string system_prompt, HttpTransport transport = {});

  engine::Action next_action(const engine::TranscriptView& view,
                             const engine::TurnMeta& meta) override;
  std::optional<int> cast_vote(const engine::TranscriptView& view,
                               const engine::TurnMeta& meta) override;

  // exposed for tests
  std::vector<std::pair<std::string, std::string>> build_messages(
      const engine::TranscriptView& view, const engine::TurnMeta& meta,
      const std::string& instruction) const;

 private:
  std::string complete(const std::vector<std::pair<std::string, std::string>>& messages);

  std::string model_id_;
  RemoteEndpoint endpoint_;
  std::string system_prompt_;
  HttpTransport transport_;
};

// Condition notices: C1 is disclosed to every agent; C3 privately instructs
// only the designated agent.
std::optional<std::string> condition_notice(const engine::RunConfig& config,
                                            int agent_index,
                                            const AlignmentPromptKit& kit,
                                            const LangText& c1_notice,
                                            const LangText& c3_notice);

struct PromptAssets {
  AlignmentPromptKit kit;
  LangText facility;
  LangText c1_notice;
  LangText c3_notice;

  static PromptAssets load_dir(const std::filesystem::path& dir);
  static PromptAssets builtin();
};

// Builds one backend per agent spec, assembling remote system prompts from
// the assets. Honors NO_NETWORK=1 by refusing remote backends.
std::vector<std::unique_ptr<engine::AgentBackend>> make_backends(
    const engine::RunConfig& config, const PromptAssets& assets,
    const measures::LexiconSet& lexicons, HttpTransport transport = {});

}  // namespace wardlab::agents
