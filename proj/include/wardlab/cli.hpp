#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wardlab/engine.hpp"
#include "wardlab/types.hpp"

namespace wardlab::cli {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 backend/network error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;

struct CellSpec {
  std::string label;  // derived when empty
  Condition condition = Condition::C4;
  Language language = Language::EN;
  std::optional<AlignmentLevel> alignment_level;
  std::optional<int> censored_agent;
  int replications = 1;
  std::vector<AgentSpec> agents;
};

// Declarative experiment grid; one cell expands to N runs with seeds derived
// as base_seed + replication_index.
struct ExperimentSpec {
  Series series = Series::C;
  std::uint64_t base_seed = 0;
  std::filesystem::path output_dir;
  int days = 7;
  int turns_per_day = 6;
  std::filesystem::path lexicon_dir;
  std::filesystem::path prompt_dir;   // empty = builtin placeholder assets
  std::filesystem::path filter_dir;   // empty = no api rules
  // engine knobs carried into every run config
  int max_context_events = 0;
  bool c2_speaker_retains_blocked = true;
  bool filter_whispers = true;
  bool count_whispers = true;
  std::string marker_text = "[CENSORED]";
  std::vector<CellSpec> cells;

  static ExperimentSpec load(const std::filesystem::path& path);
  // Design asymmetries: no api-filtered C3 cells, C4 rosters single-model.
  void validate() const;
  std::vector<engine::RunConfig> expand() const;
};

struct SimulateOptions {
  std::filesystem::path spec_path;
  std::optional<std::filesystem::path> output_dir;  // overrides the spec
  int jobs = 1;
  bool resume = false;
};

struct MeasureOptions {
  // either a directory of run logs (with lexicons) ...
  std::filesystem::path runs_dir;
  std::filesystem::path lexicon_dir;
  // ... or an already-extracted metrics CSV (external datasets)
  std::filesystem::path metrics_csv;
  std::filesystem::path adapter_path;  // optional schema adapter JSON
  std::vector<std::string> scopes;     // "agent", "run", or both
  std::filesystem::path out_dir;
  std::vector<std::string> strat_fields;  // empty = per-series default
  bool post_delivery = false;  // measure delivered text instead of produced
};

struct AnalyzeOptions {
  std::filesystem::path index_csv;
  std::filesystem::path plan_path;
  std::filesystem::path out_dir;
};

struct ReportOptions {
  std::string kind;  // quadrant | table1 | dissociation
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
  std::filesystem::path lexicon_dir;  // dissociation only
};

struct KappaOptions {
  std::filesystem::path labels_csv;  // two columns: rater a, rater b
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_measure(const MeasureOptions& opt, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err);
int cmd_kappa(const KappaOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace wardlab::cli
