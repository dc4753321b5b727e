#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wardlab/engine.hpp"
#include "wardlab/types.hpp"

namespace wardlab::measures {

// Per-language keyword lists. Lists are authored independently per language,
// never machine-translated; files ship as documented placeholders.
struct LexiconSet {
  Language language = Language::EN;
  std::vector<std::string> sexual;
  std::vector<std::string> protective;
  std::vector<std::string> conflict_markers;
  std::vector<std::string> compliance_markers;

  // Loads {en,ja}_{sexual,protective,conflict,compliance}.txt from a directory.
  static LexiconSet load_dir(const std::filesystem::path& dir, Language lang);
  void validate() const;  // non-empty and duplicate-free after normalization
};

// EN: word-boundary-delimited, case-insensitive. JA: substring occurrences.
// Overlapping matches of one keyword count non-overlapping left-to-right;
// distinct keywords count independently. Input is assumed NFKC-normalized.
int match_keywords(std::string_view text,
                   const std::vector<std::string>& keywords, Language lang);

struct AgentMetrics {
  std::string run_id;
  Series series = Series::C;
  Condition condition = Condition::C4;
  Language language = Language::EN;
  std::optional<AlignmentLevel> alignment_level;
  int replication_index = 1;
  int agent_index = 0;
  std::string model_id;
  int total_actions = 0;
  int monologue_count = 0;
  double monologue_ratio = 0.0;  // monologue_count / total_actions, exactly
  int sexual_count = 0;
  int protective_count = 0;
  int api_filter_count = 0;
};

struct MeasureOptions {
  // measure what the agent generated, including blocked content
  bool pre_censorship = true;
  bool count_whispers = true;
};

// Four primary measures per agent; rejects partial (non-analyzable) logs.
std::array<AgentMetrics, engine::kAgentsPerRun> extract_metrics(
    const engine::RunLog& log, const LexiconSet& lexicons,
    MeasureOptions options = {});

// (x - mean) / sd with sample (n-1) sd. Throws DataError for n < 2 or zero
// variance.
std::vector<double> zscore(std::span<const double> values);

struct IndexRow {
  // identity
  std::string run_id;
  Series series = Series::C;
  Condition condition = Condition::C4;
  Language language = Language::EN;
  std::optional<AlignmentLevel> alignment_level;
  int replication_index = 1;
  int agent_index = 0;  // -1 for run-level rows
  std::string model_id;
  // raw measures (run-level rows carry within-run means)
  double monologue_ratio = 0.0;
  double sexual_count = 0.0;
  double protective_count = 0.0;
  // standardized
  double z_monologue = 0.0;
  double z_sexual = 0.0;
  double z_protective = 0.0;
  double cpi = 0.0;  // z_monologue + z_sexual - z_protective
  double di = 0.0;   // z_monologue + z_protective - z_sexual
  NormalizationScope scope = NormalizationScope::agent_level;
  std::string stratum;
};

struct IndexBuild {
  std::vector<IndexRow> rows;
  std::vector<std::string> warnings;  // one entry per excluded stratum
};

// Default strata: model x language for Series C, language x condition pooled
// across levels for Series R. Pass explicit fields to override.
std::vector<std::string> default_stratification(Series series);

// z computed within each stratum independently per measure. Degenerate strata
// (< 2 rows or zero variance on any measure) are excluded with a named
// warning. An empty strat_fields selects the per-series default.
IndexBuild build_index_table(const std::vector<AgentMetrics>& metrics,
                             NormalizationScope scope,
                             const std::vector<std::string>& strat_fields = {});

// CSV interchange (one row per agent per run; fixed header).
extern const char* kMetricsCsvHeader;
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<AgentMetrics>& rows);
void write_index_csv(const std::filesystem::path& path,
                     const std::vector<IndexRow>& rows,
                     NormalizationScope scope);
std::vector<IndexRow> read_index_csv(const std::filesystem::path& path);

}  // namespace wardlab::measures
