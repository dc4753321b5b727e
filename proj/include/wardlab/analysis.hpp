#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wardlab/engine.hpp"
#include "wardlab/measures.hpp"
#include "wardlab/types.hpp"

namespace wardlab::analysis {

// Maps foreign column names onto the expected metrics schema, with optional
// constant defaults for columns the source lacks entirely.
struct SchemaAdapter {
  std::map<std::string, std::string> column_map;  // expected -> source name
  std::map<std::string, std::string> defaults;    // expected -> literal value

  static SchemaAdapter load(const std::filesystem::path& path);  // JSON
};

// Validated metrics ingestion with column-level diagnostics. Throws DataError
// naming the first missing required column; malformed rows are reported with
// row numbers.
std::vector<measures::AgentMetrics> ingest_metrics(
    const std::filesystem::path& path,
    const std::optional<SchemaAdapter>& adapter = std::nullopt);

struct MeanSd {
  double mean = 0.0;
  std::optional<double> sd;  // present only when n >= 2
};

struct CellKey {
  Series series = Series::C;
  std::string group;  // model_id (Series C) or alignment level (Series R)
  Condition condition = Condition::C4;
  Language language = Language::EN;

  std::string label() const;
  auto operator<=>(const CellKey&) const = default;
};

struct CellSummary {
  CellKey key;
  int n_runs = 0;
  MeanSd cpi, di, monologue_ratio, sexual_count, protective_count;
};

// Per-cell means and sds over index rows, ordered by cell key.
std::vector<CellSummary> cell_means(const std::vector<measures::IndexRow>& rows);

enum class Quadrant { collective_excitation, internal_dissociation, dual_pattern, baseline };

std::string to_string(Quadrant q);

// Sign convention: CPI > 0 is the CPI+ half, DI > 0 the DI+ half; exact
// zeros fall to baseline.
Quadrant quadrant_of(double cpi, double di);

struct QuadrantPoint {
  CellKey key;
  double cpi = 0.0;
  double di = 0.0;
  Quadrant quadrant = Quadrant::baseline;
};

struct QuadrantMap {
  std::vector<QuadrantPoint> points;
  std::vector<std::string> warnings;  // cells omitted for missing values
  std::string svg;                    // deterministic byte-for-byte
};

// CPI x DI scatter of cell means with zero-lines and quadrant labels.
// Language is encoded by glyph, series by color class.
QuadrantMap quadrant_map(const std::vector<CellSummary>& cells);

void write_quadrant_csv(const std::filesystem::path& path,
                        const std::vector<QuadrantPoint>& points);

struct DissociationPair {
  std::string run_id;
  int agent_index = 0;
  std::uint64_t talk_seq = 0;
  std::uint64_t monologue_seq = 0;
  int compliance_score = 0;  // compliance-marker hits in the talk
  int conflict_score = 0;    // conflict-marker hits in the monologue
  bool is_pair = false;      // both scores >= 1
};

struct DissociationReport {
  std::vector<DissociationPair> pairs;  // one row per monologue with a prior same-day talk
  int n_monologues = 0;
  int n_pairs = 0;
  std::optional<double> rate;  // pairs / monologues; absent when no monologues
  bool flagged = false;        // no monologues in the log
};

// Pairs each monologue with the same agent's most recent prior talk within
// the same day, scoring the talk for compliance markers and the monologue for
// conflict markers.
DissociationReport detect_dissociation_pairs(const engine::RunLog& log,
                                             const measures::LexiconSet& lexicons);

void write_dissociation_csv(const std::filesystem::path& path,
                            const std::vector<DissociationPair>& pairs);

// kappa = (p_o - p_e) / (1 - p_e) over binary labels. When both raters are
// constant and identical (p_e = 1) the value is undefined; the convention
// kappa = 1 is returned and *flagged is set.
double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b,
                   bool* flagged = nullptr);

}  // namespace wardlab::analysis
