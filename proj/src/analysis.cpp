#include "wardlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "wardlab/csv.hpp"

namespace wardlab::analysis {

SchemaAdapter SchemaAdapter::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema adapter: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema adapter parse error: " + std::string(e.what()));
  }
  SchemaAdapter adapter;
  if (j.contains("column_map")) {
    for (auto& [k, v] : j["column_map"].items()) {
      adapter.column_map[k] = v.get<std::string>();
    }
  }
  if (j.contains("defaults")) {
    for (auto& [k, v] : j["defaults"].items()) {
      adapter.defaults[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return adapter;
}

namespace {

// column access with adapter mapping and constant defaults
struct ColumnReader {
  const csv::Table* table;
  const SchemaAdapter* adapter;

  struct Source {
    int column = -1;
    std::string constant;
    bool has_constant = false;
    bool present = false;
  };

  Source resolve(const std::string& name) const {
    Source src;
    std::string source_name = name;
    if (adapter) {
      auto it = adapter->column_map.find(name);
      if (it != adapter->column_map.end()) source_name = it->second;
    }
    src.column = table->column(source_name);
    if (src.column >= 0) {
      src.present = true;
      return src;
    }
    if (adapter) {
      auto it = adapter->defaults.find(name);
      if (it != adapter->defaults.end()) {
        src.constant = it->second;
        src.has_constant = true;
        src.present = true;
      }
    }
    return src;
  }
};

std::string cell_of(const measures::AgentMetrics& m) {
  std::string cell = to_string(m.series) + "/" + to_string(m.condition) + "/" +
                     to_string(m.language);
  if (m.alignment_level) cell += "/" + to_string(*m.alignment_level);
  return cell;
}

int parse_replication_suffix(const std::string& run_id) {
  // accepts ..._r07 or ...r7 suffixes
  auto pos = run_id.find_last_of('r');
  if (pos == std::string::npos || pos + 1 >= run_id.size()) return 1;
  int value = 0;
  for (size_t i = pos + 1; i < run_id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(run_id[i]))) return 1;
    value = value * 10 + (run_id[i] - '0');
  }
  return value > 0 ? value : 1;
}

}  // namespace

std::vector<measures::AgentMetrics> ingest_metrics(
    const std::filesystem::path& path,
    const std::optional<SchemaAdapter>& adapter) {
  csv::Table table = csv::read_file(path);
  if (table.header.empty()) throw DataError("metrics csv has no header: " + path.string());

  ColumnReader reader{&table, adapter ? &*adapter : nullptr};

  const char* required[] = {"run_id",      "condition",       "language",
                            "agent_index", "model_id",        "monologue_ratio",
                            "sexual_count", "protective_count", "api_filter_count",
                            "total_actions"};
  std::map<std::string, ColumnReader::Source> sources;
  for (const char* name : required) {
    auto src = reader.resolve(name);
    if (!src.present) {
      throw DataError("metrics csv missing required column: " + std::string(name));
    }
    sources[name] = src;
  }
  for (const char* name : {"series", "alignment_level", "replication_index",
                           "monologue_count"}) {
    sources[name] = reader.resolve(name);
  }

  auto cell_value = [&](const std::vector<std::string>& row,
                        const std::string& name) -> std::string {
    const auto& src = sources.at(name);
    if (!src.present) return "";
    if (src.has_constant) return src.constant;
    return row.at(static_cast<size_t>(src.column));
  };

  std::vector<measures::AgentMetrics> out;
  std::vector<std::string> row_errors;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      measures::AgentMetrics m;
      m.run_id = cell_value(row, "run_id");
      if (m.run_id.empty()) throw DataError("empty run_id");
      m.condition = condition_from_string(cell_value(row, "condition"));
      m.language = language_from_string(cell_value(row, "language"));
      std::string level = cell_value(row, "alignment_level");
      if (!level.empty()) m.alignment_level = alignment_level_from_string(level);
      std::string series = cell_value(row, "series");
      m.series = !series.empty() ? series_from_string(series)
                                 : (m.alignment_level ? Series::R : Series::C);
      std::string rep = cell_value(row, "replication_index");
      m.replication_index = !rep.empty() ? std::stoi(rep)
                                         : parse_replication_suffix(m.run_id);
      m.agent_index = std::stoi(cell_value(row, "agent_index"));
      m.model_id = cell_value(row, "model_id");
      m.total_actions = static_cast<int>(std::llround(std::stod(cell_value(row, "total_actions"))));
      m.monologue_ratio = std::stod(cell_value(row, "monologue_ratio"));
      std::string mc = cell_value(row, "monologue_count");
      m.monologue_count = !mc.empty()
                              ? static_cast<int>(std::llround(std::stod(mc)))
                              : static_cast<int>(std::llround(m.monologue_ratio *
                                                              m.total_actions));
      m.sexual_count = static_cast<int>(std::llround(std::stod(cell_value(row, "sexual_count"))));
      m.protective_count =
          static_cast<int>(std::llround(std::stod(cell_value(row, "protective_count"))));
      m.api_filter_count =
          static_cast<int>(std::llround(std::stod(cell_value(row, "api_filter_count"))));
      out.push_back(std::move(m));
    } catch (const std::exception& e) {
      row_errors.push_back("row " + std::to_string(i + 2) + ": " + e.what());
    }
  }
  if (!row_errors.empty()) {
    std::string msg = "metrics csv has " + std::to_string(row_errors.size()) +
                      " malformed row(s):";
    for (size_t i = 0; i < row_errors.size() && i < 10; ++i) {
      msg += "\n  " + row_errors[i];
    }
    throw DataError(msg);
  }
  return out;
}

std::string CellKey::label() const {
  return to_string(series) + "/" + group + "/" + to_string(condition) + "/" +
         to_string(language);
}

namespace {

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd out;
  long double sum = 0.0L;
  for (double v : values) sum += v;
  out.mean = static_cast<double>(sum / static_cast<long double>(values.size()));
  if (values.size() >= 2) {
    long double ss = 0.0L;
    for (double v : values) {
      long double d = v - out.mean;
      ss += d * d;
    }
    out.sd = std::sqrt(static_cast<double>(ss / static_cast<long double>(values.size() - 1)));
  }
  return out;
}

}  // namespace

std::vector<CellSummary> cell_means(const std::vector<measures::IndexRow>& rows) {
  struct Bucket {
    std::vector<double> cpi, di, mono, sexual, protective;
    std::vector<std::string> run_ids;
  };
  std::map<CellKey, Bucket> buckets;
  for (const auto& r : rows) {
    CellKey key;
    key.series = r.series;
    key.group = r.series == Series::R && r.alignment_level
                    ? to_string(*r.alignment_level)
                    : r.model_id;
    key.condition = r.condition;
    key.language = r.language;
    auto& b = buckets[key];
    b.cpi.push_back(r.cpi);
    b.di.push_back(r.di);
    b.mono.push_back(r.monologue_ratio);
    b.sexual.push_back(r.sexual_count);
    b.protective.push_back(r.protective_count);
    b.run_ids.push_back(r.run_id);
  }
  std::vector<CellSummary> out;
  for (auto& [key, b] : buckets) {
    CellSummary cell;
    cell.key = key;
    std::sort(b.run_ids.begin(), b.run_ids.end());
    cell.n_runs = static_cast<int>(
        std::unique(b.run_ids.begin(), b.run_ids.end()) - b.run_ids.begin());
    cell.cpi = mean_sd(b.cpi);
    cell.di = mean_sd(b.di);
    cell.monologue_ratio = mean_sd(b.mono);
    cell.sexual_count = mean_sd(b.sexual);
    cell.protective_count = mean_sd(b.protective);
    out.push_back(std::move(cell));
  }
  return out;  // std::map iteration keeps deterministic key order
}

std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::collective_excitation: return "collective_excitation";
    case Quadrant::internal_dissociation: return "internal_dissociation";
    case Quadrant::dual_pattern: return "dual_pattern";
    case Quadrant::baseline: return "baseline";
  }
  return "?";
}

Quadrant quadrant_of(double cpi, double di) {
  // exact zeros fall to the negative half, so (0, 0) is baseline
  bool cpi_pos = cpi > 0.0;
  bool di_pos = di > 0.0;
  if (cpi_pos && di_pos) return Quadrant::dual_pattern;
  if (cpi_pos) return Quadrant::collective_excitation;
  if (di_pos) return Quadrant::internal_dissociation;
  return Quadrant::baseline;
}

DissociationReport detect_dissociation_pairs(const engine::RunLog& log,
                                             const measures::LexiconSet& lexicons) {
  DissociationReport report;
  struct LastTalk {
    int day = -1;
    std::uint64_t seq = 0;
    const std::string* text = nullptr;
  };
  std::array<LastTalk, engine::kAgentsPerRun> last_talk;

  for (const auto& ev : log.events) {
    const auto* ae = std::get_if<engine::ActionEvent>(&ev);
    if (!ae) continue;
    const auto& act = ae->action;
    auto& last = last_talk[static_cast<size_t>(act.speaker)];
    if (act.kind == ActionKind::talk) {
      last = {ae->day, ae->seq, &act.text};
      continue;
    }
    if (act.kind != ActionKind::monologue) continue;
    report.n_monologues += 1;
    if (last.day != ae->day || last.text == nullptr) continue;
    DissociationPair pair;
    pair.run_id = log.config.run_id;
    pair.agent_index = act.speaker;
    pair.talk_seq = last.seq;
    pair.monologue_seq = ae->seq;
    pair.compliance_score = measures::match_keywords(
        *last.text, lexicons.compliance_markers, lexicons.language);
    pair.conflict_score = measures::match_keywords(
        act.text, lexicons.conflict_markers, lexicons.language);
    pair.is_pair = pair.compliance_score >= 1 && pair.conflict_score >= 1;
    if (pair.is_pair) report.n_pairs += 1;
    report.pairs.push_back(std::move(pair));
  }

  if (report.n_monologues == 0) {
    report.flagged = true;
  } else {
    report.rate = static_cast<double>(report.n_pairs) /
                  static_cast<double>(report.n_monologues);
  }
  return report;
}

void write_dissociation_csv(const std::filesystem::path& path,
                            const std::vector<DissociationPair>& pairs) {
  csv::Table t;
  t.header = {"run_id", "agent_index", "talk_seq", "monologue_seq",
              "compliance_score", "conflict_score", "is_pair"};
  for (const auto& p : pairs) {
    t.rows.push_back({p.run_id, std::to_string(p.agent_index),
                      std::to_string(p.talk_seq), std::to_string(p.monologue_seq),
                      std::to_string(p.compliance_score),
                      std::to_string(p.conflict_score), p.is_pair ? "1" : "0"});
  }
  csv::write_file(path, t);
}

double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b,
                   bool* flagged) {
  if (flagged) *flagged = false;
  if (labels_a.size() != labels_b.size()) {
    throw DataError("cohen_kappa: unequal label lengths");
  }
  if (labels_a.empty()) throw DataError("cohen_kappa: empty labels");
  for (size_t i = 0; i < labels_a.size(); ++i) {
    if ((labels_a[i] != 0 && labels_a[i] != 1) ||
        (labels_b[i] != 0 && labels_b[i] != 1)) {
      throw DataError("cohen_kappa: labels must be binary 0/1");
    }
  }
  double n = static_cast<double>(labels_a.size());
  double agree = 0, a1 = 0, b1 = 0;
  for (size_t i = 0; i < labels_a.size(); ++i) {
    if (labels_a[i] == labels_b[i]) ++agree;
    a1 += labels_a[i];
    b1 += labels_b[i];
  }
  double po = agree / n;
  double pa1 = a1 / n, pb1 = b1 / n;
  double pe = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1);
  if (pe >= 1.0) {
    // both raters constant and identical: undefined, conventionally 1
    if (flagged) *flagged = true;
    return 1.0;
  }
  return (po - pe) / (1.0 - pe);
}

}  // namespace wardlab::analysis
