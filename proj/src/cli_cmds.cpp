#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "wardlab/agents.hpp"
#include "wardlab/analysis.hpp"
#include "wardlab/censorship.hpp"
#include "wardlab/cli.hpp"
#include "wardlab/csv.hpp"
#include "wardlab/measures.hpp"

namespace wardlab::cli {

namespace fs = std::filesystem;

namespace {

struct RunStatus {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string file;
  std::string status;  // complete | non_analyzable | failed | skipped
  std::string detail;
};

bool log_is_complete(const fs::path& file) {
  if (!fs::exists(file)) return false;
  try {
    return engine::RunLog::load(file.string()).analyzable();
  } catch (const std::exception&) {
    return false;
  }
}

measures::LexiconSet lexicons_for(const fs::path& dir, Language lang) {
  return measures::LexiconSet::load_dir(dir, lang);
}

}  // namespace

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = ExperimentSpec::load(opt.spec_path);
  fs::path out_dir = opt.output_dir.value_or(spec.output_dir);
  if (out_dir.empty()) {
    throw ConfigError("no output directory (set output_dir in the spec or pass --out)");
  }
  fs::create_directories(out_dir);

  std::vector<engine::RunConfig> runs = spec.expand();

  // shared per-language assets
  std::map<Language, measures::LexiconSet> lexicons;
  std::map<Language, censorship::FilterRuleSet> rules;
  for (const auto& rc : runs) {
    if (!lexicons.count(rc.language)) {
      if (spec.lexicon_dir.empty()) {
        throw ConfigError("experiment spec does not name a lexicon directory");
      }
      lexicons.emplace(rc.language, lexicons_for(spec.lexicon_dir, rc.language));
      rules.emplace(rc.language,
                    spec.filter_dir.empty()
                        ? censorship::FilterRuleSet{}
                        : censorship::FilterRuleSet::load_dir(spec.filter_dir,
                                                              rc.language));
    }
  }
  agents::PromptAssets assets = spec.prompt_dir.empty()
                                    ? agents::PromptAssets::builtin()
                                    : agents::PromptAssets::load_dir(spec.prompt_dir);

  std::vector<RunStatus> statuses(runs.size());
  std::atomic<size_t> cursor{0};
  std::mutex io_mutex;
  bool any_backend_failure = false;

  auto worker = [&] {
    for (;;) {
      size_t i = cursor.fetch_add(1);
      if (i >= runs.size()) return;
      const auto& rc = runs[i];
      RunStatus st;
      st.run_id = rc.run_id;
      st.seed = rc.seed;
      fs::path file = out_dir / (rc.run_id + ".jsonl");
      st.file = file.filename().string();
      if (opt.resume && log_is_complete(file)) {
        st.status = "skipped";
        statuses[i] = std::move(st);
        continue;
      }
      try {
        auto backends = agents::make_backends(rc, assets, lexicons.at(rc.language));
        engine::BackendArray arr{backends[0].get(), backends[1].get(),
                                 backends[2].get(), backends[3].get()};
        engine::RunLog log =
            engine::run_simulation(rc, arr, lexicons.at(rc.language),
                                   rules.at(rc.language));
        log.save(file.string());
        st.status = log.analyzable() ? "complete" : "non_analyzable";
      } catch (const BackendError& e) {
        st.status = "failed";
        st.detail = e.what();
        std::lock_guard lock(io_mutex);
        any_backend_failure = true;
        err << "run " << rc.run_id << " failed: " << e.what() << "\n";
      }
      statuses[i] = std::move(st);
    }
  };

  int jobs = std::max(1, opt.jobs);
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // cell completion summary: a cell is complete when every replication is
  // complete or was skipped as already complete
  std::map<std::string, bool> cell_complete;
  for (size_t i = 0; i < runs.size(); ++i) {
    std::string cell = runs[i].run_id.substr(0, runs[i].run_id.rfind("_r"));
    bool ok = statuses[i].status == "complete" || statuses[i].status == "skipped";
    auto [it, inserted] = cell_complete.try_emplace(cell, ok);
    if (!inserted) it->second = it->second && ok;
  }

  nlohmann::json manifest;
  manifest["spec"] = opt.spec_path.string();
  auto runs_json = nlohmann::json::array();
  for (const auto& st : statuses) {
    nlohmann::json r;
    r["run_id"] = st.run_id;
    r["seed"] = st.seed;
    r["file"] = st.file;
    r["status"] = st.status;
    if (!st.detail.empty()) r["detail"] = st.detail;
    runs_json.push_back(std::move(r));
  }
  manifest["runs"] = runs_json;
  auto cells_json = nlohmann::json::array();
  for (const auto& [cell, ok] : cell_complete) {
    cells_json.push_back({{"cell", cell}, {"complete", ok}});
  }
  manifest["cells"] = cells_json;
  {
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
  }

  size_t done = 0, skipped = 0;
  for (const auto& st : statuses) {
    if (st.status == "complete") ++done;
    if (st.status == "skipped") ++skipped;
  }
  out << "simulate: " << done << " run(s) executed, " << skipped
      << " skipped, " << (runs.size() - done - skipped) << " failed; manifest at "
      << (out_dir / "manifest.json").string() << "\n";
  if (any_backend_failure) return kExitBackend;
  return kExitOk;
}

int cmd_measure(const MeasureOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.metrics_csv.empty() && opt.runs_dir.empty()) {
    throw ConfigError("measure needs --runs (with --lexicons) or --metrics");
  }
  if (opt.metrics_csv.empty() && opt.lexicon_dir.empty()) {
    throw ConfigError("measure --runs requires --lexicons");
  }
  fs::create_directories(opt.out_dir);
  std::vector<measures::AgentMetrics> rows;
  std::vector<std::string> warnings;

  if (!opt.metrics_csv.empty()) {
    // external dataset path: ingest instead of extracting from logs
    std::optional<analysis::SchemaAdapter> adapter;
    if (!opt.adapter_path.empty()) {
      adapter = analysis::SchemaAdapter::load(opt.adapter_path);
    }
    rows = analysis::ingest_metrics(opt.metrics_csv, adapter);
    if (rows.empty()) throw DataError("no rows in " + opt.metrics_csv.string());
    std::map<std::string, int> per_cell;
    std::set<std::string> run_ids;
    for (const auto& m : rows) {
      per_cell[to_string(m.series) + "/" + to_string(m.condition) + "/" +
               to_string(m.language) +
               (m.alignment_level ? "/" + to_string(*m.alignment_level) : "")] += 1;
      run_ids.insert(m.run_id);
    }
    out << "measure: ingested " << rows.size() << " agent rows from "
        << run_ids.size() << " runs in " << per_cell.size() << " cells\n";
  } else {
    std::vector<fs::path> files;
    if (fs::exists(opt.runs_dir)) {
      for (const auto& entry : fs::directory_iterator(opt.runs_dir)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no runs in " + opt.runs_dir.string());

    std::map<Language, measures::LexiconSet> lexicons;
    for (const auto& file : files) {
      engine::RunLog log = engine::RunLog::load(file.string());
      if (!log.analyzable()) {
        warnings.push_back("skipped non-analyzable log: " + file.filename().string());
        continue;
      }
      if (!lexicons.count(log.config.language)) {
        lexicons.emplace(log.config.language,
                         lexicons_for(opt.lexicon_dir, log.config.language));
      }
      measures::MeasureOptions mo;
      mo.count_whispers = log.config.count_whispers;
      mo.pre_censorship = !opt.post_delivery;
      auto metrics =
          measures::extract_metrics(log, lexicons.at(log.config.language), mo);
      rows.insert(rows.end(), metrics.begin(), metrics.end());
    }
    if (rows.empty()) {
      throw DataError("no analyzable runs in " + opt.runs_dir.string());
    }
    out << "measure: " << rows.size() << " agent rows from "
        << rows.size() / engine::kAgentsPerRun << " runs\n";
  }

  measures::write_metrics_csv(opt.out_dir / "metrics.csv", rows);

  for (const auto& scope_name : opt.scopes) {
    NormalizationScope scope = scope_from_string(scope_name);
    auto build = measures::build_index_table(rows, scope, opt.strat_fields);
    std::string name = "index_" + wardlab::to_string(scope) + ".csv";
    measures::write_index_csv(opt.out_dir / name, build.rows, scope);
    out << "measure: wrote " << name << " (" << build.rows.size() << " rows)\n";
    for (const auto& w : build.warnings) warnings.push_back(w);
  }

  if (!warnings.empty()) {
    std::ofstream wf(opt.out_dir / "warnings.txt");
    for (const auto& w : warnings) {
      wf << w << "\n";
      err << "warning: " << w << "\n";
    }
  }
  return kExitOk;
}

int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  fs::create_directories(opt.out_dir);
  if (opt.kind == "quadrant") {
    if (opt.inputs.empty()) throw DataError("report quadrant: missing index csv input");
    auto rows = measures::read_index_csv(opt.inputs.front());
    auto cells = analysis::cell_means(rows);
    auto map = analysis::quadrant_map(cells);
    for (const auto& w : map.warnings) err << "warning: " << w << "\n";
    {
      std::ofstream svg(opt.out_dir / "quadrant.svg", std::ios::binary);
      svg << map.svg;
    }
    analysis::write_quadrant_csv(opt.out_dir / "quadrant_points.csv", map.points);
    out << "report: wrote quadrant.svg and quadrant_points.csv ("
        << map.points.size() << " cells)\n";
    return kExitOk;
  }
  if (opt.kind == "table1") {
    if (opt.inputs.empty()) throw DataError("report table1: missing index csv input");
    auto rows = measures::read_index_csv(opt.inputs.front());
    std::erase_if(rows, [](const measures::IndexRow& r) {
      return r.series != Series::R || !r.alignment_level;
    });
    if (rows.empty()) throw DataError("report table1: no Series R rows in input");
    auto cells = analysis::cell_means(rows);

    csv::Table t;
    t.header = {"alignment_level", "condition", "language", "n", "mean_di", "sd_di"};
    for (const auto& cell : cells) {
      t.rows.push_back({cell.key.group, wardlab::to_string(cell.key.condition),
                        wardlab::to_string(cell.key.language),
                        std::to_string(cell.n_runs), csv::fmt_double(cell.di.mean),
                        cell.di.sd ? csv::fmt_double(*cell.di.sd) : ""});
    }
    csv::write_file(opt.out_dir / "table1.csv", t);

    // grid layout: levels x condition-language columns
    std::ofstream grid(opt.out_dir / "table1.txt");
    grid << "Mean DI (+/- SD) by alignment level and condition-language\n\n";
    const char* levels[] = {"L-base", "L-default", "L-heavy"};
    struct Col { Condition c; Language l; const char* h; };
    const Col cols[] = {{Condition::C2, Language::JA, "JA C2"},
                        {Condition::C4, Language::JA, "JA C4"},
                        {Condition::C2, Language::EN, "EN C2"},
                        {Condition::C4, Language::EN, "EN C4"}};
    grid << "alignment";
    for (const auto& c : cols) grid << "\t" << c.h;
    grid << "\n";
    for (const char* level : levels) {
      grid << level;
      for (const auto& c : cols) {
        auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& cell) {
          return cell.key.group == level && cell.key.condition == c.c &&
                 cell.key.language == c.l;
        });
        if (it == cells.end()) {
          grid << "\t-";
        } else {
          grid << "\t" << csv::fmt_fixed(it->di.mean, 2);
          if (it->di.sd) grid << " +/- " << csv::fmt_fixed(*it->di.sd, 2);
        }
      }
      grid << "\n";
    }
    out << "report: wrote table1.csv and table1.txt\n";
    return kExitOk;
  }
  if (opt.kind == "dissociation") {
    if (opt.inputs.empty()) throw DataError("report dissociation: missing runs directory");
    if (opt.lexicon_dir.empty()) throw DataError("report dissociation: missing --lexicons");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opt.inputs.front())) {
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no runs in " + opt.inputs.front().string());

    std::map<Language, measures::LexiconSet> lexicons;
    std::vector<analysis::DissociationPair> all_pairs;
    int monologues = 0, pairs = 0;
    for (const auto& file : files) {
      engine::RunLog log = engine::RunLog::load(file.string());
      if (!log.analyzable()) {
        err << "warning: skipped non-analyzable log " << file.filename().string()
            << "\n";
        continue;
      }
      if (!lexicons.count(log.config.language)) {
        lexicons.emplace(log.config.language,
                         lexicons_for(opt.lexicon_dir, log.config.language));
      }
      auto report =
          analysis::detect_dissociation_pairs(log, lexicons.at(log.config.language));
      if (report.flagged) {
        err << "warning: no monologues in " << log.config.run_id
            << "; rate undefined\n";
      }
      monologues += report.n_monologues;
      pairs += report.n_pairs;
      all_pairs.insert(all_pairs.end(), report.pairs.begin(), report.pairs.end());
    }
    analysis::write_dissociation_csv(opt.out_dir / "dissociation.csv", all_pairs);
    out << "report: " << pairs << " dissociation pair(s) across " << monologues
        << " monologue(s)";
    if (monologues > 0) {
      out << " (rate " << csv::fmt_fixed(
                 static_cast<double>(pairs) / static_cast<double>(monologues), 4)
          << ")";
    }
    out << "\n";
    return kExitOk;
  }
  throw ConfigError("unknown report kind: " + opt.kind);
}

int cmd_kappa(const KappaOptions& opt, std::ostream& out, std::ostream&) {
  csv::Table t = csv::read_file(opt.labels_csv);
  if (t.header.size() < 2) {
    throw DataError("kappa labels csv needs two columns");
  }
  std::vector<int> a, b;
  auto parse_label = [](const std::string& s) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError("labels must be 0 or 1, got: " + s);
  };
  // header row may itself be data when numeric
  try {
    a.push_back(parse_label(t.header.at(0)));
    b.push_back(parse_label(t.header.at(1)));
  } catch (const DataError&) {
    a.clear();
    b.clear();
  }
  for (const auto& row : t.rows) {
    a.push_back(parse_label(row.at(0)));
    b.push_back(parse_label(row.at(1)));
  }
  bool flagged = false;
  double kappa = analysis::cohen_kappa(a, b, &flagged);
  out << "kappa=" << csv::fmt_double(kappa) << " n=" << a.size();
  if (flagged) out << " (both raters constant; undefined, reported as 1 by convention)";
  out << "\n";
  return kExitOk;
}

}  // namespace wardlab::cli
