#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "json.hpp"
#include "wardlab/cli.hpp"
#include "wardlab/csv.hpp"
#include "wardlab/lmm.hpp"
#include "wardlab/measures.hpp"
#include "wardlab/rng.hpp"
#include "wardlab/stats.hpp"

namespace wardlab::cli {

namespace {

using measures::IndexRow;
using nlohmann::json;

struct Selector {
  std::optional<Series> series;
  std::optional<std::string> model;
  std::optional<Condition> condition;
  std::optional<Language> language;
  std::optional<AlignmentLevel> alignment_level;

  static Selector parse(const json& j) {
    Selector s;
    if (j.contains("series")) s.series = series_from_string(j["series"].get<std::string>());
    if (j.contains("model")) s.model = j["model"].get<std::string>();
    if (j.contains("condition")) {
      s.condition = condition_from_string(j["condition"].get<std::string>());
    }
    if (j.contains("language")) {
      s.language = language_from_string(j["language"].get<std::string>());
    }
    if (j.contains("alignment_level")) {
      s.alignment_level =
          alignment_level_from_string(j["alignment_level"].get<std::string>());
    }
    return s;
  }

  bool matches(const IndexRow& r) const {
    if (series && r.series != *series) return false;
    if (model && r.model_id != *model) return false;
    if (condition && r.condition != *condition) return false;
    if (language && r.language != *language) return false;
    if (alignment_level &&
        (!r.alignment_level || *r.alignment_level != *alignment_level)) {
      return false;
    }
    return true;
  }

  std::string describe() const {
    std::string s;
    auto add = [&](const std::string& part) {
      if (!s.empty()) s += ",";
      s += part;
    };
    if (series) add("series=" + to_string(*series));
    if (model) add("model=" + *model);
    if (condition) add("condition=" + to_string(*condition));
    if (language) add("language=" + to_string(*language));
    if (alignment_level) add("alignment_level=" + to_string(*alignment_level));
    return s.empty() ? "(all rows)" : s;
  }
};

double measure_value(const IndexRow& r, const std::string& measure) {
  if (measure == "cpi") return r.cpi;
  if (measure == "di") return r.di;
  if (measure == "z_monologue") return r.z_monologue;
  if (measure == "z_sexual") return r.z_sexual;
  if (measure == "z_protective") return r.z_protective;
  if (measure == "monologue_ratio") return r.monologue_ratio;
  if (measure == "sexual_count") return r.sexual_count;
  if (measure == "protective_count") return r.protective_count;
  throw ConfigError("unknown measure: " + measure);
}

std::vector<double> select_values(const std::vector<IndexRow>& rows,
                                  const Selector& sel, const std::string& measure,
                                  const std::string& test_name) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (sel.matches(r)) out.push_back(measure_value(r, measure));
  }
  if (out.empty()) {
    throw DataError("test " + test_name + ": no rows match cell [" +
                    sel.describe() + "]");
  }
  return out;
}

// replication-collapsed values for paired tests: within the cell, rows
// sharing a replication index average to one observation
std::map<int, double> by_replication(const std::vector<IndexRow>& rows,
                                     const Selector& sel,
                                     const std::string& measure,
                                     const std::string& test_name) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    if (!sel.matches(r)) continue;
    auto& [sum, count] = acc[r.replication_index];
    sum += measure_value(r, measure);
    count += 1;
  }
  if (acc.empty()) {
    throw DataError("test " + test_name + ": no rows match cell [" +
                    sel.describe() + "]");
  }
  std::map<int, double> out;
  for (const auto& [rep, sc] : acc) out[rep] = sc.first / sc.second;
  return out;
}

std::string field_of(const IndexRow& r, const std::string& field) {
  if (field == "series") return to_string(r.series);
  if (field == "model") return r.model_id;
  if (field == "condition") return to_string(r.condition);
  if (field == "language") return to_string(r.language);
  if (field == "alignment_level") {
    return r.alignment_level ? to_string(*r.alignment_level) : "";
  }
  if (field == "run_id") return r.run_id;
  if (field == "stratum") return r.stratum;
  throw ConfigError("unknown field: " + field);
}

// canonical level order for treatment coding; reference is the first level
// present in the data
std::vector<std::string> canonical_levels(const std::vector<IndexRow>& rows,
                                          const std::string& field) {
  std::vector<std::string> canon;
  if (field == "alignment_level") canon = {"L-base", "L-default", "L-heavy"};
  else if (field == "condition") canon = {"C1", "C2", "C3", "C4"};
  else if (field == "language") canon = {"JA", "EN"};
  std::set<std::string> present;
  for (const auto& r : rows) present.insert(field_of(r, field));
  std::vector<std::string> out;
  for (const auto& level : canon) {
    if (present.count(level)) out.push_back(level);
  }
  for (const auto& level : present) {
    if (std::find(out.begin(), out.end(), level) == out.end()) out.push_back(level);
  }
  return out;
}

struct ResultRow {
  std::string family;
  std::string name;
  std::string type;
  std::string measure;
  stats::TestResult result;
  bool has_p = true;
  bool in_holm_family = false;
};

void run_lmm_task(const json& tj, const std::vector<IndexRow>& all_rows,
                  const std::string& family, bool holm_family,
                  std::vector<ResultRow>& results) {
  std::string name = tj.at("name").get<std::string>();
  std::string outcome_name = tj.value("outcome", "di");
  std::vector<IndexRow> rows;
  if (tj.contains("filter")) {
    Selector filter = Selector::parse(tj["filter"]);
    for (const auto& r : all_rows) {
      if (filter.matches(r)) rows.push_back(r);
    }
  } else {
    rows = all_rows;
  }
  if (rows.empty()) throw DataError("test " + name + ": filter matches no rows");

  std::vector<double> outcome;
  for (const auto& r : rows) outcome.push_back(measure_value(r, outcome_name));

  std::vector<stats::LmmColumn> design;
  design.push_back({"(intercept)", std::vector<double>(rows.size(), 1.0)});

  // main effects: treatment dummies against the canonical reference
  std::map<std::string, std::vector<std::string>> factor_levels;
  for (const auto& fj : tj.at("fixed")) {
    std::string field = fj.get<std::string>();
    auto levels = canonical_levels(rows, field);
    if (levels.size() < 2) continue;  // constant factor adds nothing
    factor_levels[field] = levels;
    for (size_t li = 1; li < levels.size(); ++li) {
      stats::LmmColumn col;
      col.name = field + "=" + levels[li];
      col.values.reserve(rows.size());
      for (const auto& r : rows) {
        col.values.push_back(field_of(r, field) == levels[li] ? 1.0 : 0.0);
      }
      design.push_back(std::move(col));
    }
  }

  if (tj.contains("interactions")) {
    for (const auto& ij : tj["interactions"]) {
      std::vector<std::string> fields = ij.get<std::vector<std::string>>();
      if (fields.size() != 2) {
        throw ConfigError("test " + name + ": interactions must pair two factors");
      }
      auto it_a = factor_levels.find(fields[0]);
      auto it_b = factor_levels.find(fields[1]);
      if (it_a == factor_levels.end() || it_b == factor_levels.end()) {
        throw ConfigError("test " + name +
                          ": interaction references a factor not in fixed");
      }
      for (size_t la = 1; la < it_a->second.size(); ++la) {
        for (size_t lb = 1; lb < it_b->second.size(); ++lb) {
          stats::LmmColumn col;
          col.name = fields[0] + "=" + it_a->second[la] + ":" + fields[1] + "=" +
                     it_b->second[lb];
          col.values.reserve(rows.size());
          for (const auto& r : rows) {
            bool on = field_of(r, fields[0]) == it_a->second[la] &&
                      field_of(r, fields[1]) == it_b->second[lb];
            col.values.push_back(on ? 1.0 : 0.0);
          }
          design.push_back(std::move(col));
        }
      }
    }
  }

  std::string group_field = tj.value("group_by", "run_id");
  std::map<std::string, int> group_map;
  std::vector<int> groups;
  for (const auto& r : rows) {
    auto [it, inserted] =
        group_map.try_emplace(field_of(r, group_field),
                              static_cast<int>(group_map.size()));
    groups.push_back(it->second);
  }

  stats::LmmFit fit = stats::lmm_random_intercept(outcome, design, groups);
  for (size_t j = 0; j < fit.coefficients.size(); ++j) {
    ResultRow row;
    row.family = family;
    row.name = name + ":" + fit.coefficients[j].test_name;
    row.type = "lmm";
    row.measure = outcome_name;
    row.result = fit.coefficients[j];
    row.result.test_name = row.name;
    row.result.note = "se=" + csv::fmt_double(fit.se[j]) +
                      " sigma2=" + csv::fmt_double(fit.sigma2) +
                      " tau2=" + csv::fmt_double(fit.tau2) +
                      (fit.boundary ? " boundary" : "");
    row.in_holm_family = holm_family;
    results.push_back(std::move(row));
  }
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
  auto rows = measures::read_index_csv(opt.index_csv);

  std::ifstream in(opt.plan_path);
  if (!in) throw ConfigError("cannot open test plan: " + opt.plan_path.string());
  json plan;
  try {
    in >> plan;
  } catch (const json::exception& e) {
    throw ConfigError("test plan parse error: " + std::string(e.what()));
  }

  std::uint64_t plan_seed = plan.value("seed", 20260401ULL);
  int default_boot = plan.value("n_boot", 2000);
  int default_iter = plan.value("n_iter", 10000);

  std::vector<ResultRow> results;
  size_t test_counter = 0;

  for (const auto& fj : plan.value("families", json::array())) {
    std::string family = fj.value("name", "default");
    bool holm = fj.value("holm", false);
    for (const auto& tj : fj.value("tests", json::array())) {
      std::string type = tj.at("type").get<std::string>();
      std::string name = tj.at("name").get<std::string>();
      std::uint64_t test_seed = rng::key(plan_seed, test_counter++);

      if (type == "lmm") {
        run_lmm_task(tj, rows, family, holm, results);
        continue;
      }

      ResultRow row;
      row.family = family;
      row.name = name;
      row.type = type;
      row.measure = tj.value("measure", "cpi");
      row.in_holm_family = holm;

      if (type == "wilcoxon") {
        Selector a = Selector::parse(tj.at("a"));
        Selector b = Selector::parse(tj.at("b"));
        auto reps_a = by_replication(rows, a, row.measure, name);
        auto reps_b = by_replication(rows, b, row.measure, name);
        std::vector<double> va, vb;
        for (const auto& [rep, value] : reps_a) {
          auto it = reps_b.find(rep);
          if (it != reps_b.end()) {
            va.push_back(value);
            vb.push_back(it->second);
          }
        }
        if (va.empty()) {
          throw DataError("test " + name + ": no shared replication indices");
        }
        row.result = stats::wilcoxon_signed_rank(va, vb);
        if (tj.contains("effect")) {
          auto raw_a = select_values(rows, a, row.measure, name);
          auto raw_b = select_values(rows, b, row.measure, name);
          auto estimator = tj["effect"].get<std::string>() == "hedges_g"
                               ? stats::Estimator::hedges_g
                               : stats::Estimator::cohens_d;
          row.result.effect = stats::bootstrap_ci(raw_a, raw_b, estimator,
                                                  default_boot, 0.95, test_seed);
        }
      } else if (type == "kruskal_wallis") {
        std::vector<std::vector<double>> groups;
        if (tj.contains("groups")) {
          for (const auto& gj : tj.at("groups")) {
            groups.push_back(
                select_values(rows, Selector::parse(gj), row.measure, name));
          }
        } else {
          // split a filtered subset by the distinct values of one field
          std::string field = tj.at("group_by").get<std::string>();
          Selector filter = tj.contains("filter") ? Selector::parse(tj["filter"])
                                                  : Selector{};
          std::vector<IndexRow> subset;
          for (const auto& r : rows) {
            if (filter.matches(r)) subset.push_back(r);
          }
          if (subset.empty()) {
            throw DataError("test " + name + ": no rows match cell [" +
                            filter.describe() + "]");
          }
          for (const auto& level : canonical_levels(subset, field)) {
            std::vector<double> g;
            for (const auto& r : subset) {
              if (field_of(r, field) == level) {
                g.push_back(measure_value(r, row.measure));
              }
            }
            groups.push_back(std::move(g));
          }
          if (groups.size() < 2) {
            throw DataError("test " + name + ": group_by " + field +
                            " yields fewer than 2 groups");
          }
        }
        row.result = stats::kruskal_wallis(groups);
      } else if (type == "permutation") {
        auto a = select_values(rows, Selector::parse(tj.at("a")), row.measure, name);
        auto b = select_values(rows, Selector::parse(tj.at("b")), row.measure, name);
        row.result = stats::permutation_test(a, b, stats::PermStatistic::mean_diff,
                                             tj.value("n_iter", default_iter),
                                             test_seed);
      } else if (type == "effect_size") {
        auto a = select_values(rows, Selector::parse(tj.at("a")), row.measure, name);
        auto b = select_values(rows, Selector::parse(tj.at("b")), row.measure, name);
        auto estimator = tj.value("estimator", "hedges_g") == "cohens_d"
                             ? stats::Estimator::cohens_d
                             : stats::Estimator::hedges_g;
        auto effect = stats::bootstrap_ci(a, b, estimator,
                                          tj.value("n_boot", default_boot),
                                          tj.value("level", 0.95), test_seed);
        row.result.test_name = name;
        row.result.statistic = effect.value;
        row.result.p_value = std::numeric_limits<double>::quiet_NaN();
        row.result.effect = effect;
        row.result.seed = test_seed;
        row.result.n_per_group = {static_cast<int>(a.size()),
                                  static_cast<int>(b.size())};
        row.has_p = false;
      } else if (type == "sign_direction") {
        Selector greater = Selector::parse(tj.at("greater"));
        Selector lesser = Selector::parse(tj.at("lesser"));
        std::vector<std::string> per = tj.value("per", std::vector<std::string>{});
        // enumerate the distinct per-field tuples present under either side
        std::set<std::vector<std::string>> combos;
        for (const auto& r : rows) {
          if (!greater.matches(r) && !lesser.matches(r)) continue;
          std::vector<std::string> combo;
          for (const auto& f : per) combo.push_back(field_of(r, f));
          combos.insert(std::move(combo));
        }
        if (combos.empty()) {
          throw DataError("test " + name + ": no rows match either cell");
        }
        int successes = 0, trials = 0;
        std::string directions;
        for (const auto& combo : combos) {
          auto match_combo = [&](const IndexRow& r) {
            for (size_t i = 0; i < per.size(); ++i) {
              if (field_of(r, per[i]) != combo[i]) return false;
            }
            return true;
          };
          std::vector<double> vg, vl;
          for (const auto& r : rows) {
            if (!match_combo(r)) continue;
            if (greater.matches(r)) vg.push_back(measure_value(r, row.measure));
            if (lesser.matches(r)) vl.push_back(measure_value(r, row.measure));
          }
          std::string combo_label;
          for (const auto& c : combo) combo_label += (combo_label.empty() ? "" : "/") + c;
          if (vg.empty() || vl.empty()) {
            throw DataError("test " + name + ": absent cell for combo " + combo_label);
          }
          double mg = 0, ml = 0;
          for (double v : vg) mg += v;
          for (double v : vl) ml += v;
          mg /= static_cast<double>(vg.size());
          ml /= static_cast<double>(vl.size());
          ++trials;
          bool success = mg > ml;
          if (success) ++successes;
          directions += (directions.empty() ? "" : ";") + combo_label +
                        (success ? "+" : "-");
        }
        row.result = stats::binomial_sign_test(successes, trials);
        row.result.note = directions;
      } else {
        throw ConfigError("unknown test type in plan: " + type);
      }
      row.result.test_name = name;
      results.push_back(std::move(row));
    }
  }

  // Holm within declared families
  std::set<std::string> holm_families;
  for (const auto& r : results) {
    if (r.in_holm_family && r.has_p) holm_families.insert(r.family);
  }
  for (const auto& family : holm_families) {
    std::vector<size_t> member_idx;
    std::vector<double> ps;
    for (size_t i = 0; i < results.size(); ++i) {
      if (results[i].family == family && results[i].in_holm_family &&
          results[i].has_p) {
        member_idx.push_back(i);
        ps.push_back(results[i].result.p_value);
      }
    }
    auto adjusted = stats::holm_adjust(ps);
    for (size_t k = 0; k < member_idx.size(); ++k) {
      results[member_idx[k]].result.adjusted_p = adjusted[k];
    }
  }

  std::filesystem::create_directories(opt.out_dir);
  csv::Table t;
  t.header = {"family", "name", "type", "measure", "statistic", "p_value",
              "p_method", "adjusted_p", "n_per_group", "effect_kind", "effect",
              "ci_low", "ci_high", "n_boot", "seed", "flagged", "note"};
  for (const auto& r : results) {
    std::string n_groups;
    for (int n : r.result.n_per_group) {
      n_groups += (n_groups.empty() ? "" : "|") + std::to_string(n);
    }
    const auto& e = r.result.effect;
    t.rows.push_back({
        r.family,
        r.name,
        r.type,
        r.measure,
        csv::fmt_double(r.result.statistic),
        r.has_p ? csv::fmt_double(r.result.p_value) : "",
        r.has_p ? stats::to_string(r.result.p_method) : "",
        r.result.adjusted_p ? csv::fmt_double(*r.result.adjusted_p) : "",
        n_groups,
        e ? (e->kind == stats::EffectKind::cohens_d ? "cohens_d" : "hedges_g") : "",
        e ? csv::fmt_double(e->value) : "",
        e ? csv::fmt_double(e->ci_low) : "",
        e ? csv::fmt_double(e->ci_high) : "",
        e ? std::to_string(e->n_boot) : "",
        r.result.seed ? std::to_string(*r.result.seed) : "",
        r.result.flagged || (e && e->flagged) ? "1" : "0",
        r.result.note,
    });
  }
  csv::write_file(opt.out_dir / "results.csv", t);

  std::ofstream report(opt.out_dir / "report.txt");
  for (const auto& r : results) {
    report << "[" << r.family << "] " << r.name << " (" << r.type << ", "
           << r.measure << "): statistic=" << csv::fmt_fixed(r.result.statistic, 4);
    if (r.has_p) {
      report << " p=" << csv::fmt_double(r.result.p_value) << " ("
             << stats::to_string(r.result.p_method) << ")";
      if (r.result.adjusted_p) {
        report << " p_adj=" << csv::fmt_double(*r.result.adjusted_p);
      }
    }
    if (r.result.effect) {
      const auto& e = *r.result.effect;
      report << " effect=" << csv::fmt_fixed(e.value, 4) << " ["
             << csv::fmt_fixed(e.ci_low, 4) << ", " << csv::fmt_fixed(e.ci_high, 4)
             << "] (n_boot=" << e.n_boot << " seed=" << e.seed << ")";
    }
    if (!r.result.note.empty()) report << " note=" << r.result.note;
    report << "\n";
  }

  out << "analyze: " << results.size() << " result row(s) -> "
      << (opt.out_dir / "results.csv").string() << "\n";
  if (results.empty()) {
    err << "note: empty plan produced an empty results table\n";
  }
  return kExitOk;
}

}  // namespace wardlab::cli
