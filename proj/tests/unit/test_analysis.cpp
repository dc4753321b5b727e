#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "wardlab/analysis.hpp"
#include "wardlab/csv.hpp"
#include "wardlab/measures.hpp"

using namespace wardlab;
using analysis::Quadrant;

namespace {

measures::LexiconSet lexicon_en() {
  measures::LexiconSet lex;
  lex.language = Language::EN;
  lex.sexual = {"desire"};
  lex.protective = {"consent"};
  lex.conflict_markers = {"torn", "uneasy"};
  lex.compliance_markers = {"agree", "comply"};
  return lex;
}

measures::IndexRow index_row(const std::string& run, const std::string& model,
                             Condition cond, Language lang, double cpi, double di,
                             int rep = 1) {
  measures::IndexRow r;
  r.run_id = run;
  r.series = Series::C;
  r.condition = cond;
  r.language = lang;
  r.replication_index = rep;
  r.agent_index = 0;
  r.model_id = model;
  r.cpi = cpi;
  r.di = di;
  r.z_monologue = (cpi + di) / 2.0;
  r.z_sexual = (cpi - di) / 2.0;
  r.z_protective = 0.0;
  return r;
}

engine::RunLog fixture_log() {
  engine::RunLog log;
  log.config.run_id = "fixture";
  log.config.condition = Condition::C4;
  log.config.language = Language::EN;
  log.config.seed = 1;
  log.config.turns_per_day = 2;
  log.config.days = 1;
  const char* names[] = {"Aoi", "Ren", "Sora", "Yuki"};
  for (int i = 0; i < 4; ++i) {
    AgentSpec a;
    a.name = names[i];
    a.model_id = "m";
    log.config.agents.push_back(a);
  }
  return log;
}

void add_action(engine::RunLog& log, int day, int turn, int speaker,
                ActionKind kind, const std::string& text) {
  engine::ActionEvent ev;
  ev.day = day;
  ev.turn = turn;
  ev.seq = log.events.size();
  ev.action = {kind, speaker, std::nullopt, text, day, turn};
  log.events.push_back(ev);
  engine::DeliveryEvent de;
  de.day = day;
  de.turn = turn;
  de.seq = log.events.size();
  de.action_seq = ev.seq;
  de.verdict = Verdict::pass;
  log.events.push_back(de);
}

}  // namespace

TEST_CASE("cohen_kappa: textbook cases") {
  bool flagged = false;
  CHECK(analysis::cohen_kappa(std::vector<int>{1, 0, 1, 0},
                              std::vector<int>{1, 0, 1, 0}) == doctest::Approx(1.0));
  CHECK(analysis::cohen_kappa(std::vector<int>{1, 1, 0, 0},
                              std::vector<int>{1, 0, 1, 0}) == doctest::Approx(0.0));
  CHECK(analysis::cohen_kappa(std::vector<int>{1, 1, 0, 0},
                              std::vector<int>{0, 0, 1, 1}) == doctest::Approx(-1.0));
  CHECK(analysis::cohen_kappa(std::vector<int>{1, 1, 1},
                              std::vector<int>{1, 1, 1}, &flagged) ==
        doctest::Approx(1.0));
  CHECK(flagged);  // p_e = 1 convention
  CHECK_THROWS_AS((void)analysis::cohen_kappa(std::vector<int>{1},
                                              std::vector<int>{1, 0}),
                  DataError);
  CHECK_THROWS_AS((void)analysis::cohen_kappa(std::vector<int>{2},
                                              std::vector<int>{1}),
                  DataError);
}

TEST_CASE("quadrant assignment follows the sign convention, zeros to baseline") {
  CHECK(analysis::quadrant_of(2.23, -1.0) == Quadrant::collective_excitation);
  CHECK(analysis::quadrant_of(-0.5, 1.41) == Quadrant::internal_dissociation);
  CHECK(analysis::quadrant_of(0.33, 0.62) == Quadrant::dual_pattern);
  CHECK(analysis::quadrant_of(-1.0, -1.0) == Quadrant::baseline);
  CHECK(analysis::quadrant_of(0.0, 0.0) == Quadrant::baseline);
  CHECK(analysis::quadrant_of(0.0, 1.0) == Quadrant::internal_dissociation);
  CHECK(analysis::quadrant_of(1.0, 0.0) == Quadrant::collective_excitation);
}

TEST_CASE("cell_means: single rows have no sd; known values are exact") {
  std::vector<measures::IndexRow> rows = {
      index_row("r1", "sonnet", Condition::C2, Language::JA, 2.0, -1.0),
      index_row("r2", "sonnet", Condition::C2, Language::JA, 3.0, -2.0, 2),
      index_row("r3", "gpt", Condition::C4, Language::EN, -1.0, 0.5),
  };
  auto cells = analysis::cell_means(rows);
  REQUIRE(cells.size() == 2);
  // deterministic key order: gpt cell sorts before sonnet
  CHECK(cells[0].key.group == "gpt");
  CHECK(!cells[0].cpi.sd.has_value());
  CHECK(cells[0].n_runs == 1);
  CHECK(cells[1].key.group == "sonnet");
  CHECK(cells[1].cpi.mean == doctest::Approx(2.5));
  CHECK(cells[1].di.mean == doctest::Approx(-1.5));
  REQUIRE(cells[1].cpi.sd.has_value());
  CHECK(*cells[1].cpi.sd == doctest::Approx(std::sqrt(0.5)));
  CHECK(cells[1].n_runs == 2);
}

TEST_CASE("cell_means: hand-summed six-row fixture") {
  std::vector<measures::IndexRow> rows;
  for (int i = 0; i < 6; ++i) {
    rows.push_back(index_row("r" + std::to_string(i), "m", Condition::C2,
                             Language::EN, 1.0 + i, 2.0 * i, i + 1));
  }
  auto cells = analysis::cell_means(rows);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].cpi.mean == doctest::Approx(3.5));  // mean of 1..6
  CHECK(cells[0].di.mean == doctest::Approx(5.0));   // mean of 0,2,..,10
}

TEST_CASE("quadrant_map: known placements and determinism") {
  std::vector<measures::IndexRow> rows = {
      index_row("r1", "sonnet", Condition::C2, Language::JA, 2.23, -1.0),
      index_row("r2", "sonnet", Condition::C1, Language::EN, -0.4, 1.41),
      index_row("r3", "gpt", Condition::C2, Language::EN, 0.33, 0.62),
      index_row("r4", "grok", Condition::C4, Language::EN, -1.2, -0.8),
  };
  auto cells = analysis::cell_means(rows);
  auto map1 = analysis::quadrant_map(cells);
  auto map2 = analysis::quadrant_map(cells);
  CHECK(map1.svg == map2.svg);  // identical input, identical bytes
  REQUIRE(map1.points.size() == 4);
  for (const auto& p : map1.points) {
    if (p.key.group == "sonnet" && p.key.condition == Condition::C2) {
      CHECK(p.quadrant == Quadrant::collective_excitation);
    }
    if (p.key.group == "sonnet" && p.key.condition == Condition::C1) {
      CHECK(p.quadrant == Quadrant::internal_dissociation);
    }
    if (p.key.group == "gpt") CHECK(p.quadrant == Quadrant::dual_pattern);
    if (p.key.group == "grok") CHECK(p.quadrant == Quadrant::baseline);
  }
  CHECK(map1.svg.find("<svg") == 0);
  CHECK(map1.svg.find("collective excitation") != std::string::npos);
}

TEST_CASE("dissociation: pair definition and rate") {
  auto lex = lexicon_en();
  auto log = fixture_log();
  // agent 0: compliant talk then conflicted monologue -> a pair
  add_action(log, 1, 0, 0, ActionKind::talk, "I agree with the plan");
  add_action(log, 1, 1, 0, ActionKind::monologue, "I feel torn about it");
  // agent 1: compliant talk then a neutral monologue -> not a pair
  add_action(log, 1, 2, 1, ActionKind::talk, "I comply");
  add_action(log, 1, 3, 1, ActionKind::monologue, "a calm evening");
  // agent 2: monologue with no prior talk -> counted, no pair row
  add_action(log, 1, 4, 2, ActionKind::monologue, "torn from the start");

  auto report = analysis::detect_dissociation_pairs(log, lex);
  CHECK(report.n_monologues == 3);
  CHECK(report.n_pairs == 1);
  REQUIRE(report.rate.has_value());
  CHECK(*report.rate == doctest::Approx(1.0 / 3.0));
  REQUIRE(report.pairs.size() == 2);
  CHECK(report.pairs[0].is_pair);
  CHECK(report.pairs[0].compliance_score == 1);
  CHECK(report.pairs[0].conflict_score == 1);
  CHECK(!report.pairs[1].is_pair);
}

TEST_CASE("dissociation: pairing is same-day and most-recent-talk") {
  auto lex = lexicon_en();
  auto log = fixture_log();
  log.config.days = 2;
  add_action(log, 1, 0, 0, ActionKind::talk, "I agree completely");
  // next day: the day boundary breaks the pair
  add_action(log, 2, 0, 0, ActionKind::monologue, "still torn");
  auto report = analysis::detect_dissociation_pairs(log, lex);
  CHECK(report.n_monologues == 1);
  CHECK(report.pairs.empty());
  CHECK(report.n_pairs == 0);
}

TEST_CASE("dissociation: synthetic three-of-six fixture gives rate 0.5") {
  auto lex = lexicon_en();
  auto log = fixture_log();
  int turn = 0;
  for (int i = 0; i < 3; ++i) {
    add_action(log, 1, turn++, 0, ActionKind::talk, "I agree");
    add_action(log, 1, turn++, 0, ActionKind::monologue, "uneasy inside");
  }
  for (int i = 0; i < 3; ++i) {
    add_action(log, 1, turn++, 1, ActionKind::talk, "plain words");
    add_action(log, 1, turn++, 1, ActionKind::monologue, "plain thoughts");
  }
  auto report = analysis::detect_dissociation_pairs(log, lex);
  CHECK(report.n_monologues == 6);
  CHECK(report.n_pairs == 3);
  CHECK(*report.rate == doctest::Approx(0.5));
}

TEST_CASE("dissociation: rate invariant under reordering other agents' events") {
  auto lex = lexicon_en();
  // variant A: agent 1's chatter interleaved between agent 0's talk/monologue
  auto a = fixture_log();
  add_action(a, 1, 0, 0, ActionKind::talk, "I agree with this");
  add_action(a, 1, 1, 1, ActionKind::talk, "noise");
  add_action(a, 1, 2, 1, ActionKind::monologue, "noise thought");
  add_action(a, 1, 3, 0, ActionKind::monologue, "still torn");
  // variant B: agent 1's events moved after, agent 0's order preserved
  auto b = fixture_log();
  add_action(b, 1, 0, 0, ActionKind::talk, "I agree with this");
  add_action(b, 1, 1, 0, ActionKind::monologue, "still torn");
  add_action(b, 1, 2, 1, ActionKind::talk, "noise");
  add_action(b, 1, 3, 1, ActionKind::monologue, "noise thought");

  auto ra = analysis::detect_dissociation_pairs(a, lex);
  auto rb = analysis::detect_dissociation_pairs(b, lex);
  CHECK(ra.n_pairs == rb.n_pairs);
  CHECK(ra.n_monologues == rb.n_monologues);
  CHECK(*ra.rate == *rb.rate);
}

TEST_CASE("dissociation: no monologues flags the report") {
  auto lex = lexicon_en();
  auto log = fixture_log();
  add_action(log, 1, 0, 0, ActionKind::talk, "just talk");
  auto report = analysis::detect_dissociation_pairs(log, lex);
  CHECK(report.flagged);
  CHECK(!report.rate.has_value());
}

TEST_CASE("ingest: round-trips the artifact's own export") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wardlab_ingest_test";
  fs::create_directories(dir);

  std::vector<measures::AgentMetrics> rows;
  for (int i = 0; i < 4; ++i) {
    measures::AgentMetrics m;
    m.run_id = "run_r0" + std::to_string(i + 1);
    m.series = Series::R;
    m.condition = Condition::C2;
    m.language = Language::JA;
    m.alignment_level = AlignmentLevel::heavy;
    m.replication_index = i + 1;
    m.agent_index = i;
    m.model_id = "llama";
    m.total_actions = 24;
    m.monologue_count = 6 + i;
    m.monologue_ratio = (6.0 + i) / 24.0;
    m.sexual_count = i;
    m.protective_count = 10 - i;
    m.api_filter_count = 0;
    rows.push_back(m);
  }
  measures::write_metrics_csv(dir / "metrics.csv", rows);
  auto back = analysis::ingest_metrics(dir / "metrics.csv");
  REQUIRE(back.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].run_id == rows[i].run_id);
    CHECK(back[i].series == rows[i].series);
    CHECK(back[i].alignment_level == rows[i].alignment_level);
    CHECK(back[i].monologue_ratio == rows[i].monologue_ratio);
    CHECK(back[i].sexual_count == rows[i].sexual_count);
    CHECK(back[i].replication_index == rows[i].replication_index);
  }
  fs::remove_all(dir);
}

TEST_CASE("ingest: missing required column named in the rejection") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wardlab_ingest_test2";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.csv");
    f << "run_id,condition,language,agent_index,model_id,sexual_count,"
         "protective_count,api_filter_count,total_actions\n";
    f << "r1,C2,EN,0,m,1,2,0,24\n";
  }
  try {
    (void)analysis::ingest_metrics(dir / "bad.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("monologue_ratio") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("ingest: malformed rows reported with their row numbers") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wardlab_ingest_test3";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "rows.csv");
    f << "run_id,condition,language,agent_index,model_id,monologue_ratio,"
         "sexual_count,protective_count,api_filter_count,total_actions\n";
    f << "r1,C2,EN,0,m,0.25,1,2,0,24\n";
    f << "r2,C2,EN,zero,m,0.25,1,2,0,24\n";  // non-numeric agent_index
  }
  try {
    (void)analysis::ingest_metrics(dir / "rows.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("ingest: schema adapter maps foreign column names and defaults") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wardlab_ingest_test4";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "foreign.csv");
    f << "run,cond,lang,agent,model,mono_ratio,sex_kw,prot_kw,api_n,n_actions\n";
    f << "r_r01,C2,JA,0,deepseek,0.25,4,2,1,24\n";
  }
  {
    std::ofstream f(dir / "adapter.json");
    f << R"({"column_map": {"run_id": "run", "condition": "cond",
            "language": "lang", "agent_index": "agent", "model_id": "model",
            "monologue_ratio": "mono_ratio", "sexual_count": "sex_kw",
            "protective_count": "prot_kw", "api_filter_count": "api_n",
            "total_actions": "n_actions"},
            "defaults": {"series": "C"}})";
  }
  auto adapter = analysis::SchemaAdapter::load(dir / "adapter.json");
  auto rows = analysis::ingest_metrics(dir / "foreign.csv", adapter);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].run_id == "r_r01");
  CHECK(rows[0].model_id == "deepseek");
  CHECK(rows[0].series == Series::C);
  CHECK(rows[0].api_filter_count == 1);
  CHECK(rows[0].replication_index == 1);  // parsed from the run_id suffix
  fs::remove_all(dir);
}
