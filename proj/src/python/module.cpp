#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "wardlab/agents.hpp"
#include "wardlab/analysis.hpp"
#include "wardlab/censorship.hpp"
#include "wardlab/engine.hpp"
#include "wardlab/lmm.hpp"
#include "wardlab/measures.hpp"
#include "wardlab/stats.hpp"

namespace py = pybind11;
using namespace wardlab;

namespace {

py::dict result_to_dict(const stats::TestResult& r) {
  py::dict d;
  d["test_name"] = r.test_name;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["p_method"] = stats::to_string(r.p_method);
  d["n_per_group"] = r.n_per_group;
  if (r.adjusted_p) d["adjusted_p"] = *r.adjusted_p;
  if (r.seed) d["seed"] = *r.seed;
  d["flagged"] = r.flagged;
  d["note"] = r.note;
  if (r.effect) {
    py::dict e;
    e["kind"] = r.effect->kind == stats::EffectKind::cohens_d ? "cohens_d" : "hedges_g";
    e["value"] = r.effect->value;
    e["ci_low"] = r.effect->ci_low;
    e["ci_high"] = r.effect->ci_high;
    e["n_boot"] = r.effect->n_boot;
    e["seed"] = r.effect->seed;
    e["flagged"] = r.effect->flagged;
    d["effect"] = e;
  }
  return d;
}

py::dict effect_to_dict(const stats::EffectSize& e) {
  py::dict d;
  d["kind"] = e.kind == stats::EffectKind::cohens_d ? "cohens_d" : "hedges_g";
  d["value"] = e.value;
  d["ci_low"] = e.ci_low;
  d["ci_high"] = e.ci_high;
  d["n_boot"] = e.n_boot;
  d["seed"] = e.seed;
  d["degenerate_redraws"] = e.degenerate_redraws;
  d["flagged"] = e.flagged;
  return d;
}

// route run configs through the same JSONL codec the logs use
engine::RunConfig config_from_json_text(const std::string& text) {
  auto probe = engine::RunLog::from_jsonl(text + "\n");
  return probe.config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "closed-ward multi-agent experiment harness: simulation, "
            "measurement and statistics core";

  // statistics
  m.def("wilcoxon_signed_rank",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return result_to_dict(stats::wilcoxon_signed_rank(a, b));
        },
        py::arg("a"), py::arg("b"));
  m.def("kruskal_wallis",
        [](const std::vector<std::vector<double>>& groups) {
          return result_to_dict(stats::kruskal_wallis(groups));
        },
        py::arg("groups"));
  m.def("permutation_test",
        [](const std::vector<double>& a, const std::vector<double>& b, int n_iter,
           std::uint64_t seed) {
          return result_to_dict(stats::permutation_test(
              a, b, stats::PermStatistic::mean_diff, n_iter, seed));
        },
        py::arg("a"), py::arg("b"), py::arg("n_iter") = 10000, py::arg("seed") = 0);
  m.def("cohens_d",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return stats::cohens_d(a, b);
        });
  m.def("hedges_g",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          return stats::hedges_g(a, b);
        });
  m.def("bootstrap_ci",
        [](const std::vector<double>& a, const std::vector<double>& b,
           const std::string& estimator, int n_boot, double level,
           std::uint64_t seed) {
          auto est = estimator == "cohens_d" ? stats::Estimator::cohens_d
                                             : stats::Estimator::hedges_g;
          return effect_to_dict(stats::bootstrap_ci(a, b, est, n_boot, level, seed));
        },
        py::arg("a"), py::arg("b"), py::arg("estimator") = "hedges_g",
        py::arg("n_boot") = 2000, py::arg("level") = 0.95, py::arg("seed") = 0);
  m.def("holm_adjust", [](const std::vector<double>& p) {
    return stats::holm_adjust(p);
  });
  m.def("binomial_sign_test",
        [](int successes, int trials) {
          return result_to_dict(stats::binomial_sign_test(successes, trials));
        },
        py::arg("successes"), py::arg("trials"));
  m.def("lmm_random_intercept",
        [](const std::vector<double>& outcome,
           const std::vector<std::pair<std::string, std::vector<double>>>& design,
           const std::vector<int>& groups) {
          std::vector<stats::LmmColumn> cols;
          for (const auto& [name, values] : design) cols.push_back({name, values});
          auto fit = stats::lmm_random_intercept(outcome, cols, groups);
          py::dict d;
          py::list coefs;
          for (size_t i = 0; i < fit.coefficients.size(); ++i) {
            py::dict c = result_to_dict(fit.coefficients[i]);
            c["se"] = fit.se[i];
            coefs.append(c);
          }
          d["coefficients"] = coefs;
          d["sigma2"] = fit.sigma2;
          d["tau2"] = fit.tau2;
          d["variance_ratio"] = fit.variance_ratio;
          d["converged"] = fit.converged;
          d["boundary"] = fit.boundary;
          return d;
        },
        py::arg("outcome"), py::arg("design"), py::arg("groups"));

  // measurement
  m.def("match_keywords",
        [](const std::string& text, const std::vector<std::string>& keywords,
           const std::string& language) {
          return measures::match_keywords(text, keywords,
                                          language_from_string(language));
        },
        py::arg("text"), py::arg("keywords"), py::arg("language") = "EN");
  m.def("zscore", [](const std::vector<double>& values) {
    return measures::zscore(values);
  });
  m.def("cohen_kappa",
        [](const std::vector<int>& a, const std::vector<int>& b) {
          bool flagged = false;
          double kappa = analysis::cohen_kappa(a, b, &flagged);
          return py::make_tuple(kappa, flagged);
        },
        py::arg("labels_a"), py::arg("labels_b"));

  // simulation glue: a config JSON line in, the full JSONL log out
  m.def("simulate_run",
        [](const std::string& config_json, const std::string& lexicon_dir) {
          engine::RunConfig config = config_from_json_text(config_json);
          auto lexicons = measures::LexiconSet::load_dir(lexicon_dir, config.language);
          auto assets = agents::PromptAssets::builtin();
          auto backends = agents::make_backends(config, assets, lexicons);
          engine::BackendArray arr{backends[0].get(), backends[1].get(),
                                   backends[2].get(), backends[3].get()};
          return engine::run_simulation(config, arr, lexicons, {}).to_jsonl();
        },
        py::arg("config_json"), py::arg("lexicon_dir"));
  m.def("extract_metrics",
        [](const std::string& log_jsonl, const std::string& lexicon_dir) {
          auto log = engine::RunLog::from_jsonl(log_jsonl);
          auto lexicons =
              measures::LexiconSet::load_dir(lexicon_dir, log.config.language);
          measures::MeasureOptions mo;
          mo.count_whispers = log.config.count_whispers;
          auto metrics = measures::extract_metrics(log, lexicons, mo);
          py::list out;
          for (const auto& mrow : metrics) {
            py::dict d;
            d["run_id"] = mrow.run_id;
            d["agent_index"] = mrow.agent_index;
            d["model_id"] = mrow.model_id;
            d["condition"] = to_string(mrow.condition);
            d["language"] = to_string(mrow.language);
            d["total_actions"] = mrow.total_actions;
            d["monologue_ratio"] = mrow.monologue_ratio;
            d["sexual_count"] = mrow.sexual_count;
            d["protective_count"] = mrow.protective_count;
            d["api_filter_count"] = mrow.api_filter_count;
            out.append(d);
          }
          return out;
        },
        py::arg("log_jsonl"), py::arg("lexicon_dir"));

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<BackendError>(m, "BackendError");
}
