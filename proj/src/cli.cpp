#include "qax/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qax/aligner.hpp"
#include "qax/cache.hpp"
#include "qax/error.hpp"
#include "qax/metrics.hpp"
#include "qax/pipeline.hpp"
#include "qax/providers.hpp"
#include "qax/squad_format.hpp"

namespace qax::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file", path);
  out << body;
  if (!out) throw Error("write failed", path);
}

// Fills options that were not given on the command line from the config
// file named by --config.
void apply_config(CLI::App& sub, const std::string& config_path) {
  if (config_path.empty()) return;
  const auto values = parse_config_text(read_file(config_path));
  for (const auto& [key, value] : values) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw InvalidArgument("unknown config key '" + key + "'", config_path);
    }
    if (opt->count() > 0 || key == "config") continue;
    opt->clear();
    opt->add_result(value);
    opt->run_callback();
  }
}

struct ProviderFlags {
  std::string translator = "identity";
  std::string embedder = "test";
  providers::ProviderConfig cfg;

  void add_to(CLI::App& app, bool with_translation) {
    if (with_translation) {
      app.add_option("--translator", translator, "Translation backend")
          ->check(CLI::IsMember({"identity", "http"}));
      app.add_option("--translate-url", cfg.translate_endpoint,
                     "Translate endpoint (env QAX_TRANSLATE_URL)");
      app.add_option("--source-lang", cfg.source_lang, "Source language tag");
      app.add_option("--target-lang", cfg.target_lang, "Target language tag");
    }
    app.add_option("--embedder", embedder, "Embedding backend")
        ->check(CLI::IsMember({"test", "http"}));
    app.add_option("--embed-url", cfg.embed_endpoint, "Embed endpoint (env QAX_EMBED_URL)");
    app.add_option("--embed-dim", cfg.embed_dim,
                   "Expected embedding length (0 = take the first response's)");
    app.add_option("--max-in-flight", cfg.max_in_flight, "Concurrent provider requests")
        ->check(CLI::PositiveNumber);
    app.add_option("--retry-max", cfg.retry_max, "Retries after the first attempt")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--retry-base-ms", cfg.retry_base_ms, "Backoff base in milliseconds")
        ->check(CLI::PositiveNumber);
    app.add_option("--cache-dir", cfg.cache_dir, "Provider response cache directory");
  }

  providers::ProviderConfig resolve() {
    providers::ProviderConfig out = cfg;
    providers::apply_environment(out);
    out.translator = translator == "http" ? providers::TranslatorKind::Http
                                          : providers::TranslatorKind::Identity;
    out.embedder = embedder == "http" ? providers::EmbedderKind::Http
                                      : providers::EmbedderKind::Test;
    return out;
  }
};

struct WeightFlags {
  double w1 = 2.0 / 3.0;
  double w2 = 1.0 / 3.0;
  CLI::Option* w1_opt = nullptr;
  CLI::Option* w2_opt = nullptr;

  void add_to(CLI::App& app) {
    w1_opt = app.add_option("--w1", w1, "Embedding-cosine weight");
    w2_opt = app.add_option("--w2", w2, "LCS weight (defaults to 1 - w1)");
  }

  align::SimilarityWeights resolve() const {
    align::SimilarityWeights w{w1, w2};
    if (w1_opt->count() > 0 && w2_opt->count() == 0) w.w2 = 1.0 - w1;
    if (w2_opt->count() > 0 && w1_opt->count() == 0) w.w1 = 1.0 - w2;
    w.validate();
    return w;
  }
};

int cmd_translate_dataset(const std::string& in_path, const std::string& out_path,
                          const std::string& report_path, const std::string& split_name,
                          pipeline::PipelineConfig cfg, bool quiet, std::ostream& out,
                          std::ostream& err) {
  const squad::Dataset input = squad::read_dataset_file(in_path);
  const pipeline::Split split = pipeline::parse_split(split_name);
  auto client = providers::ProviderClient::from_config(cfg.provider);

  pipeline::RunOptions options;
  if (!quiet) {
    options.progress = [&err](std::size_t done, std::size_t total) {
      if (done == total || done % 500 == 0) {
        err << "translated " << done << "/" << total << " entries\n";
      }
    };
  }
  const pipeline::PipelineOutput result =
      pipeline::run_pipeline(input, split, cfg, *client, options);

  squad::write_dataset_file(result.dataset, out_path);
  write_file(report_path.empty() ? out_path + ".report.json" : report_path,
             pipeline::report_to_json(result.report).dump(2));

  out << pipeline::render_counts(result.report.counts) << '\n'
      << pipeline::render_histogram(result.report.histogram);
  if (result.report.counts.failed > 0) {
    err << result.report.counts.failed << " entries failed; see the report\n";
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_align(const align::AlignmentQuery& q, const align::SimilarityWeights& weights,
              align::UpdateRule rule, providers::ProviderClient& client, std::ostream& out) {
  const align::EmbedFn embed = [&client](std::string_view t) { return client.embed_text(t); };
  const align::AlignmentResult r = align::align_answer(q, weights, embed, rule);
  const nlohmann::json j = {{"char_start", r.answer_start},
                            {"text", r.answer_text},
                            {"score", r.score},
                            {"proximity", r.proximity},
                            {"stride", r.stride},
                            {"candidates_examined", r.candidates_examined},
                            {"update_rule", align::to_string(rule)},
                            {"weights", {{"w1", weights.w1}, {"w2", weights.w2}}}};
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_stats(const std::string& path, bool as_json, std::ostream& out) {
  const std::string raw = read_file(path);
  const auto j = nlohmann::json::parse(raw, nullptr, false);
  if (j.is_discarded()) throw MalformedSyntax("not JSON", path);

  pipeline::PipelineReport report;
  if (j.is_object() && j.contains("histogram")) {
    report = pipeline::report_from_json(j);
  } else {
    const squad::Dataset d = squad::parse_dataset(raw);
    std::vector<pipeline::RecordOutcome> outcomes;
    for (const auto& a : d.articles) {
      for (const auto& p : a.paragraphs) {
        for (const auto& qa : p.qas) {
          pipeline::RecordOutcome o;
          o.qa_id = qa.id;
          o.answerable = !qa.is_impossible;
          o.status = qa.is_impossible ? pipeline::Status::UnanswerableKept
                                      : pipeline::Status::Aligned;
          if (qa.alignment_meta) {
            o.similarity = qa.alignment_meta->similarity;
            o.proximity = qa.alignment_meta->proximity;
          }
          outcomes.push_back(std::move(o));
        }
      }
    }
    report = pipeline::make_report(std::move(outcomes));
  }

  if (as_json) {
    out << nlohmann::json{{"histogram", report.histogram},
                          {"counts", pipeline::report_to_json(report)["counts"]}}
               .dump(2)
        << '\n';
  } else {
    out << pipeline::render_histogram(report.histogram) << '\n'
        << pipeline::render_counts(report.counts);
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                 const std::string& json_out, bool per_question, std::ostream& out,
                 std::ostream& err) {
  const auto preds = metrics::read_predictions_file(pred_path);
  const auto gold = squad::read_dataset_file(gold_path);
  const metrics::EvalSummary s = metrics::evaluate_predictions(preds, gold);
  if (s.n_missing > 0) {
    err << "warning: " << s.n_missing << " of " << s.n_evaluated
        << " questions have no prediction and score 0\n";
  }
  out << metrics::format_summary(s) << '\n';
  if (!json_out.empty()) write_file(json_out, metrics::to_json(s, per_question).dump(2));
  return kExitOk;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("expected key = value", "config line " + std::to_string(line_no));
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw InvalidArgument("empty key", "config line " + std::to_string(line_no));
    out[key] = value;
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Translate extractive QA datasets and re-align answer spans", "qax"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  // translate-dataset
  auto* translate = app.add_subcommand("translate-dataset",
                                       "Translate a SQuAD 2.0 file and re-align its answers");
  std::string in_path, out_path, report_path, split_name = "train", translate_config;
  bool quiet = false;
  pipeline::PipelineConfig pcfg;
  std::string rule_name = "lexicographic";
  ProviderFlags translate_providers;
  WeightFlags translate_weights;
  translate->add_option("--in", in_path, "Input SQuAD 2.0 JSON")->required();
  translate->add_option("--out", out_path, "Output SQuAD 2.0 JSON")->required();
  translate->add_option("--report", report_path, "Report path (default: <out>.report.json)");
  translate->add_option("--split", split_name, "Dataset split")
      ->check(CLI::IsMember({"train", "dev"}));
  translate->add_option("--config", translate_config, "key = value configuration file");
  translate_weights.add_to(*translate);
  translate->add_option("--threshold", pcfg.similarity_threshold,
                        "Keep answers with similarity >= threshold")
      ->check(CLI::Range(0.0, 1.0));
  translate->add_option("--keep-train", pcfg.unanswerable_keep_train,
                        "Unanswerable questions kept for train");
  translate->add_option("--keep-dev", pcfg.unanswerable_keep_dev,
                        "Unanswerable questions kept for dev");
  translate->add_option("--seed", pcfg.rng_seed, "Downsampling seed");
  translate->add_option("--max-stride", pcfg.max_stride, "Extra words per window (0..s)")
      ->check(CLI::NonNegativeNumber);
  translate->add_option("--update-rule", rule_name, "Best-span update rule")
      ->check(CLI::IsMember({"lexicographic", "paper_literal"}));
  translate->add_option("--checkpoint", pcfg.checkpoint_path, "Resume journal path");
  translate->add_flag("--quiet", quiet, "No progress output");
  translate_providers.add_to(*translate, true);

  // align
  auto* align_cmd = app.add_subcommand("align", "Find one translated answer in a context");
  align::AlignmentQuery query;
  std::string align_rule = "lexicographic", align_config;
  ProviderFlags align_providers;
  WeightFlags align_weights;
  align_cmd->add_option("--context", query.translated_context, "Translated context")->required();
  align_cmd->add_option("--answer", query.translated_answer, "Translated answer")->required();
  align_cmd->add_option("--rel-pos", query.original_answer_rel_pos,
                        "Original answer start / original context length")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  align_cmd->add_option("--max-stride", query.max_stride, "Extra words per window (0..s)")
      ->check(CLI::NonNegativeNumber);
  align_cmd->add_option("--update-rule", align_rule, "Best-span update rule")
      ->check(CLI::IsMember({"lexicographic", "paper_literal"}));
  align_cmd->add_option("--config", align_config, "key = value configuration file");
  align_weights.add_to(*align_cmd);
  align_providers.add_to(*align_cmd, false);

  // stats
  auto* stats = app.add_subcommand("stats", "Similarity histogram and counts");
  std::string stats_path;
  bool stats_json = false;
  stats->add_option("path", stats_path, "Report JSON or aligned dataset")->required();
  stats->add_flag("--json", stats_json, "Emit JSON");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Exact Match and F1 of predictions");
  std::string pred_path, gold_path, eval_json;
  bool per_question = false;
  evaluate->add_option("--pred", pred_path, "Predictions JSON {qa_id: answer}")->required();
  evaluate->add_option("--gold", gold_path, "Gold SQuAD 2.0 JSON")->required();
  evaluate->add_option("--json-out", eval_json, "Also write the summary as JSON");
  evaluate->add_flag("--per-question", per_question, "Include per-question scores in JSON");

  // cache
  auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the provider cache");
  cache_cmd->require_subcommand(1);
  std::string cache_dir;
  auto* inspect = cache_cmd->add_subcommand("inspect", "Summarize cache entries");
  inspect->add_option("--dir", cache_dir, "Cache directory")->required();
  auto* clear = cache_cmd->add_subcommand("clear", "Delete cache entries");
  clear->add_option("--dir", cache_dir, "Cache directory")->required();

  try {
    std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*translate) {
      apply_config(*translate, translate_config);
      pcfg.weights = translate_weights.resolve();
      pcfg.update_rule = align::parse_update_rule(rule_name);
      pcfg.provider = translate_providers.resolve();
      return cmd_translate_dataset(in_path, out_path, report_path, split_name, pcfg, quiet, out,
                                   err);
    }
    if (*align_cmd) {
      apply_config(*align_cmd, align_config);
      auto client = providers::ProviderClient::from_config(align_providers.resolve());
      return cmd_align(query, align_weights.resolve(), align::parse_update_rule(align_rule),
                       *client, out);
    }
    if (*stats) return cmd_stats(stats_path, stats_json, out);
    if (*evaluate) return cmd_evaluate(pred_path, gold_path, eval_json, per_question, out, err);
    if (*inspect) {
      const auto s = cache::inspect_cache(cache_dir);
      out << nlohmann::json{{"entries", s.entries},
                            {"translations", s.translations},
                            {"embeddings", s.embeddings},
                            {"unreadable", s.unreadable},
                            {"bytes", s.bytes}}
                 .dump(2)
          << '\n';
      return kExitOk;
    }
    if (*clear) {
      out << "removed " << cache::clear_cache(cache_dir) << " entries\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace qax::cli
