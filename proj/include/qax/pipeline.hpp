#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qax/aligner.hpp"
#include "qax/providers.hpp"
#include "qax/squad_format.hpp"

// Dataset translation: translate every entry, re-align its answers in the
// translated context, drop low-similarity answers, downsample unanswerable
// questions and report the similarity distribution.

namespace qax::pipeline {

enum class Split { Train, Dev };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct PipelineConfig {
  align::SimilarityWeights weights;
  double similarity_threshold = 0.6;
  std::size_t unanswerable_keep_train = 6000;
  std::size_t unanswerable_keep_dev = 700;
  std::uint64_t rng_seed = 13;
  int max_stride = 3;
  align::UpdateRule update_rule = align::UpdateRule::Lexicographic;
  providers::ProviderConfig provider;
  std::string checkpoint_path;  // empty disables checkpointing

  void validate() const;
  std::size_t keep_for(Split s) const {
    return s == Split::Train ? unanswerable_keep_train : unanswerable_keep_dev;
  }
};

enum class Status {
  Aligned,
  FilteredLowSimilarity,
  UnanswerableKept,
  UnanswerableDropped,
  TranslationFailed,
  NoFeasibleWindow,
};

std::string_view to_string(Status s);
Status parse_status(std::string_view s);

struct RecordOutcome {
  std::string qa_id;
  Status status = Status::Aligned;
  bool answerable = true;
  std::optional<double> similarity;  // present iff Aligned or FilteredLowSimilarity
  std::optional<double> proximity;

  bool operator==(const RecordOutcome&) const = default;
};

using Histogram = std::array<std::size_t, 10>;

struct ReportCounts {
  std::size_t answerable_kept = 0;
  std::size_t answerable_filtered = 0;
  std::size_t unanswerable_kept = 0;
  std::size_t unanswerable_dropped = 0;
  std::size_t failed = 0;  // translation_failed + no_feasible_window
  std::size_t failed_answerable = 0;
  std::size_t failed_unanswerable = 0;
  std::size_t plausible_answers_dropped = 0;

  std::size_t total_kept() const { return answerable_kept + unanswerable_kept; }
  bool operator==(const ReportCounts&) const = default;
};

struct PipelineReport {
  std::vector<RecordOutcome> outcomes;
  Histogram histogram{};
  ReportCounts counts;

  bool operator==(const PipelineReport&) const = default;
};

// Bins [0,0.1), [0.1,0.2), ..., [0.9,1.0]; records without a similarity
// are skipped.
Histogram similarity_histogram(std::span<const RecordOutcome> records);

struct FilterResult {
  std::vector<RecordOutcome> kept;
  std::vector<RecordOutcome> filtered;
};

// Aligned records below `threshold` move to `filtered` as
// FilteredLowSimilarity; the bound is inclusive. Everything else stays in
// `kept` unchanged.
FilterResult filter_by_threshold(std::vector<RecordOutcome> records, double threshold);

// Keeps a uniform sample of min(keep_n, available) UnanswerableKept records
// and marks the rest UnanswerableDropped. Order and all other records are
// untouched; the sample depends only on (available, keep_n, seed).
std::vector<RecordOutcome> downsample_unanswerable(std::vector<RecordOutcome> records,
                                                   std::size_t keep_n, std::uint64_t rng_seed);

// filter_by_threshold then downsample_unanswerable, in document order.
std::vector<RecordOutcome> apply_selection(std::vector<RecordOutcome> records, Split split,
                                           const PipelineConfig& cfg);

ReportCounts count_outcomes(std::span<const RecordOutcome> records);
PipelineReport make_report(std::vector<RecordOutcome> records,
                           std::size_t plausible_answers_dropped = 0);

// One translated question. `qa.answers` holds every answer that aligned,
// paired with `answer_similarities`; the threshold is applied later.
struct EntryResult {
  std::string title;
  std::string context;
  squad::QA qa;
  std::vector<double> answer_similarities;
  RecordOutcome outcome;

  bool operator==(const EntryResult&) const = default;
};

// Translates title, context, question and answers, then aligns each answer
// with original_rel_pos = answer_start / max(1, len(context)). Provider
// failures yield TranslationFailed instead of throwing.
EntryResult translate_entry(std::string_view article_title, std::string_view context,
                            const squad::QA& qa, const PipelineConfig& cfg,
                            providers::ProviderClient& client);

struct RunOptions {
  // Simulates a crash: stop after this many newly completed entries and
  // throw PipelineInterrupted, leaving the checkpoint journal behind.
  std::optional<std::size_t> stop_after;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct PipelineOutput {
  squad::Dataset dataset;
  PipelineReport report;
};

// Throws ChecksumMismatch when the checkpoint belongs to other input/config.
PipelineOutput run_pipeline(const squad::Dataset& input, Split split,
                            const PipelineConfig& cfg, providers::ProviderClient& client,
                            const RunOptions& options = {});

// Digest binding a checkpoint to its input and configuration.
std::string run_digest(const squad::Dataset& input, Split split, const PipelineConfig& cfg,
                       const providers::ProviderClient& client);

nlohmann::json report_to_json(const PipelineReport& r);
PipelineReport report_from_json(const nlohmann::json& j);
std::string render_histogram(const Histogram& h);
std::string render_counts(const ReportCounts& c);

}  // namespace qax::pipeline
