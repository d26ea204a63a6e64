#include "qax/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "qax/cache.hpp"
#include "qax/error.hpp"
#include "qax/text.hpp"

namespace qax::pipeline {

using nlohmann::json;

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "dev"; }

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  throw InvalidArgument("unknown split '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
  weights.validate();
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
    throw InvalidArgument("similarity_threshold must lie in [0, 1]");
  }
  if (max_stride < 0) throw InvalidArgument("max_stride must be >= 0");
  provider.validate();
}

namespace {

constexpr std::pair<Status, std::string_view> kStatusNames[] = {
    {Status::Aligned, "aligned"},
    {Status::FilteredLowSimilarity, "filtered_low_similarity"},
    {Status::UnanswerableKept, "unanswerable_kept"},
    {Status::UnanswerableDropped, "unanswerable_dropped"},
    {Status::TranslationFailed, "translation_failed"},
    {Status::NoFeasibleWindow, "no_feasible_window"},
};

}  // namespace

std::string_view to_string(Status s) {
  for (const auto& [status, name] : kStatusNames) {
    if (status == s) return name;
  }
  return "unknown";
}

Status parse_status(std::string_view s) {
  for (const auto& [status, name] : kStatusNames) {
    if (name == s) return status;
  }
  throw InvalidArgument("unknown status '" + std::string(s) + "'");
}

Histogram similarity_histogram(std::span<const RecordOutcome> records) {
  Histogram h{};
  for (const auto& r : records) {
    if (!r.similarity) continue;
    std::size_t bin = 0;
    for (std::size_t k = 9; k > 0; --k) {
      if (*r.similarity >= static_cast<double>(k) / 10.0) {
        bin = k;
        break;
      }
    }
    ++h[bin];
  }
  return h;
}

FilterResult filter_by_threshold(std::vector<RecordOutcome> records, double threshold) {
  FilterResult out;
  for (auto& r : records) {
    if (r.status == Status::Aligned && r.similarity && *r.similarity < threshold) {
      r.status = Status::FilteredLowSimilarity;
      out.filtered.push_back(std::move(r));
    } else {
      out.kept.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

// Uniform draw in [0, n) without modulo bias.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

}  // namespace

std::vector<RecordOutcome> downsample_unanswerable(std::vector<RecordOutcome> records,
                                                   std::size_t keep_n, std::uint64_t rng_seed) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].status == Status::UnanswerableKept) pool.push_back(i);
  }
  if (keep_n >= pool.size()) return records;
  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = 0; i < keep_n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  for (std::size_t i = keep_n; i < pool.size(); ++i) {
    records[pool[i]].status = Status::UnanswerableDropped;
  }
  return records;
}

std::vector<RecordOutcome> apply_selection(std::vector<RecordOutcome> records, Split split,
                                           const PipelineConfig& cfg) {
  for (auto& r : records) {
    if (r.status == Status::Aligned && r.similarity && *r.similarity < cfg.similarity_threshold) {
      r.status = Status::FilteredLowSimilarity;
    }
  }
  return downsample_unanswerable(std::move(records), cfg.keep_for(split), cfg.rng_seed);
}

ReportCounts count_outcomes(std::span<const RecordOutcome> records) {
  ReportCounts c;
  for (const auto& r : records) {
    switch (r.status) {
      case Status::Aligned: ++c.answerable_kept; break;
      case Status::FilteredLowSimilarity: ++c.answerable_filtered; break;
      case Status::UnanswerableKept: ++c.unanswerable_kept; break;
      case Status::UnanswerableDropped: ++c.unanswerable_dropped; break;
      case Status::TranslationFailed:
      case Status::NoFeasibleWindow:
        ++c.failed;
        ++(r.answerable ? c.failed_answerable : c.failed_unanswerable);
        break;
    }
  }
  return c;
}

PipelineReport make_report(std::vector<RecordOutcome> records,
                           std::size_t plausible_answers_dropped) {
  PipelineReport r;
  r.histogram = similarity_histogram(records);
  r.counts = count_outcomes(records);
  r.counts.plausible_answers_dropped = plausible_answers_dropped;
  r.outcomes = std::move(records);
  return r;
}

namespace {

std::string translate_or_empty(providers::ProviderClient& client, std::string_view s) {
  if (text::normalize_utf32(s).empty()) return {};
  return client.translate_text(s);
}

}  // namespace

EntryResult translate_entry(std::string_view article_title, std::string_view context,
                            const squad::QA& qa, const PipelineConfig& cfg,
                            providers::ProviderClient& client) {
  EntryResult r;
  r.qa.id = qa.id;
  r.qa.is_impossible = qa.is_impossible;
  r.qa.extra = qa.extra;
  r.outcome.qa_id = qa.id;
  r.outcome.answerable = !qa.is_impossible;

  auto fail = [&](Status s) {
    r.qa.answers.clear();
    r.qa.alignment_meta.reset();
    r.answer_similarities.clear();
    r.outcome.status = s;
    r.outcome.similarity.reset();
    r.outcome.proximity.reset();
    return r;
  };

  try {
    r.title = translate_or_empty(client, article_title);
    r.context = translate_or_empty(client, context);
    r.qa.question = translate_or_empty(client, qa.question);
  } catch (const Error&) {
    return fail(Status::TranslationFailed);
  }

  if (qa.is_impossible) {
    r.outcome.status = Status::UnanswerableKept;
    return r;
  }

  const double context_len =
      static_cast<double>(std::max<std::size_t>(1, text::char_length(context)));
  const align::EmbedFn embed = [&client](std::string_view t) { return client.embed_text(t); };
  std::optional<align::AlignmentResult> best;

  for (const squad::Answer& original : qa.answers) {
    align::AlignmentQuery query;
    query.translated_context = r.context;
    query.max_stride = cfg.max_stride;
    query.original_answer_rel_pos =
        std::clamp(static_cast<double>(original.answer_start) / context_len, 0.0, 1.0);
    align::AlignmentResult aligned;
    try {
      query.translated_answer = translate_or_empty(client, original.text);
      aligned = align::align_answer(query, cfg.weights, embed, cfg.update_rule);
    } catch (const NoFeasibleWindow&) {
      continue;
    } catch (const EmptyContext&) {
      continue;
    } catch (const InvalidArgument&) {
      continue;
    } catch (const Error&) {
      return fail(Status::TranslationFailed);
    }
    r.qa.answers.push_back({aligned.answer_text,
                            static_cast<std::int64_t>(aligned.answer_start), original.extra});
    r.answer_similarities.push_back(aligned.score);
    if (!best || aligned.score > best->score) best = aligned;
  }

  if (!best) return fail(Status::NoFeasibleWindow);
  r.outcome.status = Status::Aligned;
  r.outcome.similarity = best->score;
  r.outcome.proximity = best->proximity;
  r.qa.alignment_meta = squad::AlignmentMeta{best->score, best->proximity, best->stride};
  return r;
}

std::string run_digest(const squad::Dataset& input, Split split, const PipelineConfig& cfg,
                       const providers::ProviderClient& client) {
  const json fingerprint = {
      {"w1", cfg.weights.w1},
      {"w2", cfg.weights.w2},
      {"threshold", cfg.similarity_threshold},
      {"keep_train", cfg.unanswerable_keep_train},
      {"keep_dev", cfg.unanswerable_keep_dev},
      {"seed", cfg.rng_seed},
      {"max_stride", cfg.max_stride},
      {"update_rule", align::to_string(cfg.update_rule)},
      {"source", cfg.provider.source_lang},
      {"target", cfg.provider.target_lang},
      {"translator", client.translator_id()},
      {"embedder", client.embedder_id()},
      {"split", to_string(split)},
  };
  return cache::sha256_hex(squad::serialize_dataset(input) + "\n" + fingerprint.dump());
}

namespace {

json entry_to_json(std::size_t index, const EntryResult& e) {
  json answers = json::array();
  for (const auto& a : e.qa.answers) {
    answers.push_back({{"text", a.text}, {"answer_start", a.answer_start}, {"extra", a.extra}});
  }
  json j = {{"i", index},
            {"id", e.qa.id},
            {"title", e.title},
            {"context", e.context},
            {"question", e.qa.question},
            {"answers", std::move(answers)},
            {"sims", e.answer_similarities},
            {"status", to_string(e.outcome.status)},
            {"similarity", nullptr},
            {"proximity", nullptr},
            {"stride", nullptr}};
  if (e.outcome.similarity) j["similarity"] = *e.outcome.similarity;
  if (e.outcome.proximity) j["proximity"] = *e.outcome.proximity;
  if (e.qa.alignment_meta) j["stride"] = e.qa.alignment_meta->stride;
  return j;
}

EntryResult entry_from_json(const json& j, const squad::QA& source) {
  EntryResult e;
  e.title = j.at("title").get<std::string>();
  e.context = j.at("context").get<std::string>();
  e.qa.id = source.id;
  e.qa.is_impossible = source.is_impossible;
  e.qa.extra = source.extra;
  e.qa.question = j.at("question").get<std::string>();
  for (const auto& a : j.at("answers")) {
    e.qa.answers.push_back({a.at("text").get<std::string>(),
                            a.at("answer_start").get<std::int64_t>(),
                            squad::Json(a.at("extra"))});
  }
  e.answer_similarities = j.at("sims").get<std::vector<double>>();
  e.outcome.qa_id = source.id;
  e.outcome.answerable = !source.is_impossible;
  e.outcome.status = parse_status(j.at("status").get<std::string>());
  if (!j.at("similarity").is_null()) e.outcome.similarity = j["similarity"].get<double>();
  if (!j.at("proximity").is_null()) e.outcome.proximity = j["proximity"].get<double>();
  if (!j.at("stride").is_null()) {
    e.qa.alignment_meta =
        squad::AlignmentMeta{*e.outcome.similarity, *e.outcome.proximity, j["stride"].get<int>()};
  }
  return e;
}

struct Item {
  std::size_t article;
  std::size_t paragraph;
  std::size_t qa;
};

// Append-only journal: a header line carrying the run digest, then one
// JSON line per completed entry. A torn final line is discarded on load.
class Journal {
 public:
  Journal(std::string path, std::string digest) : path_(std::move(path)), digest_(std::move(digest)) {}

  bool enabled() const { return !path_.empty(); }

  std::map<std::size_t, json> load() {
    std::map<std::size_t, json> done;
    if (!enabled()) return done;
    std::vector<std::string> good_lines;
    if (std::filesystem::exists(path_)) {
      std::ifstream in(path_, std::ios::binary);
      std::string line;
      bool first = true;
      while (std::getline(in, line)) {
        const bool complete = !in.eof();
        json j = json::parse(line, nullptr, false);
        if (first) {
          first = false;
          if (j.is_discarded() || !j.is_object() || !j.contains("digest")) {
            throw ChecksumMismatch("checkpoint header unreadable", path_);
          }
          if (j["digest"] != digest_) {
            throw ChecksumMismatch("checkpoint was written for different input or config",
                                   path_);
          }
          good_lines.push_back(line);
          continue;
        }
        if (!complete || j.is_discarded() || !j.is_object() || !j.contains("i")) break;
        const auto index = j["i"].get<std::size_t>();
        done[index] = std::move(j);
        good_lines.push_back(line);
      }
    }
    if (good_lines.empty()) good_lines.push_back(json{{"qax_checkpoint", 1}, {"digest", digest_}}.dump());
    // Rewrite without any torn tail so appends start on a clean line.
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write checkpoint", tmp);
      for (const auto& l : good_lines) out << l << '\n';
    }
    std::filesystem::rename(tmp, path_);
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot append to checkpoint", path_);
    return done;
  }

  void append(const json& record) {
    if (!enabled()) return;
    const std::string line = record.dump();
    std::lock_guard lock(mu_);
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw Error("checkpoint write failed", path_);
  }

 private:
  std::string path_;
  std::string digest_;
  std::ofstream out_;
  std::mutex mu_;
};

}  // namespace

PipelineOutput run_pipeline(const squad::Dataset& input, Split split, const PipelineConfig& cfg,
                            providers::ProviderClient& client, const RunOptions& options) {
  cfg.validate();
  if (auto violations = squad::validate_dataset(input); !violations.empty()) {
    throw InvalidArgument("input dataset invalid: " +
                          std::string(squad::to_string(violations.front().kind)) + " at " +
                          violations.front().path);
  }

  std::vector<Item> items;
  std::size_t plausible_dropped = 0;
  for (std::size_t a = 0; a < input.articles.size(); ++a) {
    const auto& article = input.articles[a];
    for (std::size_t p = 0; p < article.paragraphs.size(); ++p) {
      for (std::size_t q = 0; q < article.paragraphs[p].qas.size(); ++q) {
        items.push_back({a, p, q});
        const auto& qa = article.paragraphs[p].qas[q];
        if (qa.is_impossible && qa.plausible_answers && !qa.plausible_answers->empty()) {
          ++plausible_dropped;
        }
      }
    }
  }
  auto source_qa = [&](const Item& it) -> const squad::QA& {
    return input.articles[it.article].paragraphs[it.paragraph].qas[it.qa];
  };

  std::vector<std::optional<EntryResult>> results(items.size());
  Journal journal(cfg.checkpoint_path, run_digest(input, split, cfg, client));
  for (auto& [index, record] : journal.load()) {
    if (index >= items.size() || record.value("id", "") != source_qa(items[index]).id) {
      throw ChecksumMismatch("checkpoint entry does not match input", cfg.checkpoint_path);
    }
    results[index] = entry_from_json(record, source_qa(items[index]));
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!results[i]) pending.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{items.size() - pending.size()};
  std::atomic<std::size_t> completed_now{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    try {
      while (!stop.load()) {
        const std::size_t k = next.fetch_add(1);
        if (k >= pending.size()) break;
        const std::size_t i = pending[k];
        const Item& it = items[i];
        const auto& article = input.articles[it.article];
        const auto& paragraph = article.paragraphs[it.paragraph];
        EntryResult r = translate_entry(article.title, paragraph.context, source_qa(it), cfg, client);
        // Failures are not journaled so a resumed run retries them.
        if (r.outcome.status != Status::TranslationFailed) journal.append(entry_to_json(i, r));
        results[i] = std::move(r);
        const std::size_t done = ++completed;
        if (options.progress) options.progress(done, items.size());
        if (options.stop_after && ++completed_now >= *options.stop_after) stop = true;
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!first_error) first_error = std::current_exception();
      stop = true;
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(
      static_cast<std::size_t>(cfg.provider.max_in_flight), 1, std::max<std::size_t>(1, pending.size()));
  if (!pending.empty()) {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  if (completed.load() < items.size()) {
    throw PipelineInterrupted("stopped after " + std::to_string(completed_now.load()) +
                              " entries; resume from the checkpoint", cfg.checkpoint_path);
  }

  std::vector<RecordOutcome> outcomes;
  outcomes.reserve(items.size());
  for (const auto& r : results) outcomes.push_back(r->outcome);
  outcomes = apply_selection(std::move(outcomes), split, cfg);

  PipelineOutput out;
  out.dataset.version = input.version;
  out.dataset.extra = input.extra;
  std::size_t i = 0;
  for (std::size_t a = 0; a < input.articles.size(); ++a) {
    const auto& src_article = input.articles[a];
    squad::Article article;
    article.extra = src_article.extra;
    for (const auto& src_paragraph : src_article.paragraphs) {
      squad::Paragraph paragraph;
      paragraph.extra = src_paragraph.extra;
      for (std::size_t q = 0; q < src_paragraph.qas.size(); ++q, ++i) {
        const EntryResult& r = *results[i];
        const Status status = outcomes[i].status;
        if (status != Status::Aligned && status != Status::UnanswerableKept) continue;
        squad::QA qa = r.qa;
        if (status == Status::Aligned) {
          qa.answers.clear();
          for (std::size_t k = 0; k < r.qa.answers.size(); ++k) {
            if (r.answer_similarities[k] >= cfg.similarity_threshold) {
              qa.answers.push_back(r.qa.answers[k]);
            }
          }
        }
        if (paragraph.qas.empty()) paragraph.context = r.context;
        if (article.paragraphs.empty() && paragraph.qas.empty()) article.title = r.title;
        paragraph.qas.push_back(std::move(qa));
      }
      if (!paragraph.qas.empty()) article.paragraphs.push_back(std::move(paragraph));
    }
    if (!article.paragraphs.empty()) out.dataset.articles.push_back(std::move(article));
  }
  out.report = make_report(std::move(outcomes), plausible_dropped);
  return out;
}

json report_to_json(const PipelineReport& r) {
  const ReportCounts& c = r.counts;
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    json j = {{"qa_id", o.qa_id}, {"status", to_string(o.status)}, {"answerable", o.answerable}};
    if (o.similarity) j["similarity"] = *o.similarity;
    if (o.proximity) j["proximity"] = *o.proximity;
    outcomes.push_back(std::move(j));
  }
  return {{"counts",
           {{"answerable_kept", c.answerable_kept},
            {"answerable_filtered", c.answerable_filtered},
            {"unanswerable_kept", c.unanswerable_kept},
            {"unanswerable_dropped", c.unanswerable_dropped},
            {"failed", c.failed},
            {"failed_answerable", c.failed_answerable},
            {"failed_unanswerable", c.failed_unanswerable},
            {"plausible_answers_dropped", c.plausible_answers_dropped},
            {"total_kept", c.total_kept()}}},
          {"histogram", r.histogram},
          {"outcomes", std::move(outcomes)}};
}

PipelineReport report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("histogram") || !j.contains("counts")) {
    throw SchemaViolation("not a pipeline report", "$");
  }
  PipelineReport r;
  const auto hist = j.at("histogram").get<std::vector<std::size_t>>();
  if (hist.size() != r.histogram.size()) throw SchemaViolation("histogram needs 10 bins", "$.histogram");
  std::copy(hist.begin(), hist.end(), r.histogram.begin());
  const json& c = j.at("counts");
  r.counts.answerable_kept = c.value("answerable_kept", std::size_t{0});
  r.counts.answerable_filtered = c.value("answerable_filtered", std::size_t{0});
  r.counts.unanswerable_kept = c.value("unanswerable_kept", std::size_t{0});
  r.counts.unanswerable_dropped = c.value("unanswerable_dropped", std::size_t{0});
  r.counts.failed = c.value("failed", std::size_t{0});
  r.counts.failed_answerable = c.value("failed_answerable", std::size_t{0});
  r.counts.failed_unanswerable = c.value("failed_unanswerable", std::size_t{0});
  r.counts.plausible_answers_dropped = c.value("plausible_answers_dropped", std::size_t{0});
  if (j.contains("outcomes")) {
    for (const auto& o : j["outcomes"]) {
      RecordOutcome ro;
      ro.qa_id = o.at("qa_id").get<std::string>();
      ro.status = parse_status(o.at("status").get<std::string>());
      ro.answerable = o.value("answerable", true);
      if (o.contains("similarity")) ro.similarity = o["similarity"].get<double>();
      if (o.contains("proximity")) ro.proximity = o["proximity"].get<double>();
      r.outcomes.push_back(std::move(ro));
    }
  }
  return r;
}

std::string render_histogram(const Histogram& h) {
  const std::size_t peak = *std::max_element(h.begin(), h.end());
  std::ostringstream out;
  for (std::size_t k = 0; k < h.size(); ++k) {
    char label[32];
    std::snprintf(label, sizeof label, "[%.1f, %.1f%c", k / 10.0, (k + 1) / 10.0,
                  k + 1 == h.size() ? ']' : ')');
    const std::size_t bar = peak == 0 ? 0 : (h[k] * 50 + peak - 1) / peak;
    char count[32];
    std::snprintf(count, sizeof count, "%10zu", h[k]);
    out << label << ' ' << count << ' ' << std::string(bar, '#') << '\n';
  }
  return out.str();
}

std::string render_counts(const ReportCounts& c) {
  std::ostringstream out;
  out << "answerable kept:       " << c.answerable_kept << '\n'
      << "answerable filtered:   " << c.answerable_filtered << '\n'
      << "unanswerable kept:     " << c.unanswerable_kept << '\n'
      << "unanswerable dropped:  " << c.unanswerable_dropped << '\n'
      << "failed:                " << c.failed << " (answerable " << c.failed_answerable
      << ", unanswerable " << c.failed_unanswerable << ")\n"
      << "plausible answers dropped: " << c.plausible_answers_dropped << '\n'
      << "total kept:            " << c.total_kept() << '\n';
  return out.str();
}

}  // namespace qax::pipeline
