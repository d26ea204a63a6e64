#include "qax/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "qax/error.hpp"
#include "qax/text.hpp"

namespace qax::metrics {
namespace {

bool is_ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

bool is_ethiopic_punct(char32_t c) { return c >= 0x1361 && c <= 0x1368; }

// Golds that normalize to nothing are dropped; none left means "no answer".
std::vector<std::vector<std::string>> gold_token_lists(const std::vector<std::string>& golds) {
  std::vector<std::vector<std::string>> out;
  for (const auto& g : golds) {
    auto toks = normalize_answer(g);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  if (out.empty()) out.emplace_back();
  return out;
}

double f1_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) return pred == gold ? 1.0 : 0.0;
  std::unordered_map<std::string, int> counts;
  for (const auto& t : gold) ++counts[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::vector<std::string> normalize_answer(std::string_view s) {
  std::vector<std::string> tokens;
  std::u32string current;
  auto flush = [&] {
    if (current.empty()) return;
    std::string tok = text::to_utf8(current);
    current.clear();
    if (tok == "a" || tok == "an" || tok == "the") return;
    tokens.push_back(std::move(tok));
  };
  for (char32_t c : text::to_utf32(s)) {
    if (text::is_space(c)) {
      flush();
      continue;
    }
    if (is_ascii_punct(c) || is_ethiopic_punct(c)) continue;
    current.push_back(text::lower_latin(c));
  }
  flush();
  return tokens;
}

int compute_em(std::string_view pred, const std::vector<std::string>& golds) {
  const auto gold_tokens = gold_token_lists(golds);
  const auto p = normalize_answer(pred);
  return std::any_of(gold_tokens.begin(), gold_tokens.end(),
                     [&](const auto& g) { return g == p; })
             ? 1
             : 0;
}

double compute_f1(std::string_view pred, const std::vector<std::string>& golds) {
  const auto gold_tokens = gold_token_lists(golds);
  const auto p = normalize_answer(pred);
  double best = 0.0;
  for (const auto& g : gold_tokens) best = std::max(best, f1_tokens(p, g));
  return best;
}

EvalSummary evaluate_predictions(const PredictionSet& preds, const squad::Dataset& gold) {
  EvalSummary s;
  std::size_t total = 0;
  double em_sum = 0.0;
  double f1_sum = 0.0;
  std::size_t matched = 0;
  for (const auto& article : gold.articles) {
    for (const auto& p : article.paragraphs) {
      for (const auto& qa : p.qas) {
        ++total;
        std::vector<std::string> golds;
        if (!qa.is_impossible) {
          for (const auto& a : qa.answers) golds.push_back(a.text);
        }
        QuestionScore score;
        if (auto it = preds.find(qa.id); it != preds.end()) {
          ++matched;
          score.em = compute_em(it->second, golds);
          score.f1 = compute_f1(it->second, golds);
        } else {
          ++s.n_missing;
        }
        em_sum += score.em;
        f1_sum += score.f1;
        s.per_question[qa.id] = score;
      }
    }
  }
  if (matched != preds.size()) {
    for (const auto& [id, _] : preds) {
      if (!s.per_question.count(id)) throw UnknownQaId("prediction for unknown question", id);
    }
  }
  s.n_evaluated = total;
  if (total > 0) {
    s.exact_match = 100.0 * em_sum / static_cast<double>(total);
    s.f1 = 100.0 * f1_sum / static_cast<double>(total);
  }
  return s;
}

PredictionSet parse_predictions(std::string_view raw) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedSyntax(e.what(), "byte " + std::to_string(e.byte));
  }
  if (!j.is_object()) throw SchemaViolation("predictions must be a JSON object", "$");
  PredictionSet out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it->is_string()) throw SchemaViolation("prediction must be a string", "$." + it.key());
    out.emplace(it.key(), it->get<std::string>());
  }
  return out;
}

PredictionSet read_predictions_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open predictions file", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_predictions(buf.str());
}

nlohmann::json to_json(const EvalSummary& s, bool per_question) {
  nlohmann::json j = {{"exact_match", s.exact_match},
                      {"f1", s.f1},
                      {"n_evaluated", s.n_evaluated},
                      {"n_missing", s.n_missing}};
  if (per_question) {
    nlohmann::json pq = nlohmann::json::object();
    for (const auto& [id, q] : s.per_question) pq[id] = {{"em", q.em}, {"f1", q.f1}};
    j["per_question"] = std::move(pq);
  }
  return j;
}

std::string format_summary(const EvalSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "EM %.2f F1 %.2f", s.exact_match, s.f1);
  return buf;
}

}  // namespace qax::metrics
