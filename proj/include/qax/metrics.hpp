#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qax/squad_format.hpp"

// SQuAD-style Exact Match and token F1.

namespace qax::metrics {

// qa id -> predicted answer; "" predicts "no answer".
using PredictionSet = std::map<std::string, std::string>;

// Lowercases Latin letters, deletes ASCII punctuation and the Ethiopic
// marks U+1361..U+1368, splits on whitespace and drops the English
// articles a / an / the.
std::vector<std::string> normalize_answer(std::string_view s);

// An empty `golds` list (or one whose entries all normalize to nothing)
// stands for an unanswerable question; it matches only an empty prediction.
int compute_em(std::string_view pred, const std::vector<std::string>& golds);
double compute_f1(std::string_view pred, const std::vector<std::string>& golds);

struct QuestionScore {
  int em = 0;
  double f1 = 0.0;
};

struct EvalSummary {
  double exact_match = 0.0;  // percent
  double f1 = 0.0;           // percent
  std::size_t n_evaluated = 0;
  std::size_t n_missing = 0;  // gold questions without a prediction, scored 0
  std::map<std::string, QuestionScore> per_question;
};

// Macro-average over every gold question. Throws UnknownQaId when a
// prediction names a question absent from the gold set.
EvalSummary evaluate_predictions(const PredictionSet& preds, const squad::Dataset& gold);

// Reads {"qa_id": "answer", ...}. Throws MalformedSyntax / SchemaViolation.
PredictionSet parse_predictions(std::string_view raw);
PredictionSet read_predictions_file(const std::string& path);

nlohmann::json to_json(const EvalSummary& s, bool per_question = false);
// "EM 57.55 F1 68.80"
std::string format_summary(const EvalSummary& s);

}  // namespace qax::metrics
