#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

// In-memory SQuAD 2.0 object tree plus its JSON reader and writer.
//
// Keys the reader does not recognise are kept in each node's `extra` object
// and written back after the known keys, so third-party annotations
// survive a parse/serialize cycle.

namespace qax::squad {

using Json = nlohmann::ordered_json;

struct Answer {
  std::string text;
  std::int64_t answer_start = 0;  // character offset into the context
  Json extra = Json::object();

  bool operator==(const Answer&) const = default;
};

// Audit trail of the span search that produced a translated answer.
struct AlignmentMeta {
  double similarity = 0.0;
  double proximity = 0.0;
  int stride = 0;

  bool operator==(const AlignmentMeta&) const = default;
};

struct QA {
  std::string id;
  std::string question;
  bool is_impossible = false;
  std::vector<Answer> answers;
  std::optional<std::vector<Answer>> plausible_answers;
  std::optional<AlignmentMeta> alignment_meta;
  Json extra = Json::object();

  bool operator==(const QA&) const = default;
};

struct Paragraph {
  std::string context;
  std::vector<QA> qas;
  Json extra = Json::object();

  bool operator==(const Paragraph&) const = default;
};

struct Article {
  std::string title;
  std::vector<Paragraph> paragraphs;
  Json extra = Json::object();

  bool operator==(const Article&) const = default;
};

struct Dataset {
  std::string version;
  std::vector<Article> articles;
  Json extra = Json::object();

  bool operator==(const Dataset&) const = default;

  std::size_t question_count() const;
};

// Throws MalformedSyntax or SchemaViolation; both carry the offending path.
Dataset parse_dataset(std::string_view raw);
Dataset read_dataset_file(const std::string& path);

// Throws InvariantViolation when an answer's offset does not match its text.
std::string serialize_dataset(const Dataset& d, int indent = -1);
Json to_json(const Dataset& d);
void write_dataset_file(const Dataset& d, const std::string& path);

enum class ViolationKind {
  DuplicateId,
  OffsetMismatch,
  ImpossibleWithAnswers,
  AnswerableWithoutAnswers,
  EmptyContext,
  SimilarityOutOfRange,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string path;
  std::string detail;
};

// Never throws; empty result iff every invariant holds.
std::vector<Violation> validate_dataset(const Dataset& d);

// True when context[answer_start, +len(text)) == text in characters.
bool answer_offset_matches(std::u32string_view context, const Answer& a);

}  // namespace qax::squad
