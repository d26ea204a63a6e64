#include "qax/squad_format.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "qax/error.hpp"
#include "qax/text.hpp"

namespace qax::squad {
namespace {

std::string child(const std::string& parent, std::string_view key) {
  return parent + "." + std::string(key);
}

std::string item(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

const char* type_name(const Json& j) { return j.type_name(); }

const Json& require(const Json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaViolation("missing required key '" + std::string(key) + "'", path);
  }
  return *it;
}

std::string require_string(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) {
    throw SchemaViolation(std::string("expected string, found ") + type_name(v),
                          child(path, key));
  }
  return v.get<std::string>();
}

const Json& require_array(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_array()) {
    throw SchemaViolation(std::string("expected array, found ") + type_name(v),
                          child(path, key));
  }
  return v;
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) {
    throw SchemaViolation(std::string("expected object, found ") + type_name(j), path);
  }
}

Json extras(const Json& obj, std::initializer_list<std::string_view> known) {
  Json out = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (auto k : known) is_known = is_known || it.key() == k;
    if (!is_known) out[it.key()] = it.value();
  }
  return out;
}

Answer parse_answer(const Json& j, const std::string& path) {
  require_object(j, path);
  Answer a;
  a.text = require_string(j, "text", path);
  const Json& start = require(j, "answer_start", path);
  if (!start.is_number_integer()) {
    throw SchemaViolation(std::string("expected integer, found ") + type_name(start),
                          child(path, "answer_start"));
  }
  a.answer_start = start.get<std::int64_t>();
  a.extra = extras(j, {"text", "answer_start"});
  return a;
}

std::vector<Answer> parse_answers(const Json& arr, const std::string& path) {
  std::vector<Answer> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_answer(arr[i], item(path, i)));
  return out;
}

double require_number(const Json& obj, std::string_view key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) {
    throw SchemaViolation(std::string("expected number, found ") + type_name(v),
                          child(path, key));
  }
  return v.get<double>();
}

AlignmentMeta parse_alignment(const Json& j, const std::string& path) {
  require_object(j, path);
  AlignmentMeta m;
  m.similarity = require_number(j, "similarity", path);
  m.proximity = require_number(j, "proximity", path);
  const Json& stride = require(j, "stride", path);
  if (!stride.is_number_integer()) {
    throw SchemaViolation("expected integer stride", child(path, "stride"));
  }
  m.stride = stride.get<int>();
  return m;
}

QA parse_qa(const Json& j, const std::string& path) {
  require_object(j, path);
  QA qa;
  qa.id = require_string(j, "id", path);
  qa.question = require_string(j, "question", path);
  qa.answers = parse_answers(require_array(j, "answers", path), child(path, "answers"));
  if (auto it = j.find("is_impossible"); it != j.end()) {
    if (!it->is_boolean()) {
      throw SchemaViolation(std::string("expected boolean, found ") + type_name(*it),
                            child(path, "is_impossible"));
    }
    qa.is_impossible = it->get<bool>();
  }
  if (auto it = j.find("plausible_answers"); it != j.end()) {
    if (!it->is_array()) {
      throw SchemaViolation("expected array", child(path, "plausible_answers"));
    }
    qa.plausible_answers = parse_answers(*it, child(path, "plausible_answers"));
  }
  if (auto it = j.find("alignment"); it != j.end()) {
    qa.alignment_meta = parse_alignment(*it, child(path, "alignment"));
  }
  qa.extra = extras(j, {"question", "id", "answers", "is_impossible",
                        "plausible_answers", "alignment"});
  return qa;
}

Paragraph parse_paragraph(const Json& j, const std::string& path) {
  require_object(j, path);
  Paragraph p;
  p.context = require_string(j, "context", path);
  const Json& qas = require_array(j, "qas", path);
  p.qas.reserve(qas.size());
  for (std::size_t i = 0; i < qas.size(); ++i) {
    p.qas.push_back(parse_qa(qas[i], item(child(path, "qas"), i)));
  }
  p.extra = extras(j, {"context", "qas"});
  return p;
}

Article parse_article(const Json& j, const std::string& path) {
  require_object(j, path);
  Article a;
  a.title = require_string(j, "title", path);
  const Json& paragraphs = require_array(j, "paragraphs", path);
  a.paragraphs.reserve(paragraphs.size());
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    a.paragraphs.push_back(parse_paragraph(paragraphs[i], item(child(path, "paragraphs"), i)));
  }
  a.extra = extras(j, {"title", "paragraphs"});
  return a;
}

Json answer_json(const Answer& a) {
  Json j = Json::object();
  j["text"] = a.text;
  j["answer_start"] = a.answer_start;
  for (auto it = a.extra.begin(); it != a.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

Json answers_json(const std::vector<Answer>& answers) {
  Json arr = Json::array();
  for (const auto& a : answers) arr.push_back(answer_json(a));
  return arr;
}

void merge_extra(Json& j, const Json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
}

}  // namespace

std::size_t Dataset::question_count() const {
  std::size_t n = 0;
  for (const auto& a : articles)
    for (const auto& p : a.paragraphs) n += p.qas.size();
  return n;
}

Dataset parse_dataset(std::string_view raw) {
  Json root;
  try {
    root = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedSyntax(e.what(), "byte " + std::to_string(e.byte));
  }
  const std::string path = "$";
  require_object(root, path);
  Dataset d;
  d.version = require_string(root, "version", path);
  const Json& data = require_array(root, "data", path);
  d.articles.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    d.articles.push_back(parse_article(data[i], item(child(path, "data"), i)));
  }
  d.extra = extras(root, {"version", "data"});
  return d;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

bool answer_offset_matches(std::u32string_view context, const Answer& a) {
  const std::u32string text = text::to_utf32(a.text);
  if (a.answer_start < 0) return false;
  const auto start = static_cast<std::size_t>(a.answer_start);
  if (start > context.size() || text.size() > context.size() - start) return false;
  return context.substr(start, text.size()) == text;
}

Json to_json(const Dataset& d) {
  Json root = Json::object();
  root["version"] = d.version;
  Json data = Json::array();
  for (std::size_t ai = 0; ai < d.articles.size(); ++ai) {
    const Article& article = d.articles[ai];
    Json aj = Json::object();
    aj["title"] = article.title;
    Json paragraphs = Json::array();
    for (std::size_t pi = 0; pi < article.paragraphs.size(); ++pi) {
      const Paragraph& p = article.paragraphs[pi];
      const std::u32string context = text::to_utf32(p.context);
      Json pj = Json::object();
      pj["context"] = p.context;
      Json qas = Json::array();
      for (std::size_t qi = 0; qi < p.qas.size(); ++qi) {
        const QA& qa = p.qas[qi];
        for (std::size_t k = 0; k < qa.answers.size(); ++k) {
          if (!answer_offset_matches(context, qa.answers[k])) {
            throw InvariantViolation(
                "answer text does not match context at answer_start",
                "$.data[" + std::to_string(ai) + "].paragraphs[" + std::to_string(pi) +
                    "].qas[" + std::to_string(qi) + "].answers[" + std::to_string(k) + "]");
          }
        }
        Json qj = Json::object();
        qj["question"] = qa.question;
        qj["id"] = qa.id;
        qj["answers"] = answers_json(qa.answers);
        if (qa.plausible_answers) qj["plausible_answers"] = answers_json(*qa.plausible_answers);
        qj["is_impossible"] = qa.is_impossible;
        if (qa.alignment_meta) {
          qj["alignment"] = Json{{"similarity", qa.alignment_meta->similarity},
                                 {"proximity", qa.alignment_meta->proximity},
                                 {"stride", qa.alignment_meta->stride}};
        }
        merge_extra(qj, qa.extra);
        qas.push_back(std::move(qj));
      }
      pj["qas"] = std::move(qas);
      merge_extra(pj, p.extra);
      paragraphs.push_back(std::move(pj));
    }
    aj["paragraphs"] = std::move(paragraphs);
    merge_extra(aj, article.extra);
    data.push_back(std::move(aj));
  }
  root["data"] = std::move(data);
  merge_extra(root, d.extra);
  return root;
}

std::string serialize_dataset(const Dataset& d, int indent) {
  return to_json(d).dump(indent);
}

void write_dataset_file(const Dataset& d, const std::string& path) {
  const std::string body = serialize_dataset(d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file", path);
  out << body;
  if (!out) throw Error("write failed", path);
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::OffsetMismatch: return "OffsetMismatch";
    case ViolationKind::ImpossibleWithAnswers: return "ImpossibleWithAnswers";
    case ViolationKind::AnswerableWithoutAnswers: return "AnswerableWithoutAnswers";
    case ViolationKind::EmptyContext: return "EmptyContext";
    case ViolationKind::SimilarityOutOfRange: return "SimilarityOutOfRange";
  }
  return "Unknown";
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  std::unordered_set<std::string> seen;
  for (std::size_t ai = 0; ai < d.articles.size(); ++ai) {
    const Article& article = d.articles[ai];
    const std::string apath = "$.data[" + std::to_string(ai) + "]";
    for (std::size_t pi = 0; pi < article.paragraphs.size(); ++pi) {
      const Paragraph& p = article.paragraphs[pi];
      const std::string ppath = apath + ".paragraphs[" + std::to_string(pi) + "]";
      const std::u32string context = text::to_utf32(p.context);
      bool has_answerable = false;
      for (std::size_t qi = 0; qi < p.qas.size(); ++qi) {
        const QA& qa = p.qas[qi];
        const std::string qpath = ppath + ".qas[" + std::to_string(qi) + "]";
        if (!seen.insert(qa.id).second) {
          out.push_back({ViolationKind::DuplicateId, qpath, "id '" + qa.id + "' repeated"});
        }
        if (qa.is_impossible && !qa.answers.empty()) {
          out.push_back({ViolationKind::ImpossibleWithAnswers, qpath,
                         std::to_string(qa.answers.size()) + " answers"});
        }
        if (!qa.is_impossible) {
          has_answerable = true;
          if (qa.answers.empty()) {
            out.push_back({ViolationKind::AnswerableWithoutAnswers, qpath, "no answers"});
          }
        }
        for (std::size_t k = 0; k < qa.answers.size(); ++k) {
          const Answer& a = qa.answers[k];
          if (!answer_offset_matches(context, a)) {
            out.push_back({ViolationKind::OffsetMismatch,
                           qpath + ".answers[" + std::to_string(k) + "]",
                           "'" + a.text + "' not found at " + std::to_string(a.answer_start)});
          }
        }
        if (qa.alignment_meta) {
          const double s = qa.alignment_meta->similarity;
          if (!(s >= 0.0 && s <= 1.0)) {
            out.push_back({ViolationKind::SimilarityOutOfRange, qpath + ".alignment",
                           std::to_string(s)});
          }
        }
      }
      if (has_answerable && context.empty()) {
        out.push_back({ViolationKind::EmptyContext, ppath, "answerable question on empty context"});
      }
    }
  }
  return out;
}

}  // namespace qax::squad
