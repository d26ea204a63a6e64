#include "qax/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qax/error.hpp"

namespace qax::align {

void SimilarityWeights::validate() const {
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw InvalidArgument("similarity weights must be >= 0");
  if (std::abs(w1 + w2 - 1.0) > 1e-9) throw InvalidArgument("similarity weights must sum to 1");
}

std::string_view to_string(UpdateRule rule) {
  return rule == UpdateRule::Lexicographic ? "lexicographic" : "paper_literal";
}

UpdateRule parse_update_rule(std::string_view s) {
  if (s == "lexicographic") return UpdateRule::Lexicographic;
  if (s == "paper_literal") return UpdateRule::PaperLiteral;
  throw InvalidArgument("unknown update rule '" + std::string(s) + "'");
}

std::vector<Window> enumerate_windows(const text::WordSequence& ctx,
                                      std::size_t answer_word_len, int max_stride) {
  if (ctx.empty()) throw EmptyContext("context has no words");
  if (answer_word_len < 1) throw InvalidArgument("answer_word_len must be >= 1");
  if (max_stride < 0) throw InvalidArgument("max_stride must be >= 0");
  std::vector<Window> out;
  if (answer_word_len > ctx.size()) return out;
  for (std::size_t i = 0; i + answer_word_len <= ctx.size(); ++i) {
    for (int s = 0; s <= max_stride; ++s) {
      const std::size_t last = i + answer_word_len + static_cast<std::size_t>(s) - 1;
      if (last >= ctx.size()) break;
      const text::Word& first_word = ctx.words[i];
      const text::Word& last_word = ctx.words[last];
      out.push_back({i, s,
                     ctx.source.substr(first_word.byte_start,
                                       last_word.byte_end() - first_word.byte_start),
                     first_word.char_start});
    }
  }
  return out;
}

namespace {

double weighted(double cosine, double lcs, const SimilarityWeights& w) {
  const double score = w.w1 * std::clamp(cosine, 0.0, 1.0) + w.w2 * lcs;
  return std::clamp(score, 0.0, 1.0);
}

}  // namespace

double score_window(std::string_view window_text, std::string_view answer_text,
                    const SimilarityWeights& weights, const EmbedFn& embed) {
  weights.validate();
  const double cosine =
      providers::cosine_similarity(embed(answer_text), embed(window_text));
  return weighted(cosine, text::lcs_similarity(window_text, answer_text), weights);
}

double proximity(double original_rel_pos, std::size_t window_char_start,
                 std::size_t context_char_len) {
  if (context_char_len == 0) throw InvalidArgument("context_char_len must be >= 1");
  return std::abs(static_cast<double>(window_char_start) /
                      static_cast<double>(context_char_len) -
                  original_rel_pos);
}

std::vector<AlignmentCandidate> score_candidates(const AlignmentQuery& q,
                                                 const SimilarityWeights& weights,
                                                 const EmbedFn& embed) {
  weights.validate();
  if (!(q.original_answer_rel_pos >= 0.0 && q.original_answer_rel_pos <= 1.0)) {
    throw InvalidArgument("original_answer_rel_pos must lie in [0, 1]");
  }
  const text::WordSequence answer_words = text::split_words(q.translated_answer);
  if (answer_words.empty()) throw InvalidArgument("translated answer is empty");
  const text::WordSequence ctx = text::split_words(q.translated_context);
  if (ctx.empty()) throw EmptyContext("translated context has no words");
  if (answer_words.size() > ctx.size()) {
    throw NoFeasibleWindow("answer has " + std::to_string(answer_words.size()) +
                           " words, context only " + std::to_string(ctx.size()));
  }

  const providers::EmbeddingVector answer_embedding = embed(q.translated_answer);
  const std::u32string answer_norm = text::normalize_utf32(q.translated_answer);

  std::vector<AlignmentCandidate> out;
  for (Window& w : enumerate_windows(ctx, answer_words.size(), q.max_stride)) {
    const double cosine = providers::cosine_similarity(answer_embedding, embed(w.text));
    const double lcs = text::lcs_similarity_raw(text::normalize_utf32(w.text), answer_norm);
    AlignmentCandidate c;
    c.score = weighted(cosine, lcs, weights);
    c.proximity = proximity(q.original_answer_rel_pos, w.char_start, ctx.source_len);
    c.char_start = w.char_start;
    c.stride = w.stride;
    c.window_text = std::move(w.text);
    out.push_back(std::move(c));
  }
  return out;
}

AlignmentResult align_answer(const AlignmentQuery& q, const SimilarityWeights& weights,
                             const EmbedFn& embed, UpdateRule rule) {
  const std::vector<AlignmentCandidate> candidates = score_candidates(q, weights, embed);
  const AlignmentCandidate* best = nullptr;

  if (rule == UpdateRule::Lexicographic) {
    double max_score = -1.0;
    for (const auto& c : candidates) max_score = std::max(max_score, c.score);
    for (const auto& c : candidates) {
      if (c.score < max_score - 1e-9) continue;
      if (best == nullptr || c.proximity < best->proximity ||
          (c.proximity == best->proximity &&
           (c.char_start < best->char_start ||
            (c.char_start == best->char_start && c.stride < best->stride)))) {
        best = &c;
      }
    }
  } else {
    double s_max = 0.0;
    double p_best = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      if (c.score > s_max && c.proximity < p_best) {
        best = &c;
        s_max = c.score;
        p_best = c.proximity;
      }
    }
  }

  if (best == nullptr) throw NoFeasibleWindow("no candidate window selected");
  AlignmentResult r;
  r.answer_text = best->window_text;
  r.answer_start = best->char_start;
  r.score = best->score;
  r.proximity = best->proximity;
  r.stride = best->stride;
  r.candidates_examined = candidates.size();
  return r;
}

}  // namespace qax::align
