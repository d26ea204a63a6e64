#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "qax/providers.hpp"
#include "qax/text.hpp"

// Locates a translated answer inside a translated context.
//
// Every window of the context's words is considered: each start word i and
// each expansion s in [0, max_stride] gives a window of
// (answer word count + s) words. A window scores
//   w1 * clamp(cos(embed(answer), embed(window)), 0, 1)
//     + w2 * lcs_similarity(window, answer)
// and proximity is the distance between the window's relative character
// position and the original answer's relative position.

namespace qax::align {

struct SimilarityWeights {
  double w1 = 2.0 / 3.0;  // embedding cosine
  double w2 = 1.0 / 3.0;  // character LCS

  // Throws InvalidArgument unless both are >= 0 and sum to 1 within 1e-9.
  void validate() const;
  static SimilarityWeights from_w1(double w1) { return {w1, 1.0 - w1}; }
};

enum class UpdateRule {
  // Highest score; near-ties (1e-9) go to lowest proximity, then to the
  // earliest char_start, then to the smallest stride.
  Lexicographic,
  // Replace the incumbent only when the score AND the proximity both
  // improve, scanning in enumeration order.
  PaperLiteral,
};

std::string_view to_string(UpdateRule rule);
// Accepts "lexicographic" and "paper_literal"; throws InvalidArgument.
UpdateRule parse_update_rule(std::string_view s);

using EmbedFn = std::function<providers::EmbeddingVector(std::string_view)>;

struct Window {
  std::size_t word_index = 0;
  int stride = 0;
  std::string text;
  std::size_t char_start = 0;

  bool operator==(const Window&) const = default;
};

// Windows in scan order (word index outer, stride inner); windows that
// would run past the last word are omitted. Throws EmptyContext when the
// context has no words.
std::vector<Window> enumerate_windows(const text::WordSequence& ctx,
                                      std::size_t answer_word_len, int max_stride);

double score_window(std::string_view window_text, std::string_view answer_text,
                    const SimilarityWeights& weights, const EmbedFn& embed);

double proximity(double original_rel_pos, std::size_t window_char_start,
                 std::size_t context_char_len);

struct AlignmentQuery {
  std::string translated_context;
  std::string translated_answer;
  double original_answer_rel_pos = 0.0;
  int max_stride = 3;
};

struct AlignmentCandidate {
  std::string window_text;
  std::size_t char_start = 0;
  double score = 0.0;
  double proximity = 0.0;
  int stride = 0;
};

struct AlignmentResult {
  std::string answer_text;
  std::size_t answer_start = 0;
  double score = 0.0;
  double proximity = 0.0;
  int stride = 0;
  std::size_t candidates_examined = 0;
};

// Scores every candidate. Exposed for audits and oracle tests.
std::vector<AlignmentCandidate> score_candidates(const AlignmentQuery& q,
                                                 const SimilarityWeights& weights,
                                                 const EmbedFn& embed);

// Throws NoFeasibleWindow when the answer has more words than the context
// (or, under PaperLiteral, when no window ever displaces the initial
// zero-score incumbent); EmptyContext; InvalidArgument on a bad query.
AlignmentResult align_answer(const AlignmentQuery& q, const SimilarityWeights& weights,
                             const EmbedFn& embed,
                             UpdateRule rule = UpdateRule::Lexicographic);

}  // namespace qax::align
