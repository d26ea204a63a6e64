#pragma once

// Synthetic SQuAD-shaped datasets for pipeline and acceptance tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qax/squad_format.hpp"

namespace qax::testing {

inline std::size_t utf8_chars(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

struct SyntheticOptions {
  std::size_t questions = 100;
  double unanswerable_fraction = 0.2;
  std::size_t qas_per_paragraph = 4;
  std::size_t paragraphs_per_article = 3;
  std::size_t min_context_words = 20;
  std::size_t max_context_words = 60;
  std::size_t max_answer_words = 4;
  std::uint64_t seed = 1;
};

inline const std::vector<std::string>& synthetic_vocabulary() {
  static const std::vector<std::string> words = {
      "river", "city", "king", "school", "water", "north", "empire", "church", "market",
      "bridge", "mountain", "valley", "council", "treaty", "harbor", "garden", "railway",
      "አዲስ", "አበባ", "ኢትዮጵያ", "ወንዝ", "ከተማ", "ትምህርት", "ቤት", "መንግሥት", "ሰላም", "ዓባይ",
      "1896", "2011", "café", "naïve", "Zürich", "Denver", "Broncos"};
  return words;
}

// Contexts are single-spaced words; every answer is a word-aligned span
// copied from its context, so its offset is exact by construction.
inline squad::Dataset make_synthetic_dataset(const SyntheticOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  const auto& vocab = synthetic_vocabulary();
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
  };

  squad::Dataset d;
  d.version = "v2.0";
  std::size_t made = 0;
  while (made < opt.questions) {
    squad::Article article;
    article.title = "Article " + std::to_string(d.articles.size());
    for (std::size_t p = 0; p < opt.paragraphs_per_article && made < opt.questions; ++p) {
      squad::Paragraph para;
      std::vector<std::string> words(pick(opt.min_context_words, opt.max_context_words));
      std::vector<std::size_t> starts;
      for (auto& w : words) {
        w = vocab[rng() % vocab.size()];
        if (!para.context.empty()) para.context += ' ';
        starts.push_back(utf8_chars(para.context));
        para.context += w;
      }
      for (std::size_t q = 0; q < opt.qas_per_paragraph && made < opt.questions; ++q, ++made) {
        squad::QA qa;
        qa.id = "syn-" + std::to_string(opt.seed) + "-" + std::to_string(made);
        qa.question = "What about " + words[rng() % words.size()] + "?";
        const std::size_t len = pick(1, opt.max_answer_words);
        const std::size_t first = rng() % (words.size() - len + 1);
        squad::Answer ans;
        for (std::size_t k = 0; k < len; ++k) {
          if (k) ans.text += ' ';
          ans.text += words[first + k];
        }
        ans.answer_start = static_cast<std::int64_t>(starts[first]);
        const bool impossible =
            static_cast<double>(rng() % 10000) / 10000.0 < opt.unanswerable_fraction;
        qa.is_impossible = impossible;
        if (impossible) {
          qa.plausible_answers = std::vector<squad::Answer>{ans};
        } else {
          qa.answers.push_back(ans);
        }
        para.qas.push_back(std::move(qa));
      }
      article.paragraphs.push_back(std::move(para));
    }
    d.articles.push_back(std::move(article));
  }
  return d;
}

}  // namespace qax::testing
