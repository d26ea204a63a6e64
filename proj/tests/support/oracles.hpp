#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library code paths they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qax/providers.hpp"

namespace qax::testing {

// Longest common subsequence by exhaustive enumeration of every subsequence
// of the shorter string. Exponential; meant for inputs of <= ~16 chars.
inline std::size_t lcs_bruteforce(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t n = a.size();
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

// Full-table LCS for ASCII strings.
inline std::size_t lcs_table(std::string_view a, std::string_view b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

inline double cosine_naive(const std::vector<double>& u, const std::vector<double>& v) {
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / std::sqrt(nu * nv);
}

struct BruteWindow {
  std::size_t char_start = 0;
  std::string text;
  double score = 0;
  double proximity = 0;
};

// Exhaustive window scan for lowercase ASCII contexts separated by single
// or repeated spaces. Scores with the same embedder, picks the maximum
// score; near-ties (1e-9) go to the smallest proximity, then smallest start.
inline BruteWindow align_bruteforce(const std::string& context, const std::string& answer,
                                    double rel_pos, double w1, double w2, int max_stride,
                                    std::size_t* examined = nullptr) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // [start, end)
  for (std::size_t i = 0; i < context.size();) {
    if (context[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < context.size() && context[j] != ' ') ++j;
    spans.emplace_back(i, j);
    i = j;
  }
  std::size_t answer_words = 0;
  for (std::size_t i = 0; i < answer.size(); ++i) {
    if (answer[i] != ' ' && (i == 0 || answer[i - 1] == ' ')) ++answer_words;
  }
  std::string answer_norm;
  for (std::size_t i = 0; i < answer.size(); ++i) {
    if (answer[i] == ' ') {
      if (!answer_norm.empty() && answer_norm.back() != ' ') answer_norm += ' ';
    } else {
      answer_norm += answer[i];
    }
  }
  while (!answer_norm.empty() && answer_norm.back() == ' ') answer_norm.pop_back();

  const auto answer_vec = providers::test_embedder(answer).values;
  std::vector<BruteWindow> all;
  for (std::size_t i = 0; i + answer_words <= spans.size(); ++i) {
    for (int s = 0; s <= max_stride; ++s) {
      const std::size_t last = i + answer_words + s - 1;
      if (last >= spans.size()) continue;
      BruteWindow w;
      w.char_start = spans[i].first;
      w.text = context.substr(spans[i].first, spans[last].second - spans[i].first);
      std::string norm;
      for (char c : w.text) {
        if (c == ' ' && !norm.empty() && norm.back() == ' ') continue;
        norm += c;
      }
      const double cos = std::clamp(cosine_naive(answer_vec, providers::test_embedder(w.text).values), 0.0, 1.0);
      const double lcs = static_cast<double>(lcs_table(norm, answer_norm)) /
                         static_cast<double>(std::max(norm.size(), answer_norm.size()));
      w.score = w1 * cos + w2 * lcs;
      w.proximity = std::abs(static_cast<double>(w.char_start) / static_cast<double>(context.size()) - rel_pos);
      all.push_back(std::move(w));
    }
  }
  if (examined) *examined = all.size();
  double max_score = -1;
  for (const auto& w : all) max_score = std::max(max_score, w.score);
  std::vector<BruteWindow> top;
  for (const auto& w : all)
    if (w.score >= max_score - 1e-9) top.push_back(w);
  std::stable_sort(top.begin(), top.end(), [](const BruteWindow& a, const BruteWindow& b) {
    if (a.proximity != b.proximity) return a.proximity < b.proximity;
    return a.char_start < b.char_start;
  });
  return top.empty() ? BruteWindow{} : top.front();
}

}  // namespace qax::testing
