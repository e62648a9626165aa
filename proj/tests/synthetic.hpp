#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "uknow/reasoning.hpp"
#include "uknow/rng.hpp"

namespace test {

// 20 x 10 grid of entities with four functional relations:
// (a, b) -> (a+1, b), (a, b+1), (a+2, b), (a+1, b+1).
struct Synthetic {
  std::size_t num_entities = 0;
  std::vector<uknow::Edge> all;
  std::vector<uknow::Edge> train;
  std::vector<uknow::Edge> test;
};

inline Synthetic compositional_graph(std::uint64_t seed, double held_out = 0.1) {
  constexpr int kRows = 20, kCols = 10;
  constexpr int kSteps[4][2] = {{1, 0}, {0, 1}, {2, 0}, {1, 1}};
  Synthetic s;
  s.num_entities = kRows * kCols;
  auto id = [](int a, int b) { return static_cast<uknow::NodeIndex>(a * kCols + b); };
  for (int r = 0; r < 4; ++r)
    for (int a = 0; a < kRows; ++a)
      for (int b = 0; b < kCols; ++b) {
        const int a2 = a + kSteps[r][0], b2 = b + kSteps[r][1];
        if (a2 < kRows && b2 < kCols)
          s.all.push_back({id(a, b), static_cast<uknow::EdgeCode>(r), id(a2, b2), 1.0});
      }
  std::vector<uknow::Edge> shuffled = s.all;
  uknow::Rng rng(seed);
  uknow::shuffle(std::span<uknow::Edge>(shuffled), rng);
  const auto n_test = static_cast<std::size_t>(held_out * static_cast<double>(shuffled.size()));
  s.test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
  return s;
}

// Rank by sorting every surviving candidate; ties put the answer last.
inline std::size_t brute_force_rank(const std::vector<double>& distances, uknow::NodeIndex answer,
                                    const std::set<uknow::NodeIndex>& true_answers) {
  std::vector<std::pair<double, int>> cands;
  for (std::size_t c = 0; c < distances.size(); ++c) {
    if (c != answer && true_answers.count(static_cast<uknow::NodeIndex>(c))) continue;
    cands.push_back({distances[c], c == answer ? 1 : 0});
  }
  std::sort(cands.begin(), cands.end());
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].second == 1) return i + 1;
  return 0;
}

// Expected MRR of a scorer that ranks the answer uniformly among its
// candidates: mean over queries of H_K / K for K filtered candidates.
inline double random_baseline_mrr(const Synthetic& s) {
  std::set<std::tuple<uknow::NodeIndex, uknow::EdgeCode, uknow::NodeIndex>> known;
  for (const auto& e : s.all) known.insert({e.head, e.code, e.tail});
  double total = 0.0;
  std::size_t queries = 0;
  auto add = [&](std::size_t k) {
    double h = 0.0;
    for (std::size_t i = 1; i <= k; ++i) h += 1.0 / static_cast<double>(i);
    total += h / static_cast<double>(k);
    ++queries;
  };
  for (const auto& e : s.test) {
    std::size_t k_tail = 0, k_head = 0;
    for (uknow::NodeIndex c = 0; c < s.num_entities; ++c) {
      if (c == e.tail || !known.count({e.head, e.code, c})) ++k_tail;
      if (c == e.head || !known.count({c, e.code, e.tail})) ++k_head;
    }
    add(k_tail);
    add(k_head);
  }
  return total / static_cast<double>(queries);
}

}  // namespace test
