// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.
//
// Partition survival is the safety core of the membership module, so it is
// pinned two ways: against hand-frozen cases and against an independent
// brute-force enumeration over every original set and candidate subset.

#include <gtest/gtest.h>

#include <vector>

#include "clussim/view.hpp"

namespace clussim {
namespace {

// Oracle: a literal restatement of the three survival rules, written
// independently of the production implementation (set algebra only, no
// shared helpers) so the two can disagree.
bool oracle_survives(const std::vector<int>& original,
                     const std::vector<int>& candidate, int tie_breaker,
                     int prev_owner) {
  std::size_t n = original.size();
  std::size_t c = candidate.size();
  // rule 1: strict majority
  if (2 * c > n) return true;
  // rule 2: exactly half, at least two members, holds the tie breaker
  if (2 * c == n && c >= 2) {
    for (int x : candidate)
      if (x == tie_breaker) return true;
  }
  // rule 3: two-member cluster collapsing to the previous device owner
  if (n == 2 && c == 1 && candidate[0] == prev_owner) return true;
  return false;
}

std::vector<int> subset_of(const std::vector<int>& all, unsigned mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (mask & (1u << i)) out.push_back(all[i]);
  return out;
}

TEST(Survives, FrozenCases) {
  // Majority survives, minority does not.
  EXPECT_TRUE(survives({1, 2, 3, 4, 5}, {1, 2, 3}, 1, 1));
  EXPECT_FALSE(survives({1, 2, 3, 4, 5}, {4, 5}, 1, 1));
  // Exact half: only the side holding the tie breaker survives.
  EXPECT_TRUE(survives({1, 2, 3, 4}, {1, 2}, 1, 1));
  EXPECT_FALSE(survives({1, 2, 3, 4}, {3, 4}, 1, 1));
  EXPECT_TRUE(survives({1, 2, 3, 4}, {3, 4}, 3, 1));
  // Exact half of a two-node cluster is a single node: rule 2 demands at
  // least two members, so only rule 3 can save it.
  EXPECT_TRUE(survives({1, 2}, {1}, 1, 1));
  EXPECT_FALSE(survives({1, 2}, {1}, 1, 2));
  EXPECT_TRUE(survives({1, 2}, {2}, 1, 2));
  // Tie breaker alone in a four-node cluster is a quarter: dies.
  EXPECT_FALSE(survives({1, 2, 3, 4}, {1}, 1, 1));
  // Singleton cluster survives as itself.
  EXPECT_TRUE(survives({7}, {7}, 7, 7));
}

TEST(Survives, MatchesOracleExhaustively) {
  // Every original set drawn from {1..6} with |N| <= 6, every candidate
  // subset, every tie breaker and previous owner drawn from the original.
  std::vector<int> universe = {1, 2, 3, 4, 5, 6};
  for (unsigned om = 1; om < (1u << universe.size()); ++om) {
    std::vector<int> original = subset_of(universe, om);
    for (unsigned cm = 0; cm < (1u << universe.size()); ++cm) {
      if ((cm & om) != cm) continue;  // candidates come from the original
      std::vector<int> cand = subset_of(universe, cm);
      for (int tb : original) {
        for (int po : original) {
          ASSERT_EQ(survives(original, cand, tb, po),
                    oracle_survives(original, cand, tb, po))
              << "original mask " << om << " cand mask " << cm << " tb " << tb
              << " owner " << po;
        }
      }
    }
  }
}

TEST(Survives, AtMostOneDisjointSurvivorExhaustively) {
  // Safety argument behind split-brain freedom: among the sides of any
  // 2-way or 3-way split of the original membership, at most one side can
  // satisfy the survival rules. Checked by enumerating all assignments of
  // members to sides for |N| <= 6.
  std::vector<int> universe = {1, 2, 3, 4, 5, 6};
  for (std::size_t n = 1; n <= universe.size(); ++n) {
    std::vector<int> original(universe.begin(), universe.begin() + n);
    for (int sides = 2; sides <= 3; ++sides) {
      std::vector<int> assign(n, 0);
      while (true) {
        for (int tb : original) {
          for (int po : original) {
            int survivors = 0;
            for (int s = 0; s < sides; ++s) {
              std::vector<int> cand;
              for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == s) cand.push_back(original[i]);
              if (!cand.empty() && survives(original, cand, tb, po))
                ++survivors;
            }
            ASSERT_LE(survivors, 1)
                << "n=" << n << " sides=" << sides << " tb=" << tb;
          }
        }
        // next assignment
        std::size_t i = 0;
        while (i < n && assign[i] == sides - 1) assign[i++] = 0;
        if (i == n) break;
        ++assign[i];
      }
    }
  }
}

}  // namespace
}  // namespace clussim
