// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.
//
// The installation order of the global update protocol, frozen before the
// engine was built. The locker installs first (at grant), then ids above
// the locker ascending, then ids below it ascending. The recovery rule
// "the next surviving node in the old order already holds the update"
// depends on this exact order, so it gets its own oracle.

#include <gtest/gtest.h>

#include "clussim/glup.hpp"

namespace clussim {
namespace {

TEST(UpdateOrder, FrozenExamples) {
  EXPECT_EQ(update_order({1, 2, 3, 5}, 3), (NodeSet{3, 5, 1, 2}));
  EXPECT_EQ(update_order({1, 2, 3}, 1), (NodeSet{1, 2, 3}));
  EXPECT_EQ(update_order({1, 2, 3}, 3), (NodeSet{3, 1, 2}));
  EXPECT_EQ(update_order({4}, 4), (NodeSet{4}));
  EXPECT_EQ(update_order({2, 4, 6, 8}, 6), (NodeSet{6, 8, 2, 4}));
}

TEST(UpdateOrder, WrapPropertyExhaustive) {
  // For every active set drawn from {1..7} and every locker choice: the
  // order is a permutation of the actives, starts at the locker, and each
  // successor is the next id in ascending wrap-around order.
  std::vector<int> universe = {1, 2, 3, 4, 5, 6, 7};
  for (unsigned m = 1; m < (1u << universe.size()); ++m) {
    NodeSet actives;
    for (std::size_t i = 0; i < universe.size(); ++i)
      if (m & (1u << i)) actives.push_back(universe[i]);
    for (NodeId locker : actives) {
      NodeSet order = update_order(actives, locker);
      ASSERT_EQ(order.size(), actives.size());
      ASSERT_EQ(order.front(), locker);
      NodeSet sorted = order;
      std::sort(sorted.begin(), sorted.end());
      ASSERT_EQ(sorted, actives);
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        // successor = smallest id greater than order[i], wrapping to the
        // smallest id overall
        NodeId cur = order[i];
        NodeId expect = 0;
        for (NodeId v : actives)
          if (v > cur && (expect == 0 || v < expect)) expect = v;
        if (expect == 0) expect = actives.front();
        ASSERT_EQ(order[i + 1], expect) << "actives mask " << m;
      }
    }
  }
}

}  // namespace
}  // namespace clussim
