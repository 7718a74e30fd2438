#include <gtest/gtest.h>

#include <random>
#include <set>

#include "kimura/markov.hpp"
#include "kimura/reducer.hpp"

using namespace kimura;

namespace {

// Replays independently of the reducer: every step legal, degree <= 4, and
// compatibility kept after each step.
void expect_valid(const Table& t0, const Table& t1, const MoveTrace& tr, bool must_end_equal = true) {
  const auto r = replay(t0, t1, tr, kMoveBound);
  ASSERT_TRUE(r.ok) << r.error;
  if (must_end_equal) {
    EXPECT_TRUE(r.equal);
  }
}

// Random pairs whose pinned distance satisfies pred.
template <class Pred>
std::vector<std::pair<Table, Table>> sample_pairs(std::uint64_t seed, int n, int d, std::size_t want, Pred pred,
                                                  std::size_t tries = 200000) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Table, Table>> out;
  for (std::size_t i = 0; i < tries && out.size() < want; ++i) {
    auto p = random_compatible_pair(rng, n, d);
    if (p.first == p.second) continue;
    auto [a, b] = residual_rows(p.first.rows(), p.second.rows());
    if (static_cast<int>(a.size()) <= kMoveBound) continue;
    if (pred(min_distance(a, b))) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST(BadPairs, Examples) {
  EXPECT_TRUE(find_bad_pairs(Table::parse({"ab00c", "c000c"})).empty());
  const auto bp = find_bad_pairs(Table::parse({"00bac", "00000", "c00c0"}));
  ASSERT_EQ(bp.size(), 1u);
  EXPECT_EQ(bp[0].x, GroupElem::alpha());
  EXPECT_EQ(bp[0].y, GroupElem::gamma());
  EXPECT_TRUE(find_bad_pairs(Table::parse({"aa000", "bb000"})).empty());
  EXPECT_THROW(find_bad_pairs(Table(1, {Flow(1)})), std::invalid_argument);
}

TEST(ReducePair, EqualTablesGiveEmptyTrace) {
  const auto t = Table::parse({"abc0", "0000", "aabb", "ccaa", "abba", "cc00"});
  const auto r = reduce_pair(t, t);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.trace.empty());
}

TEST(ReducePair, ExampleIsOneCubicMove) {
  const auto t0 = Table::parse({"aa0", "0bb", "c0c"});
  const auto t1 = Table::parse({"000", "cab", "abc"});
  const auto r = reduce_pair(t0, t1);
  ASSERT_TRUE(r.success);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace.max_degree, 3);
  expect_valid(t0, t1, r.trace);
}

TEST(ReducePair, SharedRowsAreLeftAlone) {
  const auto t0 = Table::parse({"aa0", "0bb", "c0c", "abc", "abc", "000"});
  const auto t1 = Table::parse({"000", "cab", "abc", "abc", "abc", "000"});
  const auto r = reduce_pair(t0, t1);
  ASSERT_TRUE(r.success);
  EXPECT_EQ(r.trace.max_degree, 3);
  expect_valid(t0, t1, r.trace);
}

TEST(ReducePair, Preconditions) {
  EXPECT_THROW(reduce_pair(Table::parse({"aa0"}), Table::parse({"bb0"})), std::invalid_argument);
  EXPECT_THROW(reduce_pair(Table(3, {}), Table(3, {})), std::invalid_argument);
}

TEST(ReducePair, RandomPairsAcrossShapes) {
  for (auto [n, d] : {std::pair{3, 8}, {4, 7}, {5, 6}, {6, 7}, {7, 6}, {8, 6}}) {
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(n * 31 + d));
    for (int i = 0; i < 40; ++i) {
      auto [t0, t1] = random_compatible_pair(rng, n, d);
      ASSERT_TRUE(compatible(t0, t1));
      const auto r = reduce_pair(t0, t1);
      ASSERT_TRUE(r.success) << "n=" << n << " d=" << d << " " << r.diagnostic;
      expect_valid(t0, t1, r.trace);
    }
  }
}

TEST(ReducePair, Deterministic) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 10; ++i) {
    auto [t0, t1] = random_compatible_pair(rng, 7, 6);
    const auto a = reduce_pair(t0, t1), b = reduce_pair(t0, t1);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t s = 0; s < a.trace.size(); ++s) {
      EXPECT_EQ(a.trace.steps[s].side, b.trace.steps[s].side);
      EXPECT_EQ(a.trace.steps[s].move, b.trace.steps[s].move);
    }
  }
}

TEST(HammingStages, AtLeastFourDropsToThree) {
  const auto pairs = sample_pairs(5, 9, 5, 25, [](int k) { return k >= 4; });
  ASSERT_GE(pairs.size(), 10u);
  std::set<std::string> classes;
  for (auto& [t0, t1] : pairs) {
    PairState st(t0, t1);
    ReduceContext ctx;
    const auto before = st.pinned();
    classes.insert(disagreement_class(std::vector<GroupElem>(before.h.disagreement.begin(), before.h.disagreement.begin() + 4)));
    ASSERT_TRUE(reduce_hamming_ge4(st, ctx));
    const auto res = st.residual();
    EXPECT_TRUE(res.a.size() < residual_rows(t0.rows(), t1.rows()).first.size() || min_distance(res.a, res.b) <= 3);
    expect_valid(t0, t1, st.trace, false);
    EXPECT_LE(st.trace.max_degree, 4);
    if (ctx.log.back().find(":wide") == std::string::npos) {
      // confined to four disagreement columns with moves of degree <= 3
      const std::set<int> cols(before.h.disagreement_columns.begin(), before.h.disagreement_columns.begin() + 4);
      EXPECT_LE(st.trace.max_degree, 3);
      for (auto& s : st.trace.steps)
        for (int c : s.move.columns_touched()) EXPECT_TRUE(cols.count(c)) << "column " << c;
    }
  }
  EXPECT_GE(classes.size(), 2u);
}

TEST(HammingStages, ThreeDropsToTwo) {
  const auto pairs = sample_pairs(6, 7, 6, 40, [](int k) { return k == 3; });
  ASSERT_GE(pairs.size(), 20u);
  for (auto& [t0, t1] : pairs) {
    PairState st(t0, t1);
    ReduceContext ctx;
    EXPECT_EQ(disagreement_class(st.pinned().h.disagreement), "abc");
    ASSERT_TRUE(reduce_hamming_3(st, ctx));
    const auto res = st.residual();
    EXPECT_TRUE(res.a.size() < residual_rows(t0.rows(), t1.rows()).first.size() || min_distance(res.a, res.b) <= 2);
    expect_valid(t0, t1, st.trace, false);
  }
}

TEST(HammingStages, TwoProducesSharedRowInEveryCase) {
  const auto pairs = sample_pairs(7, 7, 6, 400, [](int k) { return k == 2; });
  ASSERT_GE(pairs.size(), 200u);
  std::map<std::string, int> seen;
  for (auto& [t0, t1] : pairs) {
    PairState st(t0, t1);
    ReduceContext ctx;
    const int deg = st.residual_degree();
    const auto label = case_label(st);
    ++seen[label];
    ASSERT_TRUE(reduce_hamming_2(st, ctx)) << label;
    EXPECT_LT(st.residual_degree(), deg) << label;
    expect_valid(t0, t1, st.trace, false);
  }
  for (auto l : {"Case I", "Case II", "Lemma(if w,z=b,c)"}) EXPECT_GT(seen[l], 0) << l;
}

TEST(HammingStages, PreconditionsRejected) {
  PairState st(Table::parse({"aa0", "0bb", "c0c"}), Table::parse({"000", "cab", "abc"}));
  ASSERT_EQ(st.pinned().h.distance, 2);
  ReduceContext ctx;
  EXPECT_THROW(reduce_hamming_ge4(st, ctx), std::invalid_argument);
  EXPECT_THROW(reduce_hamming_3(st, ctx), std::invalid_argument);
  EXPECT_NO_THROW(case_label(st));
  PairState far(Table::parse({"0000", "aabb", "bbcc", "ccaa", "0000"}), Table::parse({"aabb", "0000", "bbcc", "ccaa", "0000"}));
  EXPECT_THROW(far.pinned(), std::logic_error);
}

TEST(HammingStages, MonotoneProgress) {
  const auto pairs = sample_pairs(8, 9, 6, 15, [](int k) { return k >= 3; });
  ASSERT_GE(pairs.size(), 5u);
  for (auto& [t0, t1] : pairs) {
    PairState st(t0, t1);
    ReduceContext ctx;
    int k = st.pinned().h.distance;
    while (st.residual_degree() > kMoveBound && k >= 3) {
      const int deg = st.residual_degree();
      ASSERT_TRUE(k >= 4 ? reduce_hamming_ge4(st, ctx) : reduce_hamming_3(st, ctx));
      if (st.residual_degree() > kMoveBound) {
        const int k2 = st.pinned().h.distance;
        if (st.residual_degree() == deg) {
          EXPECT_LT(k2, k);
        }
        k = k2;
      } else {
        break;
      }
    }
    expect_valid(t0, t1, st.trace, false);
  }
}

TEST(MergeColumns, ZeroEndingsLiftTrivially) {
  const auto t0 = Table::parse({"aa000", "0bb00", "c0c00"});
  const auto t1 = Table::parse({"00000", "cab00", "abc00"});
  const auto m = merge_columns(t0, t1);
  EXPECT_EQ(m.t0, Table::parse({"aa00", "0bb0", "c0c0"}));
  EXPECT_TRUE(compatible(m.t0, m.t1));
  MoveTrace tr;
  tr.push(Side::T0, Move(m.t0.rows(), m.t1.rows()));
  const auto lifted = lift_merged_trace(t0, t1, tr);
  ASSERT_EQ(lifted.size(), 1u);
  EXPECT_EQ(lifted.steps[0].move, Move(t0.rows(), t1.rows()));
  expect_valid(t0, t1, lifted);
}

TEST(MergeColumns, SwappedEndingsNeedOneQuadraticMove) {
  const auto t0 = Table::parse({"a0a0", "0a0a"});
  const auto t1 = Table::parse({"a00a", "0aa0"});
  const auto m = merge_columns(t0, t1);
  EXPECT_EQ(m.t0, m.t1);
  const auto lifted = lift_merged_trace(t0, t1, MoveTrace{});
  ASSERT_EQ(lifted.size(), 1u);
  EXPECT_EQ(lifted.max_degree, 2);
  expect_valid(t0, t1, lifted);
}

TEST(MergeColumns, BadPairRejected) {
  const auto t = Table::parse({"0bac", "0000"});
  EXPECT_THROW(merge_columns(t, t), std::invalid_argument);
  EXPECT_THROW(merge_columns(Table::parse({"aa"}), Table::parse({"aa"})), std::invalid_argument);
}

TEST(MergeColumns, RandomBadPairFreePairsRoundTrip) {
  std::mt19937_64 rng(21);
  int done = 0;
  for (int tries = 0; tries < 200000 && done < 60; ++tries) {
    auto [t0, t1] = random_compatible_pair(rng, 6, 6);
    if (!find_bad_pairs(t0).empty() || !find_bad_pairs(t1).empty()) continue;
    ++done;
    const auto m = merge_columns(t0, t1);
    ASSERT_TRUE(compatible(m.t0, m.t1));
    const auto sub = reduce_pair(m.t0, m.t1);
    ASSERT_TRUE(sub.success);
    const auto lifted = lift_merged_trace(t0, t1, sub.trace);
    expect_valid(t0, t1, lifted);
    EXPECT_LE(lifted.max_degree, std::max(2, sub.trace.max_degree));
  }
  EXPECT_GE(done, 20);
}

TEST(Fallback, StrategyBudgetZeroStillSucceeds) {
  ReduceBudget b;
  b.stage_nodes = 0;
  std::mt19937_64 rng(31);
  std::size_t fallbacks = 0;
  for (int i = 0; i < 20; ++i) {
    auto [t0, t1] = random_compatible_pair(rng, 7, 6);
    const auto r = reduce_pair(t0, t1, b);
    ASSERT_TRUE(r.success) << r.diagnostic;
    expect_valid(t0, t1, r.trace);
    fallbacks += r.fallback_labels.size();
  }
  EXPECT_GT(fallbacks, 0u);
}

TEST(Fallback, ExhaustionReturnsValidPartialTrace) {
  ReduceBudget b;
  b.stage_nodes = 0;
  b.max_nodes = 0;
  b.merge_depth = 0;
  std::mt19937_64 rng(32);
  int failures = 0;
  for (int i = 0; i < 20; ++i) {
    auto [t0, t1] = random_compatible_pair(rng, 7, 6);
    const auto r = reduce_pair(t0, t1, b);
    if (r.success) continue;
    ++failures;
    EXPECT_FALSE(r.diagnostic.empty());
    expect_valid(t0, t1, r.trace, false);
  }
  EXPECT_GT(failures, 0);
}

// Small shapes: the reducer finds a path exactly when BFS over degree <= 4
// moves does (which, by the theorem, is always).
TEST(Oracle, AgreesWithBreadthFirstSearchOnFourLeaves) {
  ReplacementCache cache;
  std::size_t checked = 0;
  for (int d = 2; d <= 4; ++d) {
    std::size_t fibers_seen = 0;
    fibers(
        4, d, FaceSpec{},
        [&](const Fiber& f) {
          if (fibers_seen++ % (d == 4 ? 53 : 1) != 0) return;
          for (std::size_t i = 1; i < f.members.size(); ++i) {
            const auto r = reduce_pair(f.members[0], f.members[i]);
            const auto bfs = reachable(f.members[0], f.members[i], kMoveBound, cache);
            ASSERT_TRUE(bfs.has_value());
            ASSERT_EQ(r.success, *bfs);
            expect_valid(f.members[0], f.members[i], r.trace);
            ++checked;
          }
        },
        true);
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Oracle, AgreesWithBreadthFirstSearchBeyondTheMoveBound) {
  ReplacementCache cache;
  std::mt19937_64 rng(41);
  for (auto [n, d] : {std::pair{3, 5}, {3, 6}, {4, 5}}) {
    for (int i = 0; i < 15; ++i) {
      auto [t0, t1] = random_compatible_pair(rng, n, d);
      const auto r = reduce_pair(t0, t1);
      const auto bfs = reachable(t0, t1, kMoveBound, cache, 200000);
      ASSERT_TRUE(bfs.has_value());
      EXPECT_EQ(r.success, *bfs);
      expect_valid(t0, t1, r.trace);
    }
  }
}

TEST(Fuzz, SevenLeavesSmallRun) {
  const auto rep = run_fuzz(7, 6, 100, 2024);
  EXPECT_TRUE(rep.all_passed());
  EXPECT_EQ(rep.pairs, 100u);
  EXPECT_TRUE(rep.failures.empty());
  EXPECT_LE(rep.max_move_degree, 4);
}

TEST(Fuzz, GeneratorMakesCompatiblePairs) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto [t0, t1] = random_compatible_pair(rng, 7, 6);
    ASSERT_TRUE(compatible(t0, t1));
    EXPECT_EQ(t0.degree(), 6);
  }
  EXPECT_THROW(random_compatible_pair(rng, 1, 3), std::invalid_argument);
}
