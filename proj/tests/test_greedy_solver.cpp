#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_util.hpp"

namespace kfc {
namespace {

Matrix three_candidates() {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = 5;
  m(0, 2) = 1;
  m(1, 2) = 9;
  return m;
}

TEST(GreedyCore, CumulativeRuleByHand) {
  const Matrix m = three_candidates();
  const std::vector<double> rel{1, 0, 0};
  EXPECT_EQ(greedy_core(m, rel, 1), (std::vector<std::size_t>{0}));
  EXPECT_EQ(greedy_core(m, rel, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(greedy_core(m, rel, 3), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(GreedyCore, PairScoreReadsBothTriangles) {
  Matrix m = three_candidates();
  m(2, 1) = 0.5;
  EXPECT_EQ(pair_score(m, 1, 2), 9.5);
  EXPECT_EQ(pair_score(m, 2, 1), 9.5);
}

TEST(GreedyCore, InitOffStartsAtZeroAndTiesGoLow) {
  const Matrix m = three_candidates();
  EXPECT_EQ(greedy_core(m, std::vector<double>{0, 0, 1}, 2, false), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(greedy_core(m, std::vector<double>{0, 0, 1}, 2, true), (std::vector<std::size_t>{2, 1}));
  const Matrix flat = Matrix::Zero(4, 4);
  EXPECT_EQ(greedy_core(flat, std::vector<double>{0.2, 0.7, 0.7, 0.1}, 3),
            (std::vector<std::size_t>{1, 0, 2}));
}

TEST(GreedyCore, RejectsBadK) {
  EXPECT_THROW(greedy_core(three_candidates(), std::vector<double>{1, 0, 0}, 0), Error);
  EXPECT_THROW(greedy_core(three_candidates(), std::vector<double>{1, 0, 0}, 4), Error);
  EXPECT_THROW(greedy_core(three_candidates(), std::vector<double>{1, 0}, 2), Error);
}

TEST(Refine, ZeroWindowIsIdentity) {
  const ScoreMatrix s = testing::random_instance_matrix(20, 1);
  const std::vector<std::size_t> sel{3, 9, 15};
  EXPECT_EQ(refine(s.values, sel, 0), sel);
}

TEST(Refine, LocallyOptimalUnchanged) {
  Matrix m = Matrix::Constant(10, 10, 1.0);
  const std::vector<std::size_t> sel{1, 4, 8};
  const RefineTrace t = refine_traced(m, sel, 2);
  EXPECT_EQ(t.indices, sel);
  EXPECT_TRUE(t.swaps.empty());
}

TEST(Refine, DominatedColumnIsSwapped) {
  // Frame 6 beats frame 5 against both co-selected frames 2 and 8.
  Matrix m = Matrix::Zero(10, 10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = i + 1; j < 10; ++j) m(i, j) = 1.0;
  }
  m(2, 6) = 3.0;
  m(6, 8) = 3.0;
  const RefineTrace t = refine_traced(m, {2, 5, 8}, 2);
  EXPECT_EQ(t.indices, (std::vector<std::size_t>{2, 6, 8}));
  ASSERT_EQ(t.swaps.size(), 1u);
  EXPECT_EQ(t.swaps[0].position, 1u);
  EXPECT_EQ(t.swaps[0].from, 5u);
  EXPECT_EQ(t.swaps[0].to, 6u);
  EXPECT_EQ(t.swaps[0].score_before, 2.0);
  EXPECT_EQ(t.swaps[0].score_after, 6.0);
}

TEST(Refine, NeverCollidesWithSelectedFrames) {
  Matrix m = Matrix::Zero(6, 6);
  m(0, 3) = 10;  // frame 3 is attractive, but already taken
  const RefineTrace t = refine_traced(m, {0, 2, 3}, 2);
  const std::set<std::size_t> unique(t.indices.begin(), t.indices.end());
  EXPECT_EQ(unique.size(), 3u);
}

TEST(GreedySelect, SmallNUsesIdentityGrid) {
  const ScoreMatrix s = testing::random_instance_matrix(100, 2);
  const GreedyRun run = greedy_run(s, 8);
  ASSERT_EQ(run.grid.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(run.grid[i], i);
}

TEST(GreedySelect, KOneIsMostRelevant) {
  const ScoreMatrix s = testing::random_instance_matrix(50, 3);
  const SelectionResult r = greedy_select(s, 1);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{most_relevant(s.relevance)}));
  EXPECT_EQ(r.objective, 0.0);
}

TEST(GreedySelect, DownsampledPicksComeFromGrid) {
  const ScoreMatrix s = testing::random_instance_matrix(300, 4);
  const GreedyRun run = greedy_run(s, 8);
  ASSERT_EQ(run.grid.size(), 128u);
  const std::set<std::size_t> grid(run.grid.begin(), run.grid.end());
  const std::set<std::size_t> before(run.before_refine.begin(), run.before_refine.end());
  EXPECT_EQ(before.size(), 8u);
  for (std::size_t p : run.before_refine) EXPECT_TRUE(grid.count(p));
}

TEST(GreedySelect, SubsetContractAndSwapMonotonicity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20 + rng() % 300;
    const std::size_t k = 2 + rng() % 8;
    const ScoreMatrix s = testing::random_instance_matrix(n, rng());
    GreedyConfig cfg;
    cfg.refine_window_k = 1 + rng() % 4;
    const GreedyRun run = greedy_run(s, k, cfg);
    const auto& idx = run.result.indices;
    ASSERT_EQ(idx.size(), k);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), k);
    EXPECT_LT(idx.back(), n);
    EXPECT_LE(run.swaps.size(), k);
    for (const RefineSwap& sw : run.swaps) {
      EXPECT_GT(sw.score_after, sw.score_before);
      EXPECT_LE(sw.to > sw.from ? sw.to - sw.from : sw.from - sw.to, cfg.refine_window_k);
    }
    EXPECT_EQ(run.result.objective, objective(s, idx));
  }
}

TEST(GreedySelect, Deterministic) {
  const ScoreMatrix s = testing::random_instance_matrix(400, 6);
  const SelectionResult a = greedy_select(s, 8);
  const SelectionResult b = greedy_select(s, 8);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(GreedySelect, EndToEndMatchesPrebuiltMatrix) {
  SyntheticSpec spec;
  spec.n_frames = 90;
  spec.dim = 24;
  spec.seed = 7;
  const SyntheticInstance inst = synth_instance(spec);
  const ScoreMatrix s = build_score_matrix(inst.embeddings, inst.query, 1.0);
  EXPECT_EQ(greedy_select(inst.embeddings, inst.query, 1.0, 6).indices, greedy_select(s, 6).indices);
}

TEST(GreedySelect, RejectsBadRankRatio) {
  const ScoreMatrix s = testing::random_instance_matrix(30, 8);
  GreedyConfig cfg;
  cfg.rank_ratio = 0.0;
  EXPECT_THROW(greedy_select(s, 4, cfg), Error);
  cfg.rank_ratio = 1.5;
  EXPECT_THROW(greedy_select(s, 4, cfg), Error);
}

TEST(GreedySelect, BeatsBaselinesOnAverage) {
  double greedy = 0, uniform = 0, topk = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ScoreMatrix s = testing::random_instance_matrix(64, 1000 + seed, 1.0,
                                                          Variant::AsymmetricUpper, 32, 0.9);
    greedy += greedy_select(s, 4).objective;
    uniform += uniform_result(s, 4).objective;
    topk += topk_result(s, 4).objective;
  }
  EXPECT_GE(greedy, uniform);
  EXPECT_GE(greedy, topk);
}

}  // namespace
}  // namespace kfc
