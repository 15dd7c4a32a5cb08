#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kfc/json_io.hpp"
#include "test_util.hpp"

namespace kfc {
namespace {

using Idx = std::vector<std::size_t>;

SelectionResult selection_of(Idx idx, double objective = 0.0) {
  return SelectionResult{std::move(idx), objective, SolverKind::Greedy, {}};
}

TEST(Synth, IndependentBackgroundAtRhoZero) {
  SyntheticSpec spec;
  spec.n_frames = 1001;
  spec.dim = 64;
  spec.smoothness_rho = 0.0;
  spec.seed = 3;
  const SyntheticInstance inst = synth_instance(spec);
  double mean_abs = 0;
  for (std::size_t t = 0; t + 1 < spec.n_frames; ++t) {
    mean_abs += std::abs(dot(inst.embeddings.row(t), inst.embeddings.row(t + 1)));
  }
  mean_abs /= 1000.0;
  EXPECT_LT(mean_abs, 0.1);
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    EXPECT_NEAR(dot(inst.embeddings.row(t), inst.embeddings.row(t)), 1.0, 1e-12);
  }
}

TEST(Synth, SmoothWalkIsCorrelated) {
  SyntheticSpec spec;
  spec.n_frames = 300;
  spec.dim = 64;
  spec.smoothness_rho = 0.9;
  spec.seed = 4;
  const SyntheticInstance inst = synth_instance(spec);
  double mean = 0;
  for (std::size_t t = 0; t + 1 < spec.n_frames; ++t) mean += dot(inst.embeddings.row(t), inst.embeddings.row(t + 1));
  EXPECT_GT(mean / 299.0, 0.5);
}

TEST(Synth, FullBoostCopiesQuery) {
  SyntheticSpec spec;
  spec.n_frames = 40;
  spec.dim = 8;
  spec.seed = 5;
  spec.planted = {{10, 3, 1.0}, {30, 2, 0.5}};
  const SyntheticInstance inst = synth_instance(spec);
  EXPECT_EQ(inst.planted, (Idx{10, 11, 12, 30, 31}));
  const auto rel = relevance_scores(inst.embeddings, inst.query);
  for (std::size_t t : {10, 11, 12}) {
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(inst.embeddings.row(t)[c], inst.query.data()[c]);
    EXPECT_NEAR(rel[t], 1.0, 1e-12);
  }
  EXPECT_LT(rel[30], 1.0 - 1e-6);
}

TEST(Synth, SameSeedSameBytes) {
  const SyntheticSpec spec = testing::adversarial_spec(9);
  const SyntheticInstance a = synth_instance(spec);
  const SyntheticInstance b = synth_instance(spec);
  EXPECT_TRUE(std::ranges::equal(a.embeddings.data(), b.embeddings.data()));
  EXPECT_EQ(a.query, b.query);
  SyntheticSpec other = spec;
  other.seed = 10;
  EXPECT_FALSE(std::ranges::equal(synth_instance(other).embeddings.data(), a.embeddings.data()));
}

TEST(Synth, SpecValidation) {
  auto code = [](SyntheticSpec spec) {
    try {
      validate(spec);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoFailure;
  };
  SyntheticSpec s;
  s.planted = {{10, 5, 1.0}, {12, 3, 1.0}};
  EXPECT_EQ(code(s), Errc::OverlappingSegments);
  s.planted = {{60, 5, 1.0}};
  EXPECT_EQ(code(s), Errc::SegmentOutOfRange);
  s.planted = {{0, 1, 0.0}};
  EXPECT_EQ(code(s), Errc::InvalidSpec);
  s.planted.clear();
  s.smoothness_rho = 1.0;
  EXPECT_EQ(code(s), Errc::InvalidSpec);
}

TEST(Evaluate, Examples) {
  const Idx planted{5, 6, 7};
  EXPECT_EQ(evaluate(selection_of({5, 6, 7}), planted).relevance_recall, 1.0);
  EXPECT_EQ(evaluate(selection_of({5, 6, 7}), planted).min_pairwise_gap, 1u);
  EXPECT_EQ(evaluate(selection_of({1, 6, 20}), planted).relevance_recall, 1.0 / 3.0);
  EXPECT_EQ(evaluate(selection_of({1, 2, 3, 6}), Idx{6, 7}).relevance_recall, 0.5);
  const MetricsReport gaps = evaluate(selection_of({30, 2, 10}), {});
  EXPECT_EQ(gaps.min_pairwise_gap, 8u);
  EXPECT_EQ(gaps.mean_pairwise_gap, 14.0);

  const ScoreMatrix s = testing::random_instance_matrix(10, 1);
  const SelectionResult best = brute_force(s, 3);
  EXPECT_EQ(evaluate(best, {}, best.objective).optimality_ratio, 1.0);
}

TEST(SolverConfig, Tokens) {
  EXPECT_EQ(parse_solver_config("bnb").node_limit, kDefaultNodeLimit);
  EXPECT_EQ(parse_solver_config("bnb:inf").node_limit, kUnlimitedNodes);
  EXPECT_EQ(parse_solver_config("bnb:500").node_limit, 500u);
  EXPECT_TRUE(parse_solver_config("bnb-gs").greedy_warm_start);
  const SolverConfig vanilla = parse_solver_config("greedy-vanilla");
  EXPECT_FALSE(vanilla.greedy.enable_init || vanilla.greedy.enable_refine ||
               vanilla.greedy.enable_lowrank || vanilla.greedy.enable_downsample);
  EXPECT_TRUE(parse_solver_config("greedy-init").greedy.enable_init);
  EXPECT_EQ(parse_solver_config("dpp").kind, SolverKind::Dpp);
  EXPECT_THROW(parse_solver_config("simplex"), Error);
  EXPECT_THROW(parse_solver_config("bnb:many"), Error);
  EXPECT_THROW(parse_solver_config("greedy:5"), Error);
}

std::vector<SolverConfig> configs(std::initializer_list<const char*> tokens) {
  std::vector<SolverConfig> out;
  for (const char* t : tokens) out.push_back(parse_solver_config(t));
  return out;
}

TEST(Compare, SingleUniformRow) {
  SyntheticSpec spec;
  spec.n_frames = 12;
  spec.seed = 1;
  const std::vector<SyntheticSpec> batch{spec};
  const ComparisonTable t = compare_solvers(batch, configs({"uniform"}), 3, 1.0, true);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].solver, "uniform");
  ASSERT_TRUE(t.rows[0].mean_optimality_ratio);
  EXPECT_LE(*t.rows[0].mean_optimality_ratio, 1.0);
}

TEST(Compare, ExactSolversAgree) {
  std::vector<SyntheticSpec> batch;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    SyntheticSpec spec;
    spec.n_frames = 14;
    spec.dim = 16;
    spec.smoothness_rho = 0.4;
    spec.seed = seed;
    batch.push_back(spec);
  }
  const ComparisonTable t =
      compare_solvers(batch, configs({"brute", "bnb:inf", "greedy", "uniform", "topk", "dpp"}), 4, 1.0, true);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(t.per_instance[0][i].objective, t.per_instance[1][i].objective);
    for (const auto& col : t.per_instance) EXPECT_LE(*col[i].optimality_ratio, 1.0);
  }
  EXPECT_EQ(t.rows[0].mean_optimality_ratio, 1.0);
}

TEST(Compare, TopKCollapsesIntoNarrowCluster) {
  SyntheticSpec spec;
  spec.n_frames = 200;
  spec.dim = 32;
  spec.seed = 2;
  spec.planted = {{80, 3, 1.0}};
  const std::vector<SyntheticSpec> batch{spec};
  const ComparisonTable t = compare_solvers(batch, configs({"topk"}), 8);
  EXPECT_LE(t.per_instance[0][0].min_pairwise_gap, 2u);
}

TEST(Compare, AdversarialSeparation) {
  const std::vector<SyntheticSpec> batch{testing::adversarial_spec(1)};
  const ComparisonTable t = compare_solvers(batch, configs({"greedy", "topk"}), 4);
  EXPECT_GT(t.per_instance[0][0].min_pairwise_gap, t.per_instance[1][0].min_pairwise_gap);
}

TEST(Compare, CsvIsDeterministic) {
  std::vector<SyntheticSpec> batch;
  for (std::uint64_t seed = 0; seed < 6; ++seed) batch.push_back(testing::adversarial_spec(seed));
  const auto solvers = configs({"greedy", "uniform", "topk", "dpp"});
  const std::string a = to_csv(compare_solvers(batch, solvers, 4));
  const std::string b = to_csv(compare_solvers(batch, solvers, 4));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "solver,instances,mean_objective,mean_optimality_ratio,mean_relevance_recall,mean_min_gap,"
            "mean_mean_gap");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 5);
}

TEST(Compare, RejectsBadSpecs) {
  SyntheticSpec bad;
  bad.n_frames = 0;
  const std::vector<SyntheticSpec> batch{bad};
  EXPECT_THROW(compare_solvers(batch, configs({"uniform"}), 1), Error);
}

TEST(Json, SpecRoundTripAndSelection) {
  const SyntheticSpec spec = testing::adversarial_spec(4);
  const SyntheticSpec back = synthetic_spec_from_json(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));
  EXPECT_THROW(synthetic_spec_from_json(json{{"dim", 3}}), Error);

  const ScoreMatrix s = testing::random_instance_matrix(10, 2);
  const SelectionResult r = brute_force(s, 3);
  const json j = to_json(r);
  EXPECT_EQ(selection_indices(j), r.indices);
  EXPECT_EQ(j.at("solver"), "brute");
  EXPECT_EQ(selection_indices(json::array({4, 1})), (Idx{4, 1}));
  EXPECT_THROW(selection_indices(json::array({-1})), Error);
}

}  // namespace
}  // namespace kfc
