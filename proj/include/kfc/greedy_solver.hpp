#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "kfc/error.hpp"
#include "kfc/scoring.hpp"
#include "kfc/selection.hpp"

namespace kfc {

/// Defaults: rank n/4, 128x128 grid, refinement over +/-2 frames.
/// The enable_* flags switch individual stages off for ablations; with
/// enable_init off the search starts from candidate 0 instead of the most
/// relevant frame.
struct GreedyConfig {
  double rank_ratio = 0.25;
  std::size_t target_resolution = kDefaultResolution;
  std::size_t refine_window_k = 2;
  bool enable_lowrank = true;
  bool enable_downsample = true;
  bool enable_refine = true;
  bool enable_init = true;
};

/// Order-free pair lookup: both triangles of `m` contribute.
inline double pair_score(const Matrix& m, std::size_t a, std::size_t b) {
  const auto lo = static_cast<Eigen::Index>(std::min(a, b));
  const auto hi = static_cast<Eigen::Index>(std::max(a, b));
  return m(lo, hi) + m(hi, lo);
}

/// Cumulative-score greedy over the rows of `m`. Starts from the most relevant
/// candidate (or candidate 0 when `init` is false), then repeatedly adds the
/// candidate with the largest summed pair score against the current set.
/// Returns candidate positions in acquisition order; ties go to the lowest.
inline std::vector<std::size_t> greedy_core(const Matrix& m, std::span<const double> relevance,
                                            std::size_t k, bool init = true) {
  const auto t = static_cast<std::size_t>(m.rows());
  check_k(k, t);
  if (!relevance.empty() && relevance.size() != t) {
    throw Error(Errc::DimMismatch, "relevance length differs from candidate count");
  }
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::vector<char> taken(t, 0);
  std::vector<double> cumulative(t, 0.0);

  auto take = [&](std::size_t y) {
    picked.push_back(y);
    taken[y] = 1;
    for (std::size_t j = 0; j < t; ++j) {
      if (!taken[j]) cumulative[j] += pair_score(m, y, j);
    }
  };

  take(init ? most_relevant(relevance) : 0);
  while (picked.size() < k) {
    std::size_t best = t;
    for (std::size_t j = 0; j < t; ++j) {
      if (taken[j]) continue;
      if (best == t || cumulative[j] > cumulative[best]) best = j;
    }
    take(best);
  }
  return picked;
}

/// Greedy over a downsampled grid, seeded by the full-resolution relevance
/// restricted to grid members. Returns grid positions.
inline std::vector<std::size_t> greedy_core(const DownsampledMatrix& d,
                                            std::span<const double> full_relevance, std::size_t k,
                                            bool init = true) {
  std::vector<double> on_grid;
  if (!full_relevance.empty()) {
    on_grid.reserve(d.grid.size());
    for (std::size_t g : d.grid) on_grid.push_back(full_relevance[g]);
  }
  return greedy_core(d.values, on_grid, k, init);
}

struct RefineSwap {
  std::size_t position = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  double score_before = 0.0;
  double score_after = 0.0;
};

struct RefineTrace {
  std::vector<std::size_t> indices;
  std::vector<RefineSwap> swaps;
};

/// One in-order pass: each selected frame may move to a frame within
/// +/-k_window (not already selected) whose summed pair score against the
/// other selected frames under `s_r` is strictly higher.
inline RefineTrace refine_traced(const Matrix& s_r, std::vector<std::size_t> selection,
                                 std::size_t k_window) {
  const auto n = static_cast<std::size_t>(s_r.rows());
  RefineTrace trace;
  auto score_against_others = [&](std::size_t position, std::size_t candidate) {
    double acc = 0.0;
    for (std::size_t o = 0; o < selection.size(); ++o) {
      if (o != position) acc += pair_score(s_r, selection[o], candidate);
    }
    return acc;
  };
  auto selected_elsewhere = [&](std::size_t position, std::size_t candidate) {
    for (std::size_t o = 0; o < selection.size(); ++o) {
      if (o != position && selection[o] == candidate) return true;
    }
    return false;
  };

  for (std::size_t i = 0; i < selection.size() && k_window > 0; ++i) {
    const std::size_t current = selection[i];
    const double current_score = score_against_others(i, current);
    std::size_t best = current;
    double best_score = current_score;
    const std::size_t lo = current >= k_window ? current - k_window : 0;
    const std::size_t hi = std::min(n - 1, current + k_window);
    for (std::size_t c = lo; c <= hi; ++c) {
      if (c == current || selected_elsewhere(i, c)) continue;
      const double score = score_against_others(i, c);
      if (score > best_score) {
        best = c;
        best_score = score;
      }
    }
    if (best != current) {
      selection[i] = best;
      trace.swaps.push_back({i, current, best, current_score, best_score});
    }
  }
  trace.indices = std::move(selection);
  return trace;
}

inline std::vector<std::size_t> refine(const Matrix& s_r, std::vector<std::size_t> selection,
                                       std::size_t k_window) {
  return refine_traced(s_r, std::move(selection), k_window).indices;
}

/// Everything greedy_select produced, stage by stage, for inspection.
struct GreedyRun {
  SelectionResult result;
  std::vector<std::size_t> grid;
  std::vector<std::size_t> before_refine;
  std::vector<RefineSwap> swaps;
};

/// Search stage on a prebuilt score matrix: optional low-rank denoising,
/// optional downsampling, greedy on the candidate grid, optional refinement
/// on the denoised matrix. The objective is reported on `s` itself.
inline GreedyRun greedy_run(const ScoreMatrix& s, std::size_t k, const GreedyConfig& cfg = {}) {
  Stopwatch clock;
  const std::size_t n = s.size();
  check_k(k, n);
  if (!(cfg.rank_ratio > 0.0 && cfg.rank_ratio <= 1.0)) {
    throw Error(Errc::RankOutOfRange, "rank ratio must lie in (0, 1]");
  }
  GreedyRun run;
  if (k == 1) {
    run.before_refine = {most_relevant(s.relevance)};
    run.result = make_result(s, run.before_refine, SolverKind::Greedy, {0, clock.elapsed_ns(), false});
    return run;
  }

  ScoreMatrix denoised;
  if (cfg.enable_lowrank) denoised = low_rank_approx(s, default_rank(n, cfg.rank_ratio));
  const Matrix& s_r = cfg.enable_lowrank ? denoised.values : s.values;

  std::vector<std::size_t> picked;
  if (cfg.enable_downsample) {
    DownsampledMatrix d = downsample(cfg.enable_lowrank ? denoised : s, cfg.target_resolution);
    picked = greedy_core(d, s.relevance, k, cfg.enable_init);
    for (auto& p : picked) p = d.grid[p];
    run.grid = std::move(d.grid);
  } else {
    picked = greedy_core(s_r, s.relevance, k, cfg.enable_init);
    run.grid.resize(n);
    std::iota(run.grid.begin(), run.grid.end(), std::size_t{0});
  }
  run.before_refine = picked;

  if (cfg.enable_refine) {
    RefineTrace trace = refine_traced(s_r, std::move(picked), cfg.refine_window_k);
    picked = std::move(trace.indices);
    run.swaps = std::move(trace.swaps);
  }
  run.result = make_result(s, std::move(picked), SolverKind::Greedy);
  run.result.stats.elapsed_ns = clock.elapsed_ns();
  return run;
}

inline SelectionResult greedy_select(const ScoreMatrix& s, std::size_t k,
                                     const GreedyConfig& cfg = {}) {
  return greedy_run(s, k, cfg).result;
}

/// End-to-end: builds the asymmetric score matrix, then runs the search stage.
inline SelectionResult greedy_select(const EmbeddingMatrix& e, const QueryVector& q, double alpha,
                                     std::size_t k, const GreedyConfig& cfg = {}) {
  Stopwatch clock;
  ScoreMatrix s = build_score_matrix(e, q, alpha, Variant::AsymmetricUpper);
  SelectionResult result = greedy_select(s, k, cfg);
  result.stats.elapsed_ns = clock.elapsed_ns();
  return result;
}

}  // namespace kfc
