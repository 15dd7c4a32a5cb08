#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kfc/baselines.hpp"
#include "kfc/embedding_store.hpp"
#include "kfc/error.hpp"
#include "kfc/exact_solvers.hpp"
#include "kfc/greedy_solver.hpp"
#include "kfc/parallel.hpp"
#include "kfc/scoring.hpp"
#include "kfc/selection.hpp"

namespace kfc {

struct PlantedSegment {
  std::size_t start = 0;
  std::size_t length = 1;
  double relevance_boost = 1.0;
};

/// Planted-segment instance parameters. Background frames follow a
/// renormalized AR(1) walk on the sphere; planted frames are pulled toward
/// the query by `relevance_boost`.
struct SyntheticSpec {
  std::size_t n_frames = 64;
  std::size_t dim = 16;
  double smoothness_rho = 0.0;
  std::vector<PlantedSegment> planted;
  std::uint64_t seed = 0;
};

struct SyntheticInstance {
  EmbeddingMatrix embeddings;
  QueryVector query;
  std::vector<std::size_t> planted;
};

inline void validate(const SyntheticSpec& spec) {
  if (spec.n_frames < 1) throw Error(Errc::InvalidSpec, "n_frames must be positive");
  if (spec.dim < 2) throw Error(Errc::InvalidSpec, "dim must be at least 2");
  if (!(spec.smoothness_rho >= 0.0 && spec.smoothness_rho < 1.0)) {
    throw Error(Errc::InvalidSpec, "smoothness_rho must lie in [0, 1)");
  }
  std::vector<PlantedSegment> sorted = spec.planted;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& seg = sorted[i];
    if (seg.length == 0 || seg.start + seg.length > spec.n_frames) {
      throw Error(Errc::SegmentOutOfRange, "segment outside the video",
                  static_cast<std::int64_t>(seg.start));
    }
    if (!(seg.relevance_boost > 0.0 && seg.relevance_boost <= 1.0)) {
      throw Error(Errc::InvalidSpec, "relevance_boost must lie in (0, 1]");
    }
    if (i > 0 && sorted[i - 1].start + sorted[i - 1].length > seg.start) {
      throw Error(Errc::OverlappingSegments, "planted segments overlap",
                  static_cast<std::int64_t>(seg.start));
    }
  }
}

namespace detail {

inline void normalize_in_place(std::span<double> v) {
  double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;
}

inline void gaussian_unit(std::mt19937_64& rng, std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out) x = normal(rng);
  normalize_in_place(out);
}

}  // namespace detail

/// Deterministic in `spec.seed`: same spec, same bits.
inline SyntheticInstance synth_instance(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_frames;
  const std::size_t d = spec.dim;
  std::mt19937_64 rng(spec.seed);

  std::vector<double> q(d);
  detail::gaussian_unit(rng, q);

  std::vector<double> frames(n * d);
  std::vector<double> walk(d);
  std::vector<double> noise(d);
  const double rho = spec.smoothness_rho;
  for (std::size_t t = 0; t < n; ++t) {
    detail::gaussian_unit(rng, noise);
    if (t == 0) {
      walk = noise;
    } else {
      for (std::size_t c = 0; c < d; ++c) walk[c] = rho * walk[c] + (1.0 - rho) * noise[c];
      detail::normalize_in_place(walk);
    }
    std::copy(walk.begin(), walk.end(), frames.begin() + static_cast<std::ptrdiff_t>(t * d));
  }

  std::vector<std::size_t> planted;
  for (const auto& seg : spec.planted) {
    const double b = seg.relevance_boost;
    for (std::size_t t = seg.start; t < seg.start + seg.length; ++t) {
      std::span<double> row(frames.data() + t * d, d);
      if (b == 1.0) {
        std::copy(q.begin(), q.end(), row.begin());
      } else {
        for (std::size_t c = 0; c < d; ++c) row[c] = b * q[c] + (1.0 - b) * row[c];
        detail::normalize_in_place(row);
      }
      planted.push_back(t);
    }
  }
  std::sort(planted.begin(), planted.end());
  return {EmbeddingMatrix(n, d, std::move(frames), true), QueryVector(std::move(q), true),
          std::move(planted)};
}

struct MetricsReport {
  double objective = 0.0;
  std::optional<double> optimality_ratio;
  double relevance_recall = 1.0;
  std::size_t min_pairwise_gap = 0;
  double mean_pairwise_gap = 0.0;
  std::int64_t elapsed_ns = 0;
};

/// Gaps are taken between consecutive selected indices; a single keyframe
/// has gap 0.
inline MetricsReport evaluate(const SelectionResult& selection, std::span<const std::size_t> planted,
                              std::optional<double> optimum = std::nullopt) {
  MetricsReport m;
  m.objective = selection.objective;
  m.elapsed_ns = selection.stats.elapsed_ns;
  if (optimum) m.optimality_ratio = selection.objective / *optimum;

  std::vector<std::size_t> idx = selection.indices;
  std::sort(idx.begin(), idx.end());
  if (!planted.empty()) {
    std::set<std::size_t> truth(planted.begin(), planted.end());
    std::size_t hits = 0;
    for (std::size_t i : idx) hits += truth.count(i);
    m.relevance_recall = static_cast<double>(hits) /
                         static_cast<double>(std::min(idx.size(), truth.size()));
  }
  if (idx.size() >= 2) {
    m.min_pairwise_gap = idx[1] - idx[0];
    std::size_t total = 0;
    for (std::size_t i = 1; i < idx.size(); ++i) {
      m.min_pairwise_gap = std::min(m.min_pairwise_gap, idx[i] - idx[i - 1]);
      total += idx[i] - idx[i - 1];
    }
    m.mean_pairwise_gap = static_cast<double>(total) / static_cast<double>(idx.size() - 1);
  }
  return m;
}

/// One solver column in a comparison. Labels accepted by parse_solver_config:
///   brute, bnb[:limit], bnb-gs[:limit] (greedy warm start), greedy,
///   greedy-vanilla, greedy-init, greedy-norefine, uniform, topk, dpp
struct SolverConfig {
  std::string label = "greedy";
  SolverKind kind = SolverKind::Greedy;
  GreedyConfig greedy;
  std::uint64_t node_limit = kDefaultNodeLimit;
  bool greedy_warm_start = false;
  DppKernel dpp_kernel = DppKernel::Similarity;
};

inline SolverConfig parse_solver_config(std::string_view token) {
  SolverConfig cfg;
  cfg.label = std::string(token);
  std::string_view name = token;
  std::optional<std::uint64_t> limit;
  if (auto colon = token.find(':'); colon != std::string_view::npos) {
    name = token.substr(0, colon);
    const std::string digits(token.substr(colon + 1));
    if (digits == "inf") {
      limit = kUnlimitedNodes;
    } else {
      try {
        std::size_t used = 0;
        limit = std::stoull(digits, &used);
        if (used != digits.size()) throw std::invalid_argument(digits);
      } catch (const std::exception&) {
        throw Error(Errc::InvalidSpec, "bad node limit in solver token " + cfg.label);
      }
    }
  }
  if (name == "bnb" || name == "bnb-gs") {
    cfg.kind = SolverKind::BnB;
    cfg.greedy_warm_start = name == "bnb-gs";
    if (limit) cfg.node_limit = *limit;
    return cfg;
  }
  if (limit) throw Error(Errc::InvalidSpec, "only bnb accepts a node limit: " + cfg.label);
  if (name == "greedy-vanilla" || name == "greedy-init" || name == "greedy-norefine") {
    cfg.kind = SolverKind::Greedy;
    const bool preprocess = name == "greedy-norefine";
    cfg.greedy.enable_lowrank = preprocess;
    cfg.greedy.enable_downsample = preprocess;
    cfg.greedy.enable_refine = false;
    cfg.greedy.enable_init = name != "greedy-vanilla";
    return cfg;
  }
  if (auto kind = parse_solver(name)) {
    cfg.kind = *kind;
    return cfg;
  }
  throw Error(Errc::InvalidSpec, "unknown solver " + cfg.label);
}

/// Dispatches one solver on an instance. `s` must be built from (e, q).
inline SelectionResult run_solver(const SolverConfig& cfg, const ScoreMatrix& s,
                                  const EmbeddingMatrix& e, const QueryVector& q, std::size_t k) {
  switch (cfg.kind) {
    case SolverKind::Brute: return brute_force(s, k);
    case SolverKind::BnB: {
      BnbOptions opts;
      opts.node_limit = cfg.node_limit;
      Stopwatch clock;
      if (cfg.greedy_warm_start) opts.warm_start = greedy_select(s, k, cfg.greedy).indices;
      SelectionResult r = branch_and_bound(s, k, opts);
      r.stats.elapsed_ns = clock.elapsed_ns();
      return r;
    }
    case SolverKind::Greedy: return greedy_select(s, k, cfg.greedy);
    case SolverKind::Uniform: return uniform_result(s, k);
    case SolverKind::TopK: return topk_result(s, k);
    case SolverKind::Dpp: return dpp_result(s, e, q, k, cfg.dpp_kernel);
  }
  throw Error(Errc::InvalidSpec, "unhandled solver");
}

struct ComparisonRow {
  std::string solver;
  std::size_t instances = 0;
  double mean_objective = 0.0;
  std::optional<double> mean_optimality_ratio;
  double mean_relevance_recall = 0.0;
  double mean_min_gap = 0.0;
  double mean_mean_gap = 0.0;
  double mean_elapsed_ns = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  /// per_instance[solver][instance], in declaration order.
  std::vector<std::vector<MetricsReport>> per_instance;
};

/// Runs every solver on every instance (instances may run in parallel) and
/// averages the metrics. Rows follow solver declaration order.
inline ComparisonTable compare_solvers(std::span<const SyntheticSpec> batch,
                                       std::span<const SolverConfig> solvers, std::size_t k,
                                       double alpha = kDefaultAlpha, bool with_optimum = false) {
  for (const auto& spec : batch) validate(spec);
  std::vector<std::vector<MetricsReport>> results(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    SyntheticInstance inst = synth_instance(batch[i]);
    ScoreMatrix s = build_score_matrix(inst.embeddings, inst.query, alpha);
    std::optional<double> optimum;
    if (with_optimum) optimum = brute_force(s, k).objective;
    for (const auto& cfg : solvers) {
      SelectionResult r = run_solver(cfg, s, inst.embeddings, inst.query, k);
      results[i].push_back(evaluate(r, inst.planted, optimum));
    }
  });

  ComparisonTable table;
  table.per_instance.assign(solvers.size(), {});
  for (std::size_t c = 0; c < solvers.size(); ++c) {
    ComparisonRow row;
    row.solver = solvers[c].label;
    row.instances = batch.size();
    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const MetricsReport& m = results[i][c];
      table.per_instance[c].push_back(m);
      row.mean_objective += m.objective;
      if (m.optimality_ratio) ratio_sum += *m.optimality_ratio;
      row.mean_relevance_recall += m.relevance_recall;
      row.mean_min_gap += static_cast<double>(m.min_pairwise_gap);
      row.mean_mean_gap += m.mean_pairwise_gap;
      row.mean_elapsed_ns += static_cast<double>(m.elapsed_ns);
    }
    if (!batch.empty()) {
      const auto count = static_cast<double>(batch.size());
      row.mean_objective /= count;
      row.mean_relevance_recall /= count;
      row.mean_min_gap /= count;
      row.mean_mean_gap /= count;
      row.mean_elapsed_ns /= count;
      if (with_optimum) row.mean_optimality_ratio = ratio_sum / count;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// Wall-clock is nondeterministic, so it is only emitted on request.
inline std::string to_csv(const ComparisonTable& table, bool include_timing = false) {
  std::string out =
      "solver,instances,mean_objective,mean_optimality_ratio,mean_relevance_recall,"
      "mean_min_gap,mean_mean_gap";
  if (include_timing) out += ",mean_elapsed_ns";
  out += '\n';
  for (const auto& row : table.rows) {
    out += row.solver + ',' + std::to_string(row.instances) + ',' +
           detail::format_number(row.mean_objective) + ',' +
           (row.mean_optimality_ratio ? detail::format_number(*row.mean_optimality_ratio) : "") +
           ',' + detail::format_number(row.mean_relevance_recall) + ',' +
           detail::format_number(row.mean_min_gap) + ',' + detail::format_number(row.mean_mean_gap);
    if (include_timing) out += ',' + detail::format_number(row.mean_elapsed_ns);
    out += '\n';
  }
  return out;
}

}  // namespace kfc
