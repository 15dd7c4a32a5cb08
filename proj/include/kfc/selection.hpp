#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kfc/error.hpp"
#include "kfc/scoring.hpp"

namespace kfc {

enum class SolverKind { Brute, BnB, Greedy, Uniform, TopK, Dpp };

constexpr std::string_view solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::Brute: return "brute";
    case SolverKind::BnB: return "bnb";
    case SolverKind::Greedy: return "greedy";
    case SolverKind::Uniform: return "uniform";
    case SolverKind::TopK: return "topk";
    case SolverKind::Dpp: return "dpp";
  }
  return "unknown";
}

inline std::optional<SolverKind> parse_solver(std::string_view name) {
  for (auto s : {SolverKind::Brute, SolverKind::BnB, SolverKind::Greedy, SolverKind::Uniform,
                 SolverKind::TopK, SolverKind::Dpp}) {
    if (solver_name(s) == name) return s;
  }
  return std::nullopt;
}

struct SolverStats {
  std::uint64_t nodes_explored = 0;
  std::int64_t elapsed_ns = 0;
  bool node_limit_hit = false;
};

/// Keyframe set (strictly increasing) with its objective on the original S.
struct SelectionResult {
  std::vector<std::size_t> indices;
  double objective = 0.0;
  SolverKind solver = SolverKind::Greedy;
  SolverStats stats;
};

inline void check_k(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) {
    throw Error(Errc::KOutOfRange, "k must lie in [1, " + std::to_string(n) + "]",
                static_cast<std::int64_t>(k));
  }
}

/// Sorts `indices`, then scores them on `s`.
inline SelectionResult make_result(const ScoreMatrix& s, std::vector<std::size_t> indices,
                                   SolverKind solver, SolverStats stats = {}) {
  std::sort(indices.begin(), indices.end());
  const double value = objective(s, indices);
  return SelectionResult{std::move(indices), value, solver, stats};
}

/// Most query-relevant frame, lowest index on ties; frame 0 when the matrix
/// carries no relevance vector (every singleton scores 0).
inline std::size_t most_relevant(std::span<const double> relevance) {
  if (relevance.empty()) return 0;
  return static_cast<std::size_t>(std::max_element(relevance.begin(), relevance.end()) -
                                  relevance.begin());
}

class Stopwatch {
 public:
  std::int64_t elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace kfc
