#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "kfc/embedding_store.hpp"
#include "kfc/error.hpp"
#include "kfc/scoring.hpp"
#include "kfc/selection.hpp"

namespace kfc {

/// Center-of-strata stride: floor(m n / k) + floor(n / 2k), m = 0..k-1.
inline std::vector<std::size_t> uniform_select(std::size_t n, std::size_t k) {
  check_k(k, n);
  std::vector<std::size_t> out(k);
  for (std::size_t m = 0; m < k; ++m) out[m] = std::min(n - 1, m * n / k + n / (2 * k));
  return out;
}

/// The k most relevant frames (lowest index wins ties), ascending.
inline std::vector<std::size_t> topk_select(std::span<const double> relevance, std::size_t k) {
  check_k(k, relevance.size());
  std::vector<std::size_t> order(relevance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return relevance[a] > relevance[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

/// Similarity: L_ij = r_i r_j cos(f_i, f_j), the quality/diversity kernel whose
/// 2x2 minors are r_i^2 r_j^2 (1 - cos^2). LiteralEntry places r_i r_j (1 - cos)
/// directly off the diagonal; that matrix is generally indefinite and rewards
/// near-duplicates, so it is kept only for comparison.
enum class DppKernel { Similarity, LiteralEntry };

inline constexpr double kDppJitter = 1e-9;
inline constexpr double kDppPivotTolerance = 1e-6;

/// Relevances are clamped at zero; the diagonal is r_i^2 + jitter.
inline Matrix dpp_kernel(const EmbeddingMatrix& e, const QueryVector& q,
                         DppKernel kind = DppKernel::Similarity) {
  std::vector<double> rel = relevance_scores(e, q);
  for (double& r : rel) r = std::max(r, 0.0);
  const std::size_t n = e.n_frames();
  Matrix l(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v;
      if (i == j) {
        v = rel[i] * rel[i] + kDppJitter;
      } else {
        const double sim = dot(e.row(i), e.row(j));
        v = rel[i] * rel[j] * (kind == DppKernel::Similarity ? sim : 1.0 - sim);
      }
      l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return l;
}

/// Greedy MAP: each step adds the item with the largest conditional variance
/// (the log-determinant gain), maintained by incremental Cholesky rows.
/// Throws KernelNotPSD when the chosen pivot is below -1e-6.
inline std::vector<std::size_t> dpp_greedy_map(const Matrix& kernel, std::size_t k) {
  const auto n = static_cast<std::size_t>(kernel.rows());
  check_k(k, n);
  std::vector<double> gain(n);
  for (std::size_t i = 0; i < n; ++i) gain[i] = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  std::vector<std::vector<double>> chol;  // one row of n entries per selected item
  std::vector<char> taken(n, 0);
  std::vector<std::size_t> picked;

  while (picked.size() < k) {
    std::size_t j = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && (j == n || gain[i] > gain[j])) j = i;
    }
    if (gain[j] < -kDppPivotTolerance) {
      throw Error(Errc::KernelNotPSD, "negative pivot " + std::to_string(gain[j]),
                  static_cast<std::int64_t>(j));
    }
    taken[j] = 1;
    picked.push_back(j);
    if (picked.size() == k) break;

    std::vector<double> row(n, 0.0);
    if (gain[j] > 0.0) {
      const double pivot = std::sqrt(gain[j]);
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        double acc = kernel(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        for (const auto& c : chol) acc -= c[j] * c[i];
        row[i] = acc / pivot;
        gain[i] -= row[i] * row[i];
      }
    }
    row[j] = gain[j] > 0.0 ? std::sqrt(gain[j]) : 0.0;
    chol.push_back(std::move(row));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

inline std::vector<std::size_t> dpp_greedy_select(const EmbeddingMatrix& e, const QueryVector& q,
                                                  std::size_t k,
                                                  DppKernel kind = DppKernel::Similarity) {
  check_k(k, e.n_frames());
  return dpp_greedy_map(dpp_kernel(e, q, kind), k);
}

inline SelectionResult uniform_result(const ScoreMatrix& s, std::size_t k) {
  Stopwatch clock;
  auto idx = uniform_select(s.size(), k);
  return make_result(s, std::move(idx), SolverKind::Uniform, {0, clock.elapsed_ns(), false});
}

inline SelectionResult topk_result(const ScoreMatrix& s, std::size_t k) {
  Stopwatch clock;
  if (s.relevance.size() != s.size()) {
    throw Error(Errc::DimMismatch, "top-k needs the relevance vector of the score matrix");
  }
  auto idx = topk_select(s.relevance, k);
  return make_result(s, std::move(idx), SolverKind::TopK, {0, clock.elapsed_ns(), false});
}

inline SelectionResult dpp_result(const ScoreMatrix& s, const EmbeddingMatrix& e,
                                  const QueryVector& q, std::size_t k,
                                  DppKernel kind = DppKernel::Similarity) {
  Stopwatch clock;
  auto idx = dpp_greedy_select(e, q, k, kind);
  return make_result(s, std::move(idx), SolverKind::Dpp, {0, clock.elapsed_ns(), false});
}

}  // namespace kfc
