#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kfc/embedding_store.hpp"
#include "kfc/error.hpp"
#include "kfc/parallel.hpp"

namespace kfc {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Variant { AsymmetricUpper, Symmetric };

constexpr std::string_view variant_name(Variant v) {
  return v == Variant::AsymmetricUpper ? "asymmetric_upper" : "symmetric";
}

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kNormTolerance = 1e-6;

/// Pairwise score matrix plus the relevance vector it was built from.
///
/// `relevance` may be empty for matrices assembled by hand; solvers then treat
/// every singleton as tied. Structural invariants hold for matrices from
/// build_score_matrix and from_values, but not for low_rank_approx output.
struct ScoreMatrix {
  Variant variant = Variant::AsymmetricUpper;
  double alpha = kDefaultAlpha;
  Matrix values;
  std::vector<double> relevance;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }

  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  /// Validates the structural invariants of `variant` exactly.
  static ScoreMatrix from_values(Matrix values, Variant variant, double alpha = kDefaultAlpha,
                                 std::vector<double> relevance = {}) {
    if (values.rows() != values.cols() || values.rows() == 0) {
      throw Error(Errc::InvalidMatrix, "score matrix must be square and nonempty");
    }
    if (alpha < 0) throw Error(Errc::NegativeAlpha, "alpha must be nonnegative");
    if (!relevance.empty() && relevance.size() != static_cast<std::size_t>(values.rows())) {
      throw Error(Errc::DimMismatch, "relevance length differs from matrix size");
    }
    const Eigen::Index n = values.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const bool ok = variant == Variant::AsymmetricUpper
                            ? (i < j || values(i, j) == 0.0)
                            : (i == j ? values(i, j) == 0.0 : values(i, j) == values(j, i));
        if (!ok) {
          throw Error(Errc::InvalidMatrix, std::string("entry violates ") +
                                               std::string(variant_name(variant)) + " structure");
        }
      }
    }
    return ScoreMatrix{variant, alpha, std::move(values), std::move(relevance)};
  }
};

/// Row-major downsampled view: values(a, b) = source(grid[a], grid[b]).
struct DownsampledMatrix {
  std::vector<std::size_t> grid;
  Matrix values;
  std::size_t source_n = 0;
};

inline constexpr std::size_t kDefaultResolution = 128;

namespace detail {

inline void require_normalized(const EmbeddingMatrix& e) {
  if (!e.normalized()) throw Error(Errc::NotNormalized, "embeddings must be row-normalized");
}

inline void require_compatible(const EmbeddingMatrix& e, const QueryVector& q) {
  require_normalized(e);
  if (!q.normalized()) throw Error(Errc::NotNormalized, "query must be normalized");
  if (q.dim() != e.dim()) {
    throw Error(Errc::DimMismatch, "query dim " + std::to_string(q.dim()) +
                                       " != embedding dim " + std::to_string(e.dim()));
  }
}

}  // namespace detail

/// Cosine relevance of each frame to the query.
inline std::vector<double> relevance_scores(const EmbeddingMatrix& e, const QueryVector& q) {
  detail::require_compatible(e, q);
  std::vector<double> out(e.n_frames());
  for (std::size_t i = 0; i < e.n_frames(); ++i) out[i] = dot(e.row(i), q.data());
  return out;
}

/// exp(-cos(f_i, f_j)); lies in [1/e, e] for unit rows.
inline double diversity_score(const EmbeddingMatrix& e, std::size_t i, std::size_t j) {
  detail::require_normalized(e);
  if (i == j) throw Error(Errc::SameIndex, "diversity of a frame with itself", static_cast<std::int64_t>(i));
  if (i >= e.n_frames() || j >= e.n_frames()) {
    throw Error(Errc::IndexOutOfRange, "frame index", static_cast<std::int64_t>(std::max(i, j)));
  }
  return std::exp(-dot(e.row(i), e.row(j)));
}

/// Pairwise score matrix. AsymmetricUpper fills i < j with
/// rel(i) + alpha * exp(-sim(i, j)); Symmetric fills i != j with
/// rel(i) + 2 alpha exp(-sim(i, j)) + rel(j).
inline ScoreMatrix build_score_matrix(const EmbeddingMatrix& e, const QueryVector& q, double alpha,
                                      Variant variant = Variant::AsymmetricUpper) {
  detail::require_compatible(e, q);
  if (alpha < 0) throw Error(Errc::NegativeAlpha, "alpha must be nonnegative");
  const std::size_t n = e.n_frames();
  std::vector<double> rel = relevance_scores(e, q);
  Matrix values = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  // Each cell depends only on its own inputs, so the row split cannot change bits.
  parallel_for(n, [&](std::size_t i) {
    auto row = values.row(static_cast<Eigen::Index>(i));
    const std::size_t first = variant == Variant::AsymmetricUpper ? i + 1 : 0;
    for (std::size_t j = first; j < n; ++j) {
      if (j == i) continue;
      const double fd = std::exp(-dot(e.row(i), e.row(j)));
      row(static_cast<Eigen::Index>(j)) = variant == Variant::AsymmetricUpper
                                              ? rel[i] + alpha * fd
                                              : rel[std::min(i, j)] + 2.0 * alpha * fd +
                                                    rel[std::max(i, j)];
    }
  });
  return ScoreMatrix{variant, alpha, std::move(values), std::move(rel)};
}

namespace detail {

inline void check_index_set(std::span<const std::size_t> indices, std::size_t n) {
  for (std::size_t a = 0; a < indices.size(); ++a) {
    if (indices[a] >= n) {
      throw Error(Errc::IndexOutOfRange, "index beyond matrix", static_cast<std::int64_t>(indices[a]));
    }
    if (a > 0 && indices[a] <= indices[a - 1]) {
      throw Error(Errc::DuplicateIndex, "indices must be strictly increasing",
                  static_cast<std::int64_t>(indices[a]));
    }
  }
}

/// x^T S x summed row-major over the set, without validation.
inline double quadratic_form(const Matrix& values, std::span<const std::size_t> indices) {
  double acc = 0.0;
  for (std::size_t a : indices) {
    for (std::size_t b : indices) acc += values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return acc;
}

}  // namespace detail

/// x^T S x for the indicator of `indices` (strictly increasing). For an upper
/// triangular S this is the sum of S[a][b] over pairs a < b in the set.
inline double objective(const ScoreMatrix& s, std::span<const std::size_t> indices) {
  detail::check_index_set(indices, s.size());
  return detail::quadratic_form(s.values, indices);
}

inline std::size_t default_rank(std::size_t n, double rank_ratio = 0.25) {
  const auto r = static_cast<std::size_t>(std::floor(rank_ratio * static_cast<double>(n)));
  return std::max<std::size_t>(1, r);
}

/// Best rank-r approximation in Frobenius norm, taken on the matrix as stored.
/// The result is dense; triangular or symmetric structure is not restored.
inline ScoreMatrix low_rank_approx(const ScoreMatrix& s, std::size_t r) {
  const std::size_t n = s.size();
  if (r < 1 || r > n) {
    throw Error(Errc::RankOutOfRange, "rank must lie in [1, n]", static_cast<std::int64_t>(r));
  }
  Eigen::MatrixXd dense = s.values;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto rank = static_cast<Eigen::Index>(r);
  Matrix approx = svd.matrixU().leftCols(rank) *
                  svd.singularValues().head(rank).asDiagonal() *
                  svd.matrixV().leftCols(rank).transpose();
  return ScoreMatrix{s.variant, s.alpha, std::move(approx), s.relevance};
}

/// Uniform grid[m] = floor(m * n / T) with T = min(n, target_resolution).
inline std::vector<std::size_t> downsample_grid(std::size_t n, std::size_t target_resolution) {
  if (target_resolution < 2) {
    throw Error(Errc::ResolutionTooSmall, "target resolution must be at least 2",
                static_cast<std::int64_t>(target_resolution));
  }
  const std::size_t t = std::min(n, target_resolution);
  std::vector<std::size_t> grid(t);
  for (std::size_t m = 0; m < t; ++m) grid[m] = m * n / t;
  return grid;
}

inline DownsampledMatrix downsample(const ScoreMatrix& s_r, std::size_t target_resolution) {
  const std::size_t n = s_r.size();
  DownsampledMatrix out{downsample_grid(n, target_resolution), {}, n};
  const auto t = static_cast<Eigen::Index>(out.grid.size());
  out.values.resize(t, t);
  for (Eigen::Index a = 0; a < t; ++a) {
    for (Eigen::Index b = 0; b < t; ++b) {
      out.values(a, b) = s_r(out.grid[static_cast<std::size_t>(a)], out.grid[static_cast<std::size_t>(b)]);
    }
  }
  return out;
}

}  // namespace kfc
