#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "kfc/error.hpp"
#include "kfc/parallel.hpp"
#include "kfc/scoring.hpp"
#include "kfc/selection.hpp"

namespace kfc {

inline constexpr std::uint64_t kBruteForceLimit = 100'000'000;
inline constexpr std::uint64_t kDefaultNodeLimit = 40'000;
inline constexpr std::uint64_t kUnlimitedNodes = std::numeric_limits<std::uint64_t>::max();

/// C(n, k), saturating at cap + 1.
inline std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Exact in 128-bit: the running product is itself a binomial coefficient.
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(acc);
}

namespace detail {

inline bool lex_less(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Relative slack separating rounding noise from genuine objective gaps.
inline double objective_slack(double reference) {
  return 1e-9 * std::max(1.0, std::abs(reference));
}

/// Best set seen so far. Candidates are screened with a cheap incremental value
/// and decided on the canonical row-major x^T S x so every solver agrees bitwise.
struct Incumbent {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> set;

  bool empty() const { return set.empty(); }

  bool offer(const Matrix& values, std::span<const std::size_t> candidate, double estimate) {
    if (!empty() && estimate < value - objective_slack(value)) return false;
    const double exact = quadratic_form(values, candidate);
    if (empty() || exact > value || (exact == value && lex_less(candidate, set))) {
      value = exact;
      set.assign(candidate.begin(), candidate.end());
      return true;
    }
    return false;
  }
};

/// p(a, b) = S[a][b] + S[b][a] off the diagonal, S[a][a] on it.
inline Matrix pair_weights(const Matrix& values) {
  Matrix p = values + values.transpose();
  p.diagonal() = values.diagonal();
  return p;
}

}  // namespace detail

/// Exhaustive search over all C(n, k) subsets; ties go to the lexicographically
/// smallest index list. k = 1 returns the most relevant frame.
inline SelectionResult brute_force(const ScoreMatrix& s, std::size_t k) {
  Stopwatch clock;
  const std::size_t n = s.size();
  check_k(k, n);
  if (k == 1) {
    return make_result(s, {most_relevant(s.relevance)}, SolverKind::Brute,
                       {0, clock.elapsed_ns(), false});
  }
  const std::uint64_t space = binomial_capped(n, k, kBruteForceLimit);
  if (space > kBruteForceLimit) {
    throw Error(Errc::SearchSpaceTooLarge,
                "C(" + std::to_string(n) + ", " + std::to_string(k) + ") exceeds 1e8");
  }
  const Matrix p = detail::pair_weights(s.values);

  // One task per leading index; results merge in leading-index order, which is
  // the sequential enumeration order.
  const std::size_t leads = n - k + 1;
  std::vector<detail::Incumbent> best(leads);
  parallel_for(leads, [&](std::size_t lead) {
    std::vector<std::size_t> idx(k);
    std::vector<double> partial(k);
    idx[0] = lead;
    partial[0] = p(lead, lead);
    auto descend = [&](auto&& self, std::size_t depth) -> void {
      if (depth == k) {
        best[lead].offer(s.values, idx, partial[k - 1]);
        return;
      }
      for (std::size_t j = idx[depth - 1] + 1; j + (k - depth) <= n; ++j) {
        double add = p(j, j);
        for (std::size_t a = 0; a < depth; ++a) add += p(idx[a], j);
        idx[depth] = j;
        partial[depth] = partial[depth - 1] + add;
        self(self, depth + 1);
      }
    };
    descend(descend, 1);
  });

  detail::Incumbent merged;
  for (const auto& b : best) {
    if (!b.empty()) merged.offer(s.values, b.set, b.value);
  }
  return SelectionResult{std::move(merged.set), merged.value, SolverKind::Brute,
                         {space, clock.elapsed_ns(), false}};
}

/// Admissible optimistic value of any completion of a partial selection.
///
/// With F fixed and candidate pool C, a completion R (|R| = r) scores
///   obj(F) + sum_{j in R} g_j + sum_{a<b in R} p(a, b),  g_j = S[j][j] + sum_{f in F} p(f, j).
/// Each pair term is split half-and-half between its endpoints, so crediting j
/// with g_j + (sum of its r-1 largest p(j, c), c in C) / 2 and keeping the r
/// largest such credits over-estimates every completion.
class CompletionBound {
 public:
  explicit CompletionBound(const Matrix& values, bool sorted_rows = true)
      : values_(&values), p_(detail::pair_weights(values)) {
    const std::size_t n = static_cast<std::size_t>(values.rows());
    if (!sorted_rows) return;
    order_.resize(n * (n == 0 ? 0 : n - 1));
    for (std::size_t j = 0; j < n; ++j) {
      auto row = std::span<std::uint32_t>(order_).subspan(j * (n - 1), n - 1);
      std::size_t w = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c != j) row[w++] = static_cast<std::uint32_t>(c);
      }
      std::stable_sort(row.begin(), row.end(), [&](std::uint32_t a, std::uint32_t b) {
        return at(j, a) > at(j, b);
      });
    }
  }

  /// `fixed` must be strictly increasing; candidates are the c >= first with
  /// is_candidate(c). Returns -inf when fewer than `remaining` candidates exist.
  template <class IsCandidate>
  double evaluate(std::span<const std::size_t> fixed, std::size_t first, std::size_t remaining,
                  IsCandidate&& is_candidate) const {
    const double base = detail::quadratic_form(*values_, fixed);
    if (remaining == 0) return base;
    const std::size_t n = static_cast<std::size_t>(values_->rows());
    candidates_.clear();
    for (std::size_t c = first; c < n; ++c) {
      if (is_candidate(c)) candidates_.push_back(c);
    }
    if (candidates_.size() < remaining) return -std::numeric_limits<double>::infinity();

    credits_.clear();
    for (std::size_t j : candidates_) {
      double g = at(j, j);
      for (std::size_t f : fixed) g += at(f, j);
      credits_.push_back(g + 0.5 * top_partners(j, first, remaining - 1, is_candidate));
    }
    return base + sum_largest(credits_, remaining);
  }

 private:
  double at(std::size_t a, std::size_t b) const {
    return p_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }

  static double sum_largest(std::vector<double>& v, std::size_t count) {
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count), v.end(),
                      std::greater<>());
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += v[i];
    return acc;
  }

  template <class IsCandidate>
  double top_partners(std::size_t j, std::size_t first, std::size_t count,
                      IsCandidate& is_candidate) const {
    if (count == 0) return 0.0;
    const std::size_t n = static_cast<std::size_t>(values_->rows());
    if (!order_.empty()) {
      double acc = 0.0;
      std::size_t taken = 0;
      for (std::uint32_t c : std::span<const std::uint32_t>(order_).subspan(j * (n - 1), n - 1)) {
        if (c < first || !is_candidate(c)) continue;
        acc += at(j, c);
        if (++taken == count) break;
      }
      return acc;
    }
    scratch_.clear();
    for (std::size_t c : candidates_) {
      if (c != j) scratch_.push_back(at(j, c));
    }
    return sum_largest(scratch_, count);
  }

  const Matrix* values_;
  Matrix p_;
  std::vector<std::uint32_t> order_;
  mutable std::vector<std::size_t> candidates_;
  mutable std::vector<double> credits_;
  mutable std::vector<double> scratch_;
};

/// Optimistic bound on obj(F u R) over completions R drawn from indices
/// >= next_candidate that are not in `fixed_in`.
inline double upper_bound(const ScoreMatrix& s, std::span<const std::size_t> fixed_in,
                          std::size_t next_candidate, std::size_t remaining_slots) {
  std::vector<std::size_t> fixed(fixed_in.begin(), fixed_in.end());
  std::sort(fixed.begin(), fixed.end());
  detail::check_index_set(fixed, s.size());
  CompletionBound bound(s.values, false);
  return bound.evaluate(fixed, next_candidate, remaining_slots, [&](std::size_t c) {
    return !std::binary_search(fixed.begin(), fixed.end(), c);
  });
}

/// Snapshot handed to a B&B observer at every visited node.
struct BnbNode {
  std::span<const std::size_t> fixed;
  std::size_t next = 0;
  std::size_t remaining = 0;
  double bound = 0.0;
  double incumbent = 0.0;
  bool has_incumbent = false;
  bool pruned = false;
  bool leaf = false;
};

struct BnbOptions {
  std::uint64_t node_limit = kDefaultNodeLimit;
  std::optional<std::vector<std::size_t>> warm_start;
  std::function<void(const BnbNode&)> observer;
};

namespace detail {

inline constexpr std::size_t kSortedBoundMaxFrames = 4096;

class BranchAndBound {
 public:
  BranchAndBound(const ScoreMatrix& s, std::size_t k, const BnbOptions& opts)
      : s_(s), k_(k), n_(s.size()), opts_(opts),
        bound_(s.values, n_ <= kSortedBoundMaxFrames) {}

  void seed(std::vector<std::size_t> warm) {
    if (warm.size() != k_) {
      throw Error(Errc::KOutOfRange, "warm start must hold exactly k indices",
                  static_cast<std::int64_t>(warm.size()));
    }
    std::sort(warm.begin(), warm.end());
    check_index_set(warm, n_);
    incumbent_.value = quadratic_form(s_.values, warm);
    incumbent_.set = std::move(warm);
  }

  void run() {
    fixed_.reserve(k_);
    visit(0, k_);
  }

  Incumbent& incumbent() { return incumbent_; }
  std::uint64_t nodes() const { return nodes_; }
  bool limit_hit() const { return limit_hit_; }

 private:
  bool claim_node() {
    if (nodes_ >= opts_.node_limit) {
      limit_hit_ = true;
      return false;
    }
    ++nodes_;
    return true;
  }

  void notify(std::size_t next, std::size_t remaining, double bound, bool pruned, bool leaf) {
    if (!opts_.observer) return;
    opts_.observer(BnbNode{fixed_, next, remaining, bound, incumbent_.value, !incumbent_.empty(),
                           pruned, leaf});
  }

  void visit(std::size_t next, std::size_t remaining) {
    if (!claim_node()) return;
    if (remaining == 0 || n_ - next == remaining) {
      // Leaf, or the only feasible completion takes every remaining index.
      const std::size_t depth = fixed_.size();
      if (remaining > 0) {
        for (std::size_t j = next; j < n_; ++j) fixed_.push_back(j);
      }
      const double value = quadratic_form(s_.values, fixed_);
      incumbent_.offer(s_.values, fixed_, value);
      notify(n_, 0, value, false, true);
      fixed_.resize(depth);
      return;
    }
    const double bound =
        bound_.evaluate(fixed_, next, remaining, [](std::size_t) { return true; });
    const bool pruned = !incumbent_.empty() && bound < incumbent_.value - objective_slack(incumbent_.value);
    notify(next, remaining, bound, pruned, false);
    if (pruned) return;

    fixed_.push_back(next);
    visit(next + 1, remaining - 1);
    fixed_.pop_back();
    if (n_ - next - 1 >= remaining) visit(next + 1, remaining);
  }

  const ScoreMatrix& s_;
  std::size_t k_;
  std::size_t n_;
  const BnbOptions& opts_;
  CompletionBound bound_;
  Incumbent incumbent_;
  std::vector<std::size_t> fixed_;
  std::uint64_t nodes_ = 0;
  bool limit_hit_ = false;
};

}  // namespace detail

/// Depth-first include/exclude search over frames in ascending order, pruning
/// subtrees whose completion bound falls below the incumbent. Leaves are met in
/// lexicographic order, so an unlimited run reproduces brute_force exactly.
/// When the node budget runs out the best incumbent is returned and
/// stats.node_limit_hit is set.
inline SelectionResult branch_and_bound(const ScoreMatrix& s, std::size_t k,
                                        const BnbOptions& opts = {}) {
  Stopwatch clock;
  check_k(k, s.size());
  if (opts.node_limit < 1) throw Error(Errc::KOutOfRange, "node limit must be at least 1");
  if (k == 1) {
    return make_result(s, {most_relevant(s.relevance)}, SolverKind::BnB,
                       {0, clock.elapsed_ns(), false});
  }
  detail::BranchAndBound search(s, k, opts);
  if (opts.warm_start) search.seed(*opts.warm_start);
  search.run();
  auto& best = search.incumbent();
  if (best.empty()) {
    // Budget exhausted before the first leaf: fall back to that leaf, {0..k-1}.
    std::vector<std::size_t> first(k);
    std::iota(first.begin(), first.end(), std::size_t{0});
    best.value = detail::quadratic_form(s.values, first);
    best.set = std::move(first);
  }
  return SelectionResult{std::move(best.set), best.value, SolverKind::BnB,
                         {search.nodes(), clock.elapsed_ns(), search.limit_hit()}};
}

inline SelectionResult branch_and_bound(const ScoreMatrix& s, std::size_t k,
                                        std::uint64_t node_limit,
                                        std::optional<std::vector<std::size_t>> warm_start = {}) {
  BnbOptions opts;
  opts.node_limit = node_limit;
  opts.warm_start = std::move(warm_start);
  return branch_and_bound(s, k, opts);
}

}  // namespace kfc
