#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kfc/embedding_store.hpp"
#include "kfc/error.hpp"

namespace kfc {

enum class Scope { BetweenKeyframes, FullVideo };
enum class Layout { Interleaved, NarrativesFirst, KeyframesFirst };

constexpr std::string_view scope_name(Scope s) {
  return s == Scope::BetweenKeyframes ? "between" : "full";
}

constexpr std::string_view layout_name(Layout l) {
  switch (l) {
    case Layout::Interleaved: return "interleaved";
    case Layout::NarrativesFirst: return "nar-first";
    case Layout::KeyframesFirst: return "kf-first";
  }
  return "interleaved";
}

inline std::optional<Scope> parse_scope(std::string_view s) {
  if (s == "between") return Scope::BetweenKeyframes;
  if (s == "full") return Scope::FullVideo;
  return std::nullopt;
}

inline std::optional<Layout> parse_layout(std::string_view s) {
  for (auto l : {Layout::Interleaved, Layout::NarrativesFirst, Layout::KeyframesFirst}) {
    if (layout_name(l) == s) return l;
  }
  return std::nullopt;
}

struct PlanItem {
  enum class Kind { Frame, Narrative };
  Kind kind = Kind::Frame;
  std::size_t t = 0;
  std::string text;

  friend bool operator==(const PlanItem&, const PlanItem&) = default;
};

/// Ordered keyframe/narrative sequence. `delta` is empty when no narratives
/// are threaded (zero budget).
struct InterleavePlan {
  std::vector<PlanItem> items;
  Scope scope = Scope::BetweenKeyframes;
  Layout layout = Layout::Interleaved;
  std::optional<std::size_t> delta;
};

inline constexpr std::size_t kDefaultNarrativeBudget = 210;

struct ThreadBudget {
  std::size_t total_narratives = kDefaultNarrativeBudget;
  std::optional<std::size_t> delta;  // minimum stride; raised if it would overshoot the budget
};

namespace detail {

inline void check_keyframes(std::span<const std::size_t> keyframes) {
  if (keyframes.empty()) throw Error(Errc::EmptyKeyframes, "at least one keyframe is required");
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    if (keyframes[i] <= keyframes[i - 1]) {
      throw Error(Errc::DuplicateIndex, "keyframes must be strictly increasing",
                  static_cast<std::int64_t>(keyframes[i]));
    }
  }
}

inline void check_video_length(std::span<const std::size_t> keyframes, Scope scope, std::size_t n) {
  if (scope == Scope::FullVideo && keyframes.back() >= n) {
    throw Error(Errc::IndexOutOfRange, "keyframe beyond video length",
                static_cast<std::int64_t>(keyframes.back()));
  }
}

}  // namespace detail

/// Narrative positions for stride `delta`, ascending. Each gap (y_i, y_{i+1})
/// contributes y_i + m*delta < y_{i+1}; FullVideo adds y_1 - m*delta >= 0 and
/// y_K + m*delta <= n - 1.
inline std::vector<std::size_t> narrative_positions(std::span<const std::size_t> keyframes,
                                                    std::size_t delta, Scope scope,
                                                    std::size_t n = 0) {
  detail::check_keyframes(keyframes);
  detail::check_video_length(keyframes, scope, n);
  if (delta == 0) throw Error(Errc::InvalidSpec, "delta must be at least 1");
  std::vector<std::size_t> out;
  if (scope == Scope::FullVideo) {
    for (std::size_t m = keyframes.front() / delta; m >= 1; --m) out.push_back(keyframes.front() - m * delta);
  }
  for (std::size_t i = 0; i + 1 < keyframes.size(); ++i) {
    for (std::size_t t = keyframes[i] + delta; t < keyframes[i + 1]; t += delta) out.push_back(t);
  }
  if (scope == Scope::FullVideo) {
    for (std::size_t t = keyframes.back() + delta; t < n; t += delta) out.push_back(t);
  }
  return out;
}

/// Closed-form size of narrative_positions.
inline std::size_t narrative_count(std::span<const std::size_t> keyframes, std::size_t delta,
                                   Scope scope, std::size_t n = 0) {
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < keyframes.size(); ++i) {
    count += (keyframes[i + 1] - keyframes[i] - 1) / delta;
  }
  if (scope == Scope::FullVideo) {
    count += keyframes.front() / delta;
    count += (n - 1 - keyframes.back()) / delta;
  }
  return count;
}

/// Smallest stride whose narrative count fits the budget; empty for a zero
/// budget (no narratives at all).
inline std::optional<std::size_t> solve_delta(std::span<const std::size_t> keyframes,
                                              std::size_t budget, Scope scope,
                                              std::size_t n = 0) {
  detail::check_keyframes(keyframes);
  detail::check_video_length(keyframes, scope, n);
  if (budget == 0) return std::nullopt;
  // count is nonincreasing in delta and zero once delta exceeds every span.
  std::size_t lo = 1;
  std::size_t hi = std::max(keyframes.back() + 1, n) + 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (narrative_count(keyframes, mid, scope, n) <= budget) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

/// Threads non-keyframe captions between keyframes at a uniform stride.
/// `n` is the video length in frames and only matters for FullVideo scope.
inline InterleavePlan thread(std::span<const std::size_t> keyframes, const CaptionSet& captions,
                             const ThreadBudget& budget, Scope scope = Scope::BetweenKeyframes,
                             Layout layout = Layout::Interleaved, std::size_t n = 0) {
  detail::check_keyframes(keyframes);
  if (scope == Scope::FullVideo && n == 0) n = keyframes.back() + 1;
  InterleavePlan plan{{}, scope, layout, std::nullopt};

  std::optional<std::size_t> delta = solve_delta(keyframes, budget.total_narratives, scope, n);
  if (delta && budget.delta) {
    if (*budget.delta == 0) throw Error(Errc::InvalidSpec, "delta must be at least 1");
    delta = std::max(*delta, *budget.delta);
  }
  plan.delta = delta;

  std::vector<PlanItem> narratives;
  if (delta) {
    for (std::size_t t : narrative_positions(keyframes, *delta, scope, n)) {
      auto it = captions.find(t);
      if (it == captions.end()) {
        throw Error(Errc::MissingCaption, "no caption for frame", static_cast<std::int64_t>(t));
      }
      narratives.push_back({PlanItem::Kind::Narrative, t, it->second});
    }
  }
  std::vector<PlanItem> frames;
  for (std::size_t y : keyframes) frames.push_back({PlanItem::Kind::Frame, y, {}});

  auto& items = plan.items;
  items.reserve(frames.size() + narratives.size());
  switch (layout) {
    case Layout::Interleaved:
      std::merge(frames.begin(), frames.end(), narratives.begin(), narratives.end(),
                 std::back_inserter(items),
                 [](const PlanItem& a, const PlanItem& b) { return a.t < b.t; });
      break;
    case Layout::NarrativesFirst:
      items = std::move(narratives);
      items.insert(items.end(), frames.begin(), frames.end());
      break;
    case Layout::KeyframesFirst:
      items = std::move(frames);
      items.insert(items.end(), narratives.begin(), narratives.end());
      break;
  }
  return plan;
}

/// Frames render `frame_token` with every "{t}" replaced by the index;
/// narratives render as "[t=<t>] <text>". One line per item.
inline std::string render_plan(const InterleavePlan& plan, std::string_view frame_token) {
  constexpr std::string_view kPlaceholder = "{t}";
  if (frame_token.find(kPlaceholder) == std::string_view::npos) {
    throw Error(Errc::BadTemplate, "frame template needs a {t} placeholder");
  }
  std::string out;
  for (const auto& item : plan.items) {
    const std::string t = std::to_string(item.t);
    if (item.kind == PlanItem::Kind::Frame) {
      std::size_t pos = 0;
      for (std::size_t hit; (hit = frame_token.find(kPlaceholder, pos)) != std::string_view::npos;
           pos = hit + kPlaceholder.size()) {
        out.append(frame_token.substr(pos, hit - pos)).append(t);
      }
      out.append(frame_token.substr(pos));
    } else {
      out.append("[t=").append(t).append("] ").append(item.text);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace kfc
