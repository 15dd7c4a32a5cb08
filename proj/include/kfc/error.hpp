#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kfc {

enum class Errc {
  // embedding_store
  MalformedHeader,
  TruncatedPayload,
  DimZero,
  ZeroRow,
  DuplicateIndex,
  MalformedLine,
  NegativeIndex,
  IoFailure,
  // scoring
  DimMismatch,
  NotNormalized,
  SameIndex,
  NegativeAlpha,
  IndexOutOfRange,
  RankOutOfRange,
  ResolutionTooSmall,
  InvalidMatrix,
  // solvers
  SearchSpaceTooLarge,
  KOutOfRange,
  KernelNotPSD,
  FrameCapExceeded,
  // narrative_threader
  EmptyKeyframes,
  MissingCaption,
  BadTemplate,
  // harness
  OverlappingSegments,
  SegmentOutOfRange,
  InvalidSpec,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::DimZero: return "DimZero";
    case Errc::ZeroRow: return "ZeroRow";
    case Errc::DuplicateIndex: return "DuplicateIndex";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::NegativeIndex: return "NegativeIndex";
    case Errc::IoFailure: return "IoFailure";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::SameIndex: return "SameIndex";
    case Errc::NegativeAlpha: return "NegativeAlpha";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::RankOutOfRange: return "RankOutOfRange";
    case Errc::ResolutionTooSmall: return "ResolutionTooSmall";
    case Errc::InvalidMatrix: return "InvalidMatrix";
    case Errc::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case Errc::KOutOfRange: return "KOutOfRange";
    case Errc::KernelNotPSD: return "KernelNotPSD";
    case Errc::FrameCapExceeded: return "FrameCapExceeded";
    case Errc::EmptyKeyframes: return "EmptyKeyframes";
    case Errc::MissingCaption: return "MissingCaption";
    case Errc::BadTemplate: return "BadTemplate";
    case Errc::OverlappingSegments: return "OverlappingSegments";
    case Errc::SegmentOutOfRange: return "SegmentOutOfRange";
    case Errc::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

/// Resource guards (combinatorial blow-up, frame cap) are distinguished from
/// data/contract errors so callers can map them to different exit codes.
constexpr bool is_guard(Errc c) {
  return c == Errc::SearchSpaceTooLarge || c == Errc::FrameCapExceeded;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::optional<std::int64_t> detail = std::nullopt)
      : std::runtime_error(format(code, message, detail)), code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }

  /// Offending index / line number / timestamp when the error carries one.
  std::optional<std::int64_t> detail() const noexcept { return detail_; }

 private:
  static std::string format(Errc code, const std::string& message,
                            std::optional<std::int64_t> detail) {
    std::string out(errc_name(code));
    if (detail) out += "(" + std::to_string(*detail) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  Errc code_;
  std::optional<std::int64_t> detail_;
};

}  // namespace kfc
