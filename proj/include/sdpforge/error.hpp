#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdpforge {

// Every failure the library can report. Parse-time CoNLL-U problems are also
// returned as data (see conllu.hpp) and reuse the same codes.
enum class Errc {
  kMalformedLine,
  kNonIntegerHead,
  kHeadOutOfRange,
  kMultipleRoots,
  kNoRoot,
  kCycleDetected,
  kEmptyDeprel,
  kInvalidTree,
  kEmptySpan,
  kSpanOutOfRange,
  kIndexOutOfRange,
  kUnknownAdapter,
  kSchemaMismatch,
  kInvariantViolation,
  kLengthMismatch,
  kTokenMismatch,
  kWrongTableKind,
  kPoolTooSmall,
  kOverlappingSpans,
  kInsufficientInstances,
  kEmptyCorpus,
  kMarkerMissing,
  kLabelOutOfRange,
  kNonFiniteLoss,
  kInvalidConfig,
  kIo,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sdpforge
