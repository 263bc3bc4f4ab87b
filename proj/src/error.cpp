#include "sdpforge/error.hpp"

namespace sdpforge {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kNonIntegerHead: return "NonIntegerHead";
    case Errc::kHeadOutOfRange: return "HeadOutOfRange";
    case Errc::kMultipleRoots: return "MultipleRoots";
    case Errc::kNoRoot: return "NoRoot";
    case Errc::kCycleDetected: return "CycleDetected";
    case Errc::kEmptyDeprel: return "EmptyDeprel";
    case Errc::kInvalidTree: return "InvalidTree";
    case Errc::kEmptySpan: return "EmptySpan";
    case Errc::kSpanOutOfRange: return "SpanOutOfRange";
    case Errc::kIndexOutOfRange: return "IndexOutOfRange";
    case Errc::kUnknownAdapter: return "UnknownAdapter";
    case Errc::kSchemaMismatch: return "SchemaMismatch";
    case Errc::kInvariantViolation: return "InvariantViolation";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kTokenMismatch: return "TokenMismatch";
    case Errc::kWrongTableKind: return "WrongTableKind";
    case Errc::kPoolTooSmall: return "PoolTooSmall";
    case Errc::kOverlappingSpans: return "OverlappingSpans";
    case Errc::kInsufficientInstances: return "InsufficientInstances";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kMarkerMissing: return "MarkerMissing";
    case Errc::kLabelOutOfRange: return "LabelOutOfRange";
    case Errc::kNonFiniteLoss: return "NonFiniteLoss";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace sdpforge
