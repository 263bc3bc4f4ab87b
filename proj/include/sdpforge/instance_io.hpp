#pragma once

// Training instances: the JSONL exchange format shared by silver and gold
// data, and entity-marker insertion.
//
// One JSON object per line:
//   {"tokens": [...], "e1": [s, e], "e2": [s, e], "label": "...",
//    "domain": "...", "provenance": {...}}
// Spans are end-exclusive token offsets into the unmarked tokens. Silver
// provenance is {"file", "sent_id", "deprel", "head", "dep"} with head/dep as
// CoNLL-U token IDs; gold provenance is {"doc_id", "head", "tail"} with
// entity ids. schemas/instance.schema.json describes the same format.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sdpforge {

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct SilverProvenance {
  std::string file;
  std::string sent_id;
  std::string deprel;
  int head = 0;  // CoNLL-U IDs
  int dep = 0;

  friend bool operator==(const SilverProvenance&, const SilverProvenance&) = default;
};

struct GoldProvenance {
  std::string doc_id;
  std::string head_entity;
  std::string tail_entity;

  friend bool operator==(const GoldProvenance&, const GoldProvenance&) = default;
};

using Provenance = std::variant<SilverProvenance, GoldProvenance>;

struct InstanceRecord {
  std::vector<std::string> tokens;
  Span e1;
  Span e2;
  std::string label;
  std::string domain;
  Provenance provenance;

  friend bool operator==(const InstanceRecord&, const InstanceRecord&) = default;
};

std::string to_json_line(const InstanceRecord& record);  // no trailing newline
InstanceRecord instance_from_json(std::string_view line,
                                  std::string_view where = "<input>");

std::vector<InstanceRecord> read_instances(const std::filesystem::path& path);
std::string serialize_instances(std::span<const InstanceRecord> records);
void write_instances(const std::filesystem::path& path,
                     std::span<const InstanceRecord> records);

inline constexpr std::string_view kE1Start = "<e1>";
inline constexpr std::string_view kE1End = "</e1>";
inline constexpr std::string_view kE2Start = "<e2>";
inline constexpr std::string_view kE2End = "</e2>";
inline constexpr std::array<std::string_view, 4> kMarkerTokens = {
    kE1Start, kE1End, kE2Start, kE2End};

struct MarkedInstance {
  std::vector<std::string> tokens;
  // Positions of the marker tokens in `tokens`.
  std::size_t e1_start_pos = 0;
  std::size_t e1_end_pos = 0;
  std::size_t e2_start_pos = 0;
  std::size_t e2_end_pos = 0;
  std::string label;
  Provenance provenance;

  std::span<const std::string> e1_tokens() const {
    return {tokens.data() + e1_start_pos + 1, e1_end_pos - e1_start_pos - 1};
  }
  std::span<const std::string> e2_tokens() const {
    return {tokens.data() + e2_start_pos + 1, e2_end_pos - e2_start_pos - 1};
  }
};

// Inserts <e1> </e1> around e1 and <e2> </e2> around e2. The two regions
// keep their surface order, so e2 may come first. Throws kSpanOutOfRange for
// empty or out-of-bounds spans and kOverlappingSpans when they intersect.
MarkedInstance mark_instance(std::span<const std::string> tokens, Span e1,
                             Span e2, std::string label,
                             Provenance provenance = {});

MarkedInstance mark_instance(const InstanceRecord& record);

// The original tokens: `tokens` without the four marker positions.
std::vector<std::string> unmark(const MarkedInstance& instance);

}  // namespace sdpforge
