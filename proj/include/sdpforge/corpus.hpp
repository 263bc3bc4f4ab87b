#pragma once

// Gold relation-extraction corpora: loading, candidate pairs, alignment with
// parses, and dataset statistics.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdpforge/conllu.hpp"

namespace sdpforge {

inline constexpr std::string_view kNoRelation = "no-relation";

struct EntitySpan {
  std::string id;
  std::size_t start = 0;  // token offsets, end-exclusive
  std::size_t end = 0;
  std::string etype;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct RelationInstance {
  std::string head_entity;
  std::string tail_entity;
  std::string label;

  friend bool operator==(const RelationInstance&,
                         const RelationInstance&) = default;
};

struct CorpusRecord {
  std::string doc_id;
  std::string domain;
  std::string split;  // optional; "" when the source does not say
  std::vector<std::string> tokens;
  std::vector<EntitySpan> entities;
  std::vector<RelationInstance> relations;

  const EntitySpan* find_entity(std::string_view id) const;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

// Throws Error(kInvariantViolation) naming the doc_id: spans in bounds and
// non-empty, entity ids unique, relations reference existing distinct
// entities with a non-empty label, (head, tail) pairs unique.
void validate_record(const CorpusRecord& record);

enum class Adapter { kCanonical, kCrossRe };

// "canonical" | "crossre"; anything else throws kUnknownAdapter.
Adapter parse_adapter(std::string_view name);

// Field mapping from the released CrossRE JSON lines onto CorpusRecord. The
// defaults describe the public release; config/crossre_adapter.json holds the
// same table for review and can be edited and passed back in.
struct CrossReMapping {
  std::string doc_id_field = "doc_key";
  std::string tokens_field = "sentence";
  std::string entities_field = "ner";
  std::size_t entity_start = 0;
  std::size_t entity_end = 1;
  std::size_t entity_type = 2;
  std::string relations_field = "relations";
  std::size_t relation_head_start = 0;
  std::size_t relation_head_end = 1;
  std::size_t relation_tail_start = 2;
  std::size_t relation_tail_end = 3;
  std::size_t relation_label = 4;
  bool end_inclusive = true;
  // Record fields tolerated but not read.
  std::vector<std::string> ignored_fields;
  // Domain and split are taken from file names of the form
  // "<domain>-<split>.json".
  char filename_separator = '-';

  static CrossReMapping from_json_file(const std::filesystem::path& path);
};

// Canonical JSON lines, one CorpusRecord per line. Empty lines are skipped.
// `source` only labels error messages.
std::vector<CorpusRecord> parse_canonical(std::string_view text,
                                          std::string_view source = "<input>");

std::vector<CorpusRecord> parse_crossre(std::string_view text,
                                        std::string_view domain,
                                        std::string_view split,
                                        const CrossReMapping& mapping = {},
                                        std::string_view source = "<input>");

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& file,
                                      Adapter adapter,
                                      const CrossReMapping& mapping = {});

std::string serialize_canonical(std::span<const CorpusRecord> records);

void save_corpus(const std::filesystem::path& file,
                 std::span<const CorpusRecord> records);

struct CandidatePair {
  std::string head_entity;
  std::string tail_entity;
  std::string label;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

// Every ordered pair of distinct entities, ordered by head then tail entity
// position in record.entities. Annotated pairs carry their gold label, the
// rest carry "no-relation".
std::vector<CandidatePair> candidate_pairs(const CorpusRecord& record);

// Optional class-imbalance control: keeps every gold pair and at most
// `max_negatives` no-relation pairs, chosen by a generator seeded from
// (seed, doc_id). Relative order is preserved.
std::vector<CandidatePair> cap_negatives(std::vector<CandidatePair> pairs,
                                         std::size_t max_negatives,
                                         std::uint64_t seed,
                                         std::string_view doc_id);

struct AlignedSentence {
  const CorpusRecord* record;
  const ParsedSentence* parse;
};

// Positional pairing. Throws kLengthMismatch when the sequences differ in
// length and kTokenMismatch (record index and first divergent token) when a
// pair's forms differ.
std::vector<AlignedSentence> align(std::span<const CorpusRecord> corpus,
                                   std::span<const ParsedSentence> parses);

struct SplitCounts {
  std::int64_t sentences = 0;
  std::int64_t relations = 0;

  SplitCounts& operator+=(const SplitCounts& o) {
    sentences += o.sentences;
    relations += o.relations;
    return *this;
  }
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct DatasetStats {
  // (domain, split) -> counts
  std::map<std::pair<std::string, std::string>, SplitCounts> cells;
  std::map<std::string, std::int64_t> per_relation;

  SplitCounts domain_total(std::string_view domain) const;
  SplitCounts split_total(std::string_view split) const;
  SplitCounts total() const;

  // Columns: domain, split, sentences, relations. Per-domain and per-split
  // totals use "total" in the aggregated column.
  std::string to_tsv() const;
  std::string to_json() const;
};

DatasetStats dataset_stats(std::span<const CorpusRecord> corpus);

}  // namespace sdpforge
