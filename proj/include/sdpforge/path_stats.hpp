#pragma once

// Statistics over the shortest dependency paths between gold entity pairs:
// which deprels lie on them, how long they are, and which labels to keep for
// syntactic pre-training.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdpforge/corpus.hpp"

namespace sdpforge {

enum class GroupBy { kDomain, kRelationType, kAll };
enum class TableKind { kLabels, kLengths };
enum class LabelCounting { kPerEdge, kPerPath };

GroupBy parse_group_by(std::string_view name);  // "domain" | "relation" | "all"
std::string_view to_string(GroupBy g);
std::string_view to_string(TableKind k);

// Orders all-digit keys numerically (path lengths) and everything else
// lexicographically, digits first.
struct KeyLess {
  bool operator()(const std::string& a, const std::string& b) const;
};

using KeyCounts = std::map<std::string, std::int64_t, KeyLess>;

struct PathStatsTable {
  TableKind kind = TableKind::kLabels;
  GroupBy group_by = GroupBy::kDomain;
  // group -> key -> count. Keys are deprels or decimal path lengths.
  std::map<std::string, KeyCounts> cells;
  // Number of gold relation observations that contributed.
  std::int64_t total_pairs = 0;

  std::int64_t count(std::string_view group, std::string_view key) const;
  std::int64_t group_sum(std::string_view group) const;
  KeyCounts aggregate() const;

  // Commutative and associative; tables must agree on kind and grouping.
  void merge(const PathStatsTable& other);

  std::string to_tsv() const;  // group, key, count
  std::string to_json() const;
};

// One increment per (gold relation, subtype-stripped deprel on its path).
// Parses are expected to be conj-propagated already.
PathStatsTable label_distribution(std::span<const AlignedSentence> aligned,
                                  GroupBy group_by,
                                  LabelCounting counting = LabelCounting::kPerEdge);

// One increment per gold relation, keyed by its path length.
PathStatsTable length_histogram(std::span<const AlignedSentence> aligned,
                                GroupBy group_by);

struct SelectionPolicy {
  std::optional<std::size_t> top_k;
  std::optional<std::int64_t> min_count;
};

// Labels ranked by count summed over all groups (ties alphabetical), cut by
// top_k and/or min_count. Throws kWrongTableKind for length tables.
std::vector<std::string> select_labels(const PathStatsTable& table,
                                       const SelectionPolicy& policy);

// nsubj, obj, obl, nmod, appos.
const std::vector<std::string>& default_whitelist();

}  // namespace sdpforge
