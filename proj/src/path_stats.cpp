#include "sdpforge/path_stats.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sdpforge/tree_ops.hpp"

namespace sdpforge {

namespace {

bool is_number(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::string group_of(const CorpusRecord& record, const RelationInstance& rel,
                     GroupBy group_by) {
  switch (group_by) {
    case GroupBy::kDomain: return record.domain;
    case GroupBy::kRelationType: return rel.label;
    case GroupBy::kAll: return "all";
  }
  return {};
}

template <typename Fn>
void for_each_relation_path(std::span<const AlignedSentence> aligned, Fn&& fn) {
  for (const auto& pair : aligned) {
    const CorpusRecord& rec = *pair.record;
    const ParsedSentence& parse = *pair.parse;
    for (const auto& rel : rec.relations) {
      const EntitySpan* head = rec.find_entity(rel.head_entity);
      const EntitySpan* tail = rec.find_entity(rel.tail_entity);
      if (!head || !tail) {
        throw Error(Errc::kInvariantViolation,
                    "doc " + rec.doc_id + ": relation references a missing entity");
      }
      std::size_t a = span_head(parse, head->start, head->end);
      std::size_t b = span_head(parse, tail->start, tail->end);
      fn(rec, rel, shortest_path(parse, a, b));
    }
  }
}

}  // namespace

GroupBy parse_group_by(std::string_view name) {
  if (name == "domain") return GroupBy::kDomain;
  if (name == "relation" || name == "relation_type") return GroupBy::kRelationType;
  if (name == "all") return GroupBy::kAll;
  throw Error(Errc::kInvalidConfig, "unknown grouping '" + std::string(name) + "'");
}

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::kDomain: return "domain";
    case GroupBy::kRelationType: return "relation_type";
    case GroupBy::kAll: return "all";
  }
  return "";
}

std::string_view to_string(TableKind k) {
  return k == TableKind::kLabels ? "labels" : "lengths";
}

bool KeyLess::operator()(const std::string& a, const std::string& b) const {
  bool na = is_number(a), nb = is_number(b);
  if (na && nb) {
    // No leading zeros in generated keys, so length then text orders numerically.
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
  if (na != nb) return na;
  return a < b;
}

std::int64_t PathStatsTable::count(std::string_view group,
                                   std::string_view key) const {
  auto g = cells.find(std::string(group));
  if (g == cells.end()) return 0;
  auto k = g->second.find(std::string(key));
  return k == g->second.end() ? 0 : k->second;
}

std::int64_t PathStatsTable::group_sum(std::string_view group) const {
  auto g = cells.find(std::string(group));
  if (g == cells.end()) return 0;
  std::int64_t sum = 0;
  for (const auto& [_, n] : g->second) sum += n;
  return sum;
}

KeyCounts PathStatsTable::aggregate() const {
  KeyCounts out;
  for (const auto& [_, keys] : cells) {
    for (const auto& [key, n] : keys) out[key] += n;
  }
  return out;
}

void PathStatsTable::merge(const PathStatsTable& other) {
  if (other.kind != kind || other.group_by != group_by) {
    throw Error(Errc::kWrongTableKind, "cannot merge tables of different shape");
  }
  for (const auto& [group, keys] : other.cells) {
    for (const auto& [key, n] : keys) cells[group][key] += n;
  }
  total_pairs += other.total_pairs;
}

std::string PathStatsTable::to_tsv() const {
  std::ostringstream os;
  os << "group\tkey\tcount\n";
  for (const auto& [group, keys] : cells) {
    for (const auto& [key, n] : keys) {
      os << group << '\t' << key << '\t' << n << '\n';
    }
  }
  return os.str();
}

std::string PathStatsTable::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  j["group_by"] = to_string(group_by);
  j["total_pairs"] = total_pairs;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& [group, keys] : cells) {
    for (const auto& [key, n] : keys) {
      j["cells"].push_back({{"group", group}, {"key", key}, {"count", n}});
    }
  }
  return j.dump(2) + "\n";
}

PathStatsTable label_distribution(std::span<const AlignedSentence> aligned,
                                  GroupBy group_by, LabelCounting counting) {
  PathStatsTable table;
  table.kind = TableKind::kLabels;
  table.group_by = group_by;
  for_each_relation_path(aligned, [&](const CorpusRecord& rec,
                                      const RelationInstance& rel,
                                      const DependencyPath& path) {
    auto& row = table.cells[group_of(rec, rel, group_by)];
    auto labels = path_labels(path);
    if (counting == LabelCounting::kPerPath) {
      std::sort(labels.begin(), labels.end());
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    }
    for (const auto& label : labels) row[label] += 1;
    table.total_pairs += 1;
  });
  return table;
}

PathStatsTable length_histogram(std::span<const AlignedSentence> aligned,
                                GroupBy group_by) {
  PathStatsTable table;
  table.kind = TableKind::kLengths;
  table.group_by = group_by;
  for_each_relation_path(aligned, [&](const CorpusRecord& rec,
                                      const RelationInstance& rel,
                                      const DependencyPath& path) {
    table.cells[group_of(rec, rel, group_by)][std::to_string(path.length())] += 1;
    table.total_pairs += 1;
  });
  return table;
}

std::vector<std::string> select_labels(const PathStatsTable& table,
                                       const SelectionPolicy& policy) {
  if (table.kind != TableKind::kLabels) {
    throw Error(Errc::kWrongTableKind, "label selection needs a label table");
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked;
  for (const auto& [label, n] : table.aggregate()) ranked.emplace_back(label, n);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [label, n] : ranked) {
    if (policy.min_count && n < *policy.min_count) break;
    if (policy.top_k && out.size() >= *policy.top_k) break;
    out.push_back(label);
  }
  return out;
}

const std::vector<std::string>& default_whitelist() {
  static const std::vector<std::string> labels = {"nsubj", "obj", "obl", "nmod",
                                                  "appos"};
  return labels;
}

}  // namespace sdpforge
