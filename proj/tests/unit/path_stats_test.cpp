#include <gtest/gtest.h>

#include <sstream>

#include "crossre_reference.hpp"
#include "helpers.hpp"
#include "json.hpp"
#include "sdpforge/corpus.hpp"
#include "sdpforge/error.hpp"
#include "sdpforge/path_stats.hpp"
#include "sdpforge/tree_ops.hpp"

using namespace sdpforge;
using sdpforge::testing::data_path;

namespace {

struct MiniCorpus {
  std::vector<CorpusRecord> records;
  std::vector<ParsedSentence> parses;
  std::vector<AlignedSentence> aligned;

  MiniCorpus() {
    records = load_corpus(data_path("corpus.jsonl"), Adapter::kCanonical);
    for (auto& s : read_conllu_file(data_path("parses.conllu")).sentences) {
      parses.push_back(propagate_conj(std::move(s)));
    }
    aligned = align(records, parses);
  }
};

// Sum of counts per (group, key) read back from the TSV emission.
std::map<std::pair<std::string, std::string>, std::int64_t> from_tsv(const std::string& tsv) {
  std::map<std::pair<std::string, std::string>, std::int64_t> out;
  std::istringstream in(tsv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "group\tkey\tcount");
  while (std::getline(in, line)) {
    auto a = line.find('\t');
    auto b = line.find('\t', a + 1);
    out[{line.substr(0, a), line.substr(a + 1, b - a - 1)}] = std::stoll(line.substr(b + 1));
  }
  return out;
}

std::map<std::pair<std::string, std::string>, std::int64_t> from_json(const std::string& text) {
  std::map<std::pair<std::string, std::string>, std::int64_t> out;
  const auto doc = nlohmann::json::parse(text);
  for (const auto& c : doc.at("cells")) {
    out[{c.at("group").get<std::string>(), c.at("key").get<std::string>()}] =
        c.at("count").get<std::int64_t>();
  }
  return out;
}

PathStatsTable reference_label_table() {
  PathStatsTable t;
  t.kind = TableKind::kLabels;
  t.group_by = GroupBy::kRelationType;
  for (const auto& row : reference::kPathLabels) {
    for (std::size_t r = 0; r < reference::kRelationTypes.size(); ++r) {
      if (row.counts[r] > 0) {
        t.cells[std::string(reference::kRelationTypes[r])][std::string(row.label)] =
            row.counts[r];
      }
    }
  }
  return t;
}

}  // namespace

TEST(PathStats, LabelDistributionByDomain) {
  MiniCorpus mc;
  auto t = label_distribution(mc.aligned, GroupBy::kDomain);
  EXPECT_EQ(t.total_pairs, 4);
  EXPECT_EQ(t.count("ai", "appos"), 2);
  EXPECT_EQ(t.count("ai", "nmod"), 1);
  EXPECT_EQ(t.count("ai", "nsubj"), 1);
  EXPECT_EQ(t.count("news", "appos"), 1);
  EXPECT_EQ(t.count("news", "nmod"), 1);
  EXPECT_EQ(t.count("news", "nsubj"), 0);
  EXPECT_EQ(t.group_sum("ai"), 4);
}

TEST(PathStats, LabelDistributionByRelation) {
  MiniCorpus mc;
  auto t = label_distribution(mc.aligned, GroupBy::kRelationType);
  EXPECT_EQ(t.count("named", "appos"), 2);
  EXPECT_EQ(t.count("type-of", "nmod"), 1);
  EXPECT_EQ(t.count("type-of", "nsubj"), 1);
  EXPECT_EQ(t.count("role", "appos"), 1);
  EXPECT_EQ(t.count("role", "nmod"), 1);
}

TEST(PathStats, PerPathCountingDeduplicates) {
  // Two appos edges on one path count twice per edge and once per path.
  auto r = parse_conllu(
      "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tb\t_\t_\t_\t_\t1\tappos\t_\t_\n"
      "3\tc\t_\t_\t_\t_\t2\tappos\t_\t_\n\n");
  ASSERT_TRUE(r.ok());
  std::vector<CorpusRecord> recs{
      {"d", "x", "", {"a", "b", "c"}, {{"E1", 0, 1, "t"}, {"E2", 2, 3, "t"}}, {{"E1", "E2", "r"}}}};
  auto aligned = align(recs, r.sentences);
  EXPECT_EQ(label_distribution(aligned, GroupBy::kAll).count("all", "appos"), 2);
  EXPECT_EQ(label_distribution(aligned, GroupBy::kAll, LabelCounting::kPerPath)
                .count("all", "appos"),
            1);
}

TEST(PathStats, LengthHistogram) {
  MiniCorpus mc;
  auto t = length_histogram(mc.aligned, GroupBy::kDomain);
  EXPECT_EQ(t.count("ai", "1"), 2);
  EXPECT_EQ(t.count("ai", "2"), 1);
  EXPECT_EQ(t.count("news", "2"), 1);
  // Histogram mass equals the number of relation pairs.
  std::int64_t mass = 0;
  for (const auto& [_, n] : t.aggregate()) mass += n;
  EXPECT_EQ(mass, t.total_pairs);
}

TEST(PathStats, NumericKeysSortNumerically) {
  KeyCounts keys{{"10", 1}, {"2", 1}, {"1", 1}, {"nmod", 1}};
  std::vector<std::string> order;
  for (const auto& [k, _] : keys) order.push_back(k);
  EXPECT_EQ(order, (std::vector<std::string>{"1", "2", "10", "nmod"}));
}

TEST(PathStats, TsvAndJsonAgree) {
  MiniCorpus mc;
  for (auto g : {GroupBy::kDomain, GroupBy::kRelationType, GroupBy::kAll}) {
    for (const auto& t : {label_distribution(mc.aligned, g), length_histogram(mc.aligned, g)}) {
      EXPECT_EQ(from_tsv(t.to_tsv()), from_json(t.to_json()));
    }
  }
  PathStatsTable empty;
  EXPECT_EQ(empty.to_tsv(), "group\tkey\tcount\n");
}

TEST(PathStats, MergeAddsCounts) {
  MiniCorpus mc;
  auto a = label_distribution(std::span(mc.aligned).first(1), GroupBy::kDomain);
  auto b = label_distribution(std::span(mc.aligned).subspan(1), GroupBy::kDomain);
  a.merge(b);
  auto whole = label_distribution(mc.aligned, GroupBy::kDomain);
  EXPECT_EQ(a.to_tsv(), whole.to_tsv());
  EXPECT_EQ(a.total_pairs, whole.total_pairs);
  EXPECT_THROW(a.merge(length_histogram(mc.aligned, GroupBy::kDomain)), Error);
}

TEST(PathStats, SelectLabelsOnReferenceCounts) {
  auto t = reference_label_table();
  auto agg = t.aggregate();
  EXPECT_EQ(agg.at("nmod"), 1653);
  EXPECT_EQ(agg.at("nsubj"), 1148);
  EXPECT_EQ(agg.at("obl"), 1086);
  EXPECT_EQ(agg.at("obj"), 815);
  EXPECT_EQ(agg.at("appos"), 623);

  auto top5 = select_labels(t, {5, std::nullopt});
  EXPECT_EQ(top5, (std::vector<std::string>{"nmod", "nsubj", "obl", "obj", "appos"}));
  auto sorted_top = top5;
  auto sorted_default = default_whitelist();
  std::sort(sorted_top.begin(), sorted_top.end());
  std::sort(sorted_default.begin(), sorted_default.end());
  EXPECT_EQ(sorted_top, sorted_default);

  EXPECT_EQ(select_labels(t, {std::nullopt, 1000}).size(), 3u);
  EXPECT_EQ(select_labels(t, {0, std::nullopt}).size(), 0u);
}

TEST(PathStats, SelectLabelsTiesAndWrongKind) {
  PathStatsTable t;
  t.cells["g"] = {{"b", 3}, {"a", 3}, {"c", 5}};
  EXPECT_EQ(select_labels(t, {}), (std::vector<std::string>{"c", "a", "b"}));
  t.kind = TableKind::kLengths;
  try {
    select_labels(t, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kWrongTableKind);
  }
  EXPECT_EQ(parse_group_by("relation"), GroupBy::kRelationType);
  EXPECT_THROW(parse_group_by("nope"), Error);
}
