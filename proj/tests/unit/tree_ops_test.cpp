#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "sdpforge/error.hpp"
#include "sdpforge/tree_ops.hpp"

using namespace sdpforge;
using sdpforge::testing::load_one;

TEST(TreeOps, BaseDeprel) {
  EXPECT_EQ(base_deprel("nmod:poss"), "nmod");
  EXPECT_EQ(base_deprel("nsubj"), "nsubj");
  EXPECT_EQ(base_deprel(""), "");
}

TEST(TreeOps, ConjPropagationOnListExample) {
  const auto before = load_one("recommender.conllu");
  const auto after = propagate_conj(before);
  EXPECT_TRUE(validate_tree(after).empty());
  // retrieval (12) and analysis (15) move from mining (9) to techniques (6).
  for (std::size_t pos : {11u, 14u}) {
    EXPECT_EQ(after.tokens[pos].head, 6);
    EXPECT_EQ(after.tokens[pos].deprel, "nmod");
  }
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (i == 11 || i == 14) continue;
    EXPECT_EQ(after.tokens[i].head, before.tokens[i].head) << i;
    EXPECT_EQ(after.tokens[i].deprel, before.tokens[i].deprel) << i;
  }
}

TEST(TreeOps, ConjPropagationIsIdempotentAndSkipsRootConjuncts) {
  auto once = propagate_conj(load_one("recommender.conllu"));
  auto twice = propagate_conj(once);
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_EQ(once.tokens[i].head, twice.tokens[i].head);
    EXPECT_EQ(once.tokens[i].deprel, twice.tokens[i].deprel);
  }

  // "Cats and dogs": conj of the root stays where it is.
  auto r = parse_conllu(
      "1\tcats\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tand\t_\t_\t_\t_\t3\tcc\t_\t_\n"
      "3\tdogs\t_\t_\t_\t_\t1\tconj\t_\t_\n\n");
  ASSERT_TRUE(r.ok());
  auto p = propagate_conj(r.sentences[0]);
  EXPECT_EQ(p.tokens[2].head, 1);
  EXPECT_EQ(p.tokens[2].deprel, "conj");
}

TEST(TreeOps, ConjChainsAndSubtypes) {
  // saw -obj-> apples, pears conj:and -> apples, plums conj -> pears.
  auto r = parse_conllu(
      "1\tsaw\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tapples\t_\t_\t_\t_\t1\tobj\t_\t_\n"
      "3\tpears\t_\t_\t_\t_\t2\tconj:and\t_\t_\n"
      "4\tplums\t_\t_\t_\t_\t3\tconj\t_\t_\n\n");
  ASSERT_TRUE(r.ok());
  auto p = propagate_conj(r.sentences[0]);
  for (std::size_t pos : {2u, 3u}) {
    EXPECT_EQ(p.tokens[pos].head, 1);
    EXPECT_EQ(p.tokens[pos].deprel, "obj");
  }
  EXPECT_TRUE(validate_tree(p).empty());
}

TEST(TreeOps, ConjPropagationRejectsInvalidTrees) {
  ParsedSentence s;
  s.tokens.resize(2);
  s.tokens[0] = {1, "a", "_", "_", "_", "_", 2, "dep", "_", "_", "dep"};
  s.tokens[1] = {2, "b", "_", "_", "_", "_", 1, "conj", "_", "_", "conj"};
  try {
    propagate_conj(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidTree);
  }
}

TEST(TreeOps, SpanHead) {
  const auto s = load_one("madsen.conllu");
  EXPECT_EQ(span_head(s, 0, 2), 0u);    // John Madsen
  EXPECT_EQ(span_head(s, 10, 13), 10u); // University of Sydney
  EXPECT_EQ(span_head(s, 5, 8), 7u);    // of Electrical Engineering
  EXPECT_EQ(span_head(s, 1, 3), 1u);    // two tokens headed outside, leftmost wins
  EXPECT_EQ(span_head(s, 3, 4), 3u);
  EXPECT_THROW(span_head(s, 4, 4), Error);
  EXPECT_THROW(span_head(s, 16, 18), Error);
  try {
    span_head(s, 2, 2);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptySpan);
  }
  try {
    span_head(s, 0, 40);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSpanOutOfRange);
  }
}

TEST(TreeOps, ShortestPathOnIntroExamples) {
  const auto top = load_one("countries.conllu");
  auto p = shortest_path(top, span_head(top, 10, 12), span_head(top, 6, 8));
  EXPECT_EQ(p.length(), 1u);
  EXPECT_EQ(path_labels(p), std::vector<std::string>{"nmod"});
  EXPECT_EQ(p.edges[0].direction, Direction::kUp);

  const auto bottom = load_one("madsen.conllu");
  p = shortest_path(bottom, span_head(bottom, 0, 2), span_head(bottom, 10, 13));
  EXPECT_EQ(p.length(), 2u);
  EXPECT_EQ(path_labels(p), (std::vector<std::string>{"appos", "nmod"}));
  EXPECT_EQ(p.edges[0].direction, Direction::kDown);
  EXPECT_EQ(p.edges[0].governor, 0u);
  EXPECT_EQ(p.edges[0].dependent, 4u);
}

TEST(TreeOps, ShortestPathTrivialAndErrors) {
  const auto s = load_one("lfp.conllu");
  EXPECT_EQ(shortest_path(s, 3, 3).length(), 0u);
  try {
    shortest_path(s, 0, 15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIndexOutOfRange);
  }
}

TEST(TreeOps, ShortestPathSymmetry) {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    auto s = sdpforge::testing::random_tree(1 + rng.uniform_index(30), rng);
    std::size_t a = rng.uniform_index(s.size());
    std::size_t b = rng.uniform_index(s.size());
    auto ab = path_labels(shortest_path(s, a, b));
    auto ba = path_labels(shortest_path(s, b, a));
    std::reverse(ba.begin(), ba.end());
    EXPECT_EQ(ab, ba);
  }
}

TEST(TreeOps, ShortestPathMatchesBfsOracle) {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    auto s = sdpforge::testing::random_tree(1 + rng.uniform_index(40), rng);
    std::size_t a = rng.uniform_index(s.size());
    std::size_t b = rng.uniform_index(s.size());
    auto oracle = sdpforge::testing::bfs_path(s, a, b);
    ASSERT_TRUE(oracle.reachable);
    auto p = shortest_path(s, a, b);
    ASSERT_EQ(p.length(), oracle.length);
    EXPECT_EQ(path_labels(p), oracle.labels);
    // Consecutive edges chain from a to b.
    std::size_t at = a;
    for (const auto& e : p.edges) {
      std::size_t from = e.direction == Direction::kUp ? e.dependent : e.governor;
      std::size_t to = e.direction == Direction::kUp ? e.governor : e.dependent;
      EXPECT_EQ(from, at);
      at = to;
    }
    EXPECT_EQ(at, b);
  }
}
