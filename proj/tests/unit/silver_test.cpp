#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "helpers.hpp"
#include "sdpforge/error.hpp"
#include "sdpforge/path_stats.hpp"
#include "sdpforge/silver.hpp"
#include "sdpforge/tree_ops.hpp"

using namespace sdpforge;
using sdpforge::testing::load_one;

namespace {

DomainPools random_pools(std::size_t per_domain, std::uint64_t seed) {
  Rng rng(seed);
  DomainPools pools;
  for (std::string domain : {"ai", "music", "news"}) {
    for (std::size_t i = 0; i < per_domain; ++i) {
      auto s = sdpforge::testing::random_tree(2 + rng.uniform_index(25), rng);
      s.sent_id = domain + "-" + std::to_string(i);
      s.domain = domain;
      pools[domain].push_back({domain + ".conllu", s});
    }
  }
  return pools;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kIo;
}

}  // namespace

TEST(Silver, LfpTripletsMatchTheWorkedExample) {
  const auto s = propagate_conj(load_one("lfp.conllu"));
  auto triplets = extract_triplets(s, default_whitelist(), "lfp.conllu");
  ASSERT_EQ(triplets.size(), 4u);
  // (label, governor form, dependent form)
  std::set<std::tuple<std::string, std::string, std::string>> got, want{
      {"appos", "programming", "LFP"},
      {"nsubj", "generalization", "programming"},
      {"nmod", "generalization", "programming"},
      {"appos", "programming", "LP"}};
  for (const auto& t : triplets) {
    got.insert({t.deprel, s.tokens[t.head_index].form, s.tokens[t.dep_index].form});
    EXPECT_EQ(t.domain, "ai");
    EXPECT_EQ(t.sent_ref, (SentRef{"lfp.conllu", "lfp"}));
  }
  EXPECT_EQ(got, want);
  EXPECT_EQ(triplets[0].dep_index, 1u);
  EXPECT_EQ(triplets[3].dep_index, 12u);
}

TEST(Silver, SubtypesAreStrippedForTheWhitelist) {
  auto r = parse_conllu(
      "1\this\t_\t_\t_\t_\t2\tnmod:poss\t_\t_\n"
      "2\tdog\t_\t_\t_\t_\t3\tnsubj:pass\t_\t_\n"
      "3\twas\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
  ASSERT_TRUE(r.ok());
  auto t = extract_triplets(r.sentences[0], default_whitelist());
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].deprel, "nmod");
  EXPECT_EQ(t[1].deprel, "nsubj");
}

TEST(Silver, ToInstanceUsesGovernorAsFirstEntity) {
  const auto s = load_one("lfp.conllu");
  auto t = extract_triplets(s, default_whitelist(), "lfp.conllu");
  auto inst = to_instance(t[1], s);  // appos(programming, LFP)
  EXPECT_EQ(inst.e1, (Span{1, 2}));
  EXPECT_EQ(inst.e2, (Span{3, 4}));
  EXPECT_EQ(inst.label, "appos");
  EXPECT_EQ(inst.tokens, s.forms());
  const auto& p = std::get<SilverProvenance>(inst.provenance);
  EXPECT_EQ(p.head, 2);
  EXPECT_EQ(p.dep, 4);
  EXPECT_EQ(p.sent_id, "lfp");
}

TEST(Silver, CapPerSentence) {
  std::vector<SilverTriplet> many;
  for (std::size_t i = 0; i < 12; ++i) many.push_back({{"f", "s"}, "nmod", 0, i + 1, "d"});
  auto capped = cap_per_sentence(many, 5, 4012);
  ASSERT_EQ(capped.size(), 5u);
  for (std::size_t i = 1; i < capped.size(); ++i) {
    EXPECT_LT(capped[i - 1].dep_index, capped[i].dep_index);
  }
  EXPECT_EQ(capped, cap_per_sentence(many, 5, 4012));
  auto few = std::vector<SilverTriplet>(many.begin(), many.begin() + 3);
  EXPECT_EQ(cap_per_sentence(few, 5, 1), few);
  EXPECT_TRUE(cap_per_sentence({}, 5, 1).empty());
}

TEST(Silver, SamplingAndHoldout) {
  auto pools = random_pools(50, 1);
  auto sample = sample_sentences(pools, 10, 4012);
  for (const auto& [domain, s] : sample) EXPECT_EQ(s.size(), 10u) << domain;
  EXPECT_EQ(sample_sentences(pools, 10, 4012).at("ai")[3].sentence.sent_id,
            sample.at("ai")[3].sentence.sent_id);

  auto split = make_holdout(pools, 20, 4012);
  for (const auto& [domain, pool] : pools) {
    EXPECT_EQ(split.holdout.at(domain).size(), 20u);
    EXPECT_EQ(split.train.at(domain).size(), 30u);
    std::set<std::string> ids;
    for (const auto& ps : split.holdout.at(domain)) ids.insert(ps.sentence.sent_id);
    for (const auto& ps : split.train.at(domain)) {
      EXPECT_FALSE(ids.count(ps.sentence.sent_id));
    }
  }
  EXPECT_EQ(code_of([&] { sample_sentences(pools, 51, 1); }), Errc::kPoolTooSmall);
  EXPECT_EQ(code_of([&] { make_holdout(pools, 51, 1); }), Errc::kPoolTooSmall);
}

TEST(Silver, GenerationContract) {
  auto pools = random_pools(200, 2);
  GenerationConfig cfg;
  cfg.per_domain = 40;
  auto result = generate_silver(pools, cfg);

  std::map<std::pair<std::string, std::string>, std::size_t> per_sentence;
  for (const auto& inst : result.train_instances) {
    const auto& p = std::get<SilverProvenance>(inst.provenance);
    per_sentence[{p.file, p.sent_id}] += 1;
    EXPECT_NE(std::find(cfg.whitelist.begin(), cfg.whitelist.end(), inst.label),
              cfg.whitelist.end());
    EXPECT_EQ(inst.tokens[static_cast<std::size_t>(p.head - 1)], inst.tokens[inst.e1.start]);
  }
  for (const auto& [_, n] : per_sentence) EXPECT_LE(n, 5u);
  std::set<std::string> held, trained;
  for (const auto& [domain, s] : result.train_sample) {
    EXPECT_EQ(s.size(), 40u);
    for (const auto& ps : s) trained.insert(ps.sentence.sent_id);
  }
  for (const auto& [domain, s] : result.holdout) {
    EXPECT_EQ(s.size(), 100u);
    for (const auto& ps : s) held.insert(ps.sentence.sent_id);
  }
  for (const auto& id : trained) EXPECT_FALSE(held.count(id));

  auto again = generate_silver(pools, cfg);
  EXPECT_EQ(serialize_instances(again.train_instances),
            serialize_instances(result.train_instances));
  EXPECT_EQ(serialize_instances(again.holdout_instances),
            serialize_instances(result.holdout_instances));

  cfg.per_domain = 0;
  EXPECT_TRUE(generate_silver(pools, cfg).train_instances.empty());
  cfg.per_domain = 101;
  EXPECT_EQ(code_of([&] { generate_silver(pools, cfg); }), Errc::kPoolTooSmall);
}

TEST(Silver, GoldInstances) {
  auto recs = load_corpus(sdpforge::testing::data_path("corpus.jsonl"), Adapter::kCanonical);
  auto gold = gold_instances(recs);
  EXPECT_EQ(gold.instances.size(), 14u);
  EXPECT_EQ(gold.skipped_overlapping, 0u);
  std::size_t positives = 0;
  for (const auto& g : gold.instances) positives += g.label != "no-relation";
  EXPECT_EQ(positives, 4u);
  EXPECT_EQ(gold_instances(recs, 0).instances.size(), 4u);

  recs[0].entities.push_back({"E5", 0, 3, "field"});
  auto with_overlap = gold_instances(recs);
  EXPECT_GT(with_overlap.skipped_overlapping, 0u);
  for (const auto& g : with_overlap.instances) EXPECT_FALSE(g.e1.overlaps(g.e2));
}

TEST(Silver, ManifestPrefixesAndBalance) {
  auto pools = sample_sentences(random_pools(60, 3), 60, 9);
  std::vector<std::size_t> targets{10, 50, 120};
  auto lists = build_manifest(pools, default_whitelist(), 5, targets, 4012);
  ASSERT_EQ(lists.size(), 3u);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    EXPECT_EQ(lists[i].size(), targets[i]);
    if (i > 0) {
      EXPECT_TRUE(std::equal(lists[i - 1].begin(), lists[i - 1].end(), lists[i].begin()));
    }
  }
  std::map<std::string, std::size_t> by_domain;
  for (const auto& inst : lists.back()) by_domain[inst.domain]++;
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& [_, n] : by_domain) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 5u);
  EXPECT_EQ(by_domain.size(), 3u);

  std::vector<std::size_t> huge{1000000};
  EXPECT_EQ(code_of([&] { build_manifest(pools, default_whitelist(), 5, huge, 1); }),
            Errc::kInsufficientInstances);
  std::vector<std::size_t> unsorted{50, 10};
  EXPECT_EQ(code_of([&] { build_manifest(pools, default_whitelist(), 5, unsorted, 1); }),
            Errc::kInvalidConfig);
}

TEST(Silver, ManifestFiles) {
  auto dir = sdpforge::testing::scratch_dir("manifest");
  auto pools = sample_sentences(random_pools(30, 4), 30, 9);
  std::vector<std::size_t> targets{5, 20};
  auto lists = build_manifest(pools, default_whitelist(), 5, targets, 4012);
  auto m = write_manifest(dir, "silver", lists, 4012);
  auto back = Manifest::read(dir / "manifest.json");
  EXPECT_EQ(back.seed, 4012u);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[1].file, "silver-20.jsonl");
  EXPECT_EQ(read_instances(dir / back.entries[1].file), lists[1]);
}
