#include "sdpforge/silver.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdpforge/random.hpp"
#include "sdpforge/tree_ops.hpp"

namespace sdpforge {

namespace {

void require_pool(const std::string& domain, std::size_t have, std::size_t need) {
  if (have < need) {
    throw Error(Errc::kPoolTooSmall,
                "domain " + domain + " has " + std::to_string(have) +
                    " sentences, " + std::to_string(need) + " needed (short by " +
                    std::to_string(need - have) + ")");
  }
}

std::string cap_tag(const SentRef& ref) {
  std::string tag = "cap/";
  tag += ref.file;
  tag += '\x1f';
  tag += ref.sent_id;
  return tag;
}

// Triplets of one sentence after the cap, as instances.
std::vector<InstanceRecord> sentence_instances(const PoolSentence& ps,
                                               std::span<const std::string> whitelist,
                                               std::size_t max_n, std::uint64_t seed) {
  auto triplets = cap_per_sentence(
      extract_triplets(ps.sentence, whitelist, ps.file), max_n, seed);
  std::vector<InstanceRecord> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back(to_instance(t, ps.sentence));
  return out;
}

}  // namespace

DomainPools sample_sentences(const DomainPools& pools, std::size_t n_per_domain,
                             std::uint64_t seed) {
  DomainPools out;
  for (const auto& [domain, pool] : pools) {
    require_pool(domain, pool.size(), n_per_domain);
    Rng rng(derive_seed(seed, "sample/" + domain));
    auto& dst = out[domain];
    dst.reserve(n_per_domain);
    for (std::size_t i : rng.sample_without_replacement(pool.size(), n_per_domain)) {
      dst.push_back(pool[i]);
    }
  }
  return out;
}

TrainHoldout make_holdout(const DomainPools& pools, std::size_t per_domain,
                          std::uint64_t seed) {
  TrainHoldout out;
  for (const auto& [domain, pool] : pools) {
    require_pool(domain, pool.size(), per_domain);
    Rng rng(derive_seed(seed, "holdout/" + domain));
    auto chosen = rng.sample_without_replacement(pool.size(), per_domain);
    std::vector<bool> in_holdout(pool.size(), false);
    for (std::size_t i : chosen) in_holdout[i] = true;
    auto& train = out.train[domain];
    auto& holdout = out.holdout[domain];
    for (std::size_t i : chosen) holdout.push_back(pool[i]);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!in_holdout[i]) train.push_back(pool[i]);
    }
  }
  return out;
}

std::vector<SilverTriplet> extract_triplets(const ParsedSentence& sentence,
                                            std::span<const std::string> whitelist,
                                            std::string_view file) {
  std::vector<SilverTriplet> out;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    auto gov = governor(sentence, i);
    if (!gov) continue;
    std::string_view rel = base_deprel(sentence.tokens[i].deprel);
    if (std::find(whitelist.begin(), whitelist.end(), rel) == whitelist.end()) {
      continue;
    }
    out.push_back({{std::string(file), sentence.sent_id}, std::string(rel), *gov, i,
                   sentence.domain});
  }
  return out;
}

std::vector<SilverTriplet> cap_per_sentence(std::vector<SilverTriplet> triplets,
                                            std::size_t max_n, std::uint64_t seed) {
  if (triplets.size() <= max_n) return triplets;
  Rng rng(derive_seed(seed, cap_tag(triplets.front().sent_ref)));
  auto chosen = rng.sample_without_replacement(triplets.size(), max_n);
  std::sort(chosen.begin(), chosen.end());
  std::vector<SilverTriplet> out;
  out.reserve(max_n);
  for (std::size_t i : chosen) out.push_back(std::move(triplets[i]));
  return out;
}

InstanceRecord to_instance(const SilverTriplet& t, const ParsedSentence& sentence) {
  InstanceRecord r;
  r.tokens = sentence.forms();
  r.e1 = {t.head_index, t.head_index + 1};
  r.e2 = {t.dep_index, t.dep_index + 1};
  r.label = t.deprel;
  r.domain = t.domain;
  r.provenance = SilverProvenance{t.sent_ref.file, t.sent_ref.sent_id, t.deprel,
                                  static_cast<int>(t.head_index + 1),
                                  static_cast<int>(t.dep_index + 1)};
  return r;
}

GoldInstances gold_instances(std::span<const CorpusRecord> corpus,
                             std::optional<std::size_t> max_negatives,
                             std::uint64_t seed) {
  GoldInstances out;
  for (const auto& rec : corpus) {
    auto pairs = candidate_pairs(rec);
    if (max_negatives) pairs = cap_negatives(std::move(pairs), *max_negatives, seed, rec.doc_id);
    for (const auto& p : pairs) {
      const EntitySpan* h = rec.find_entity(p.head_entity);
      const EntitySpan* t = rec.find_entity(p.tail_entity);
      Span e1{h->start, h->end};
      Span e2{t->start, t->end};
      if (e1.overlaps(e2)) {
        ++out.skipped_overlapping;
        continue;
      }
      out.instances.push_back({rec.tokens, e1, e2, p.label, rec.domain,
                               GoldProvenance{rec.doc_id, p.head_entity, p.tail_entity}});
    }
  }
  return out;
}

GenerationResult generate_silver(const DomainPools& pools,
                                 const GenerationConfig& config) {
  DomainPools propagated;
  for (const auto& [domain, pool] : pools) {
    auto& dst = propagated[domain];
    dst.reserve(pool.size());
    for (const auto& ps : pool) {
      dst.push_back({ps.file, propagate_conj(ps.sentence)});
    }
  }
  // Fail before any sampling if the pools cannot cover holdout + sample.
  for (const auto& [domain, pool] : propagated) {
    require_pool(domain, pool.size(), config.per_domain + config.holdout_per_domain);
  }

  GenerationResult result;
  auto split = make_holdout(propagated, config.holdout_per_domain, config.seed);
  result.holdout = std::move(split.holdout);
  result.train_sample = sample_sentences(split.train, config.per_domain, config.seed);

  auto emit = [&](const DomainPools& sample, std::vector<InstanceRecord>& dst) {
    for (const auto& [domain, sentences] : sample) {
      for (const auto& ps : sentences) {
        auto inst = sentence_instances(ps, config.whitelist, config.max_per_sentence,
                                       config.seed);
        std::move(inst.begin(), inst.end(), std::back_inserter(dst));
      }
    }
  };
  emit(result.train_sample, result.train_instances);
  emit(result.holdout, result.holdout_instances);
  return result;
}

std::vector<std::vector<InstanceRecord>> build_manifest(
    const DomainPools& sample, std::span<const std::string> whitelist,
    std::size_t max_per_sentence, std::span<const std::size_t> targets,
    std::uint64_t seed) {
  if (!std::is_sorted(targets.begin(), targets.end())) {
    throw Error(Errc::kInvalidConfig, "sweep sizes must be ascending");
  }
  const std::size_t goal = targets.empty() ? 0 : targets.back();

  struct Cursor {
    const std::vector<PoolSentence>* sentences;
    std::size_t next = 0;
    std::size_t emitted = 0;
  };
  std::vector<std::pair<std::string, Cursor>> cursors;
  for (const auto& [domain, sentences] : sample) {
    cursors.push_back({domain, Cursor{&sentences}});
  }

  std::vector<InstanceRecord> stream;
  while (stream.size() < goal) {
    Cursor* pick = nullptr;
    for (auto& [_, c] : cursors) {
      if (c.next >= c.sentences->size()) continue;
      if (!pick || c.emitted < pick->emitted) pick = &c;
    }
    if (!pick) {
      throw Error(Errc::kInsufficientInstances,
                  "sample yields " + std::to_string(stream.size()) +
                      " instances, largest target is " + std::to_string(goal));
    }
    auto inst = sentence_instances((*pick->sentences)[pick->next++], whitelist,
                                   max_per_sentence, seed);
    pick->emitted += inst.size();
    std::move(inst.begin(), inst.end(), std::back_inserter(stream));
  }

  std::vector<std::vector<InstanceRecord>> lists;
  lists.reserve(targets.size());
  for (std::size_t t : targets) {
    lists.emplace_back(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(t));
  }
  return lists;
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    Manifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("instances").get<std::size_t>(),
                           e.at("file").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kSchemaMismatch, path.string() + ": " + e.what());
  }
}

void Manifest::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    j["entries"].push_back({{"instances", e.instances}, {"file", e.file}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Manifest write_manifest(const std::filesystem::path& dir, std::string_view prefix,
                        std::span<const std::vector<InstanceRecord>> lists,
                        std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Manifest m;
  m.seed = seed;
  for (const auto& list : lists) {
    std::string name = std::string(prefix) + "-" + std::to_string(list.size()) + ".jsonl";
    write_instances(dir / name, list);
    m.entries.push_back({list.size(), name});
  }
  m.write(dir / "manifest.json");
  return m;
}

}  // namespace sdpforge
