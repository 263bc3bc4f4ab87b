#pragma once

// Silver pre-training data: per-domain sentence sampling, whitelist-filtered
// dependency triplets, the per-sentence cap, the evaluation holdout and the
// nested instance manifests used by the data-quantity sweep.
//
// All randomness is drawn from sdpforge::Rng, so a fixed seed gives the same
// sample on every platform. Sub-streams are derived with derive_seed():
//   holdout selection   tag "holdout/<domain>"
//   sentence sampling   tag "sample/<domain>"
//   per-sentence cap    tag "cap/<file>\x1f<sent_id>"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdpforge/conllu.hpp"
#include "sdpforge/corpus.hpp"
#include "sdpforge/instance_io.hpp"

namespace sdpforge {

struct SentRef {
  std::string file;
  std::string sent_id;

  friend bool operator==(const SentRef&, const SentRef&) = default;
  friend auto operator<=>(const SentRef&, const SentRef&) = default;
};

struct PoolSentence {
  std::string file;
  ParsedSentence sentence;

  SentRef ref() const { return {file, sentence.sent_id}; }
};

// domain -> sentences, in pool order.
using DomainPools = std::map<std::string, std::vector<PoolSentence>>;

// Exactly n_per_domain sentences per domain, without replacement, in draw
// order. Throws kPoolTooSmall naming the domain and the shortfall.
DomainPools sample_sentences(const DomainPools& pools, std::size_t n_per_domain,
                             std::uint64_t seed);

struct TrainHoldout {
  DomainPools train;
  DomainPools holdout;
};

// Moves `per_domain` sentences of every domain into the holdout; the train
// side keeps the remaining sentences in their original order.
TrainHoldout make_holdout(const DomainPools& pools, std::size_t per_domain,
                          std::uint64_t seed);

struct SilverTriplet {
  SentRef sent_ref;
  std::string deprel;  // subtype-stripped; the instance label
  std::size_t head_index = 0;  // token positions, 0-based
  std::size_t dep_index = 0;
  std::string domain;

  friend bool operator==(const SilverTriplet&, const SilverTriplet&) = default;
};

// One triplet per edge whose subtype-stripped deprel is whitelisted, ordered
// by dependent. Expects a conj-propagated sentence.
std::vector<SilverTriplet> extract_triplets(const ParsedSentence& sentence,
                                            std::span<const std::string> whitelist,
                                            std::string_view file = "");

// Identity when |triplets| <= max_n, else a uniformly random max_n-subset in
// input order. The draw depends only on (seed, sent_ref of the triplets).
std::vector<SilverTriplet> cap_per_sentence(std::vector<SilverTriplet> triplets,
                                            std::size_t max_n, std::uint64_t seed);

// Governor becomes e1, dependent e2.
InstanceRecord to_instance(const SilverTriplet& triplet,
                           const ParsedSentence& sentence);

// Gold instances for every candidate pair of every record, no-relation
// pairs included (optionally capped per record). Pairs whose entity spans
// overlap cannot be marked and are skipped; their count is returned.
struct GoldInstances {
  std::vector<InstanceRecord> instances;
  std::size_t skipped_overlapping = 0;
};
GoldInstances gold_instances(std::span<const CorpusRecord> corpus,
                             std::optional<std::size_t> max_negatives = std::nullopt,
                             std::uint64_t seed = 0);

struct GenerationConfig {
  std::vector<std::string> whitelist = {"nsubj", "obj", "obl", "nmod", "appos"};
  std::size_t max_per_sentence = 5;
  std::size_t per_domain = 0;
  std::size_t holdout_per_domain = 100;
  std::uint64_t seed = 4012;
};

struct GenerationResult {
  DomainPools train_sample;
  DomainPools holdout;
  // Sentence-major, domains in name order, sentences in draw order.
  std::vector<InstanceRecord> train_instances;
  std::vector<InstanceRecord> holdout_instances;
};

// The full pipeline: conj propagation, holdout, sampling, triplet
// extraction, per-sentence cap and serialization to instances.
GenerationResult generate_silver(const DomainPools& pools,
                                 const GenerationConfig& config);

struct ManifestEntry {
  std::size_t instances = 0;
  std::string file;  // relative to the manifest's directory
};

struct Manifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;

  static Manifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

// Instance streams for each target count. Sentences are consumed domain by
// domain, always from the domain with the fewest instances so far (ties by
// name), so domain totals differ by at most max_per_sentence while every
// domain still has sentences; the last sentence is truncated to hit each
// target exactly. Every list is a prefix of the next. Throws
// kInsufficientInstances when the sample yields fewer than the largest
// target, and kInvalidConfig when targets are not ascending.
std::vector<std::vector<InstanceRecord>> build_manifest(
    const DomainPools& sample, std::span<const std::string> whitelist,
    std::size_t max_per_sentence, std::span<const std::size_t> targets,
    std::uint64_t seed);

// Writes "<prefix>-<count>.jsonl" files and manifest.json into `dir`.
Manifest write_manifest(const std::filesystem::path& dir, std::string_view prefix,
                        std::span<const std::vector<InstanceRecord>> lists,
                        std::uint64_t seed);

}  // namespace sdpforge
