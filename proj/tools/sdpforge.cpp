#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdpforge/conllu.hpp"
#include "sdpforge/corpus.hpp"
#include "sdpforge/error.hpp"
#include "sdpforge/instance_io.hpp"
#include "sdpforge/path_stats.hpp"
#include "sdpforge/silver.hpp"
#include "sdpforge/trainer.hpp"
#include "sdpforge/tree_ops.hpp"

namespace fs = std::filesystem;
using namespace sdpforge;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Reads --config files: nested objects address subcommands, arrays become
// repeated values. CLI11 only fills options the command line left empty.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("unsupported config value " + v.dump());
  }

  static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        collect(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 4012;
  std::string log_level = "info";
};

nlohmann::ordered_json global_echo(const Globals& g) {
  return {{"seed", g.seed}, {"log-level", g.log_level}};
}

// The echo is a --config file that reproduces the run.
void write_echo(const fs::path& output, const nlohmann::ordered_json& echo) {
  fs::path path = output;
  path += ".config.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << echo.dump(2) << '\n';
  spdlog::debug("config echo written to {}", path.string());
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  out << text;
}

ParseResult read_conllu_checked(const fs::path& path, bool skip_invalid,
                                std::string_view domain = "unknown") {
  if (!fs::is_regular_file(path)) throw Error(Errc::kIo, "cannot read " + path.string());
  auto result = read_conllu_file(path, domain);
  for (const auto& issue : result.errors) {
    spdlog::warn("{}\t{}", path.string(), issue.describe());
  }
  if (!result.ok() && !skip_invalid) {
    throw Error(result.errors.front().code,
                path.string() + ": " + std::to_string(result.errors.size()) +
                    " invalid sentence(s); see warnings");
  }
  return result;
}

std::vector<ParsedSentence> load_parses(const std::vector<std::string>& files,
                                        bool skip_invalid) {
  std::vector<ParsedSentence> out;
  for (const auto& f : files) {
    auto r = read_conllu_checked(f, skip_invalid);
    for (auto& s : r.sentences) out.push_back(propagate_conj(std::move(s)));
  }
  return out;
}

std::vector<CorpusRecord> load_corpora(const std::vector<std::string>& files,
                                       const std::string& adapter,
                                       const std::string& mapping_file) {
  const Adapter a = parse_adapter(adapter);
  CrossReMapping mapping;
  if (!mapping_file.empty()) mapping = CrossReMapping::from_json_file(mapping_file);
  std::vector<CorpusRecord> out;
  for (const auto& f : files) {
    auto recs = load_corpus(f, a, mapping);
    spdlog::info("{}: {} records", f, recs.size());
    std::move(recs.begin(), recs.end(), std::back_inserter(out));
  }
  return out;
}

// "name=path" or "path". A directory contributes its *.conllu files in
// name order and is named after itself; a file is named after its stem.
DomainPools load_pools(const std::vector<std::string>& specs, bool skip_invalid) {
  DomainPools pools;
  for (const auto& spec : specs) {
    std::string name;
    fs::path path = spec;
    if (auto eq = spec.find('='); eq != std::string::npos) {
      name = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    }
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
      for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".conllu") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      if (name.empty()) {
        auto norm = path.lexically_normal();
        if (norm.filename().empty()) norm = norm.parent_path();
        name = norm.filename().string();
      }
    } else {
      files.push_back(path);
      if (name.empty()) name = path.stem().string();
    }
    if (files.empty()) throw Error(Errc::kIo, "no .conllu files under " + path.string());
    auto& pool = pools[name];
    for (const auto& f : files) {
      auto r = read_conllu_checked(f, skip_invalid, name);
      const std::string label = name + "/" + f.filename().string();
      for (auto& s : r.sentences) {
        s.domain = name;
        pool.push_back({label, std::move(s)});
      }
    }
    spdlog::info("domain {}: {} sentences from {} file(s)", name, pool.size(), files.size());
  }
  return pools;
}

std::vector<InstanceRecord> load_instance_files(const std::vector<std::string>& files) {
  std::vector<InstanceRecord> out;
  for (const auto& f : files) {
    if (!fs::is_regular_file(f)) throw Error(Errc::kIo, "cannot read " + f);
    auto recs = read_instances(f);
    std::move(recs.begin(), recs.end(), std::back_inserter(out));
  }
  return out;
}

FinetuneData group_by_domain(const std::vector<InstanceRecord>& train,
                             const std::vector<InstanceRecord>& dev,
                             const std::vector<InstanceRecord>& test) {
  FinetuneData data;
  for (const auto& r : train) data[r.domain].train.push_back(r);
  for (const auto& r : dev) data[r.domain].dev.push_back(r);
  for (const auto& r : test) data[r.domain].test.push_back(r);
  for (const auto& [domain, s] : data) {
    spdlog::info("domain {}: {} train / {} dev / {} test", domain, s.train.size(),
                 s.dev.size(), s.test.size());
  }
  return data;
}

// --- validate ---------------------------------------------------------

struct ValidateOpts {
  std::vector<std::string> inputs;
};

int cmd_validate(const ValidateOpts& o) {
  std::size_t issues = 0;
  std::size_t sentences = 0;
  for (const auto& f : o.inputs) {
    if (!fs::is_regular_file(f)) throw Error(Errc::kIo, "cannot read " + f);
    auto r = read_conllu_file(f);
    for (const auto& issue : r.errors) std::cout << f << '\t' << issue.describe() << '\n';
    issues += r.errors.size();
    sentences += r.blocks;
  }
  spdlog::info("{} sentence(s), {} violation(s)", sentences, issues);
  return issues == 0 ? 0 : kExitData;
}

// --- conj-rewrite -----------------------------------------------------

struct ConjOpts {
  std::string input;
  std::string out;
};

int cmd_conj(const ConjOpts& o) {
  auto r = read_conllu_checked(o.input, false);
  std::size_t changed = 0;
  for (auto& s : r.sentences) {
    auto before = s;
    s = propagate_conj(std::move(s));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.tokens[i].head != before.tokens[i].head ||
          s.tokens[i].deprel != before.tokens[i].deprel) {
        ++changed;
      }
    }
  }
  write_text(o.out, serialize_conllu(r.sentences));
  spdlog::info("{} sentence(s), {} token(s) reattached", r.sentences.size(), changed);
  return 0;
}

// --- stats ------------------------------------------------------------

struct StatsOpts {
  std::vector<std::string> corpus;
  std::vector<std::string> conllu;
  std::string adapter = "canonical";
  std::string mapping;
  std::string group_by = "domain";
  std::string format = "tsv";
  std::string out;
  bool per_path = false;
  bool skip_invalid = false;
};

nlohmann::ordered_json stats_echo(const StatsOpts& o, bool paths) {
  nlohmann::ordered_json j{{"corpus", o.corpus}, {"adapter", o.adapter}};
  if (!o.mapping.empty()) j["mapping"] = o.mapping;
  if (paths) {
    j["conllu"] = o.conllu;
    j["group-by"] = o.group_by;
    j["per-path"] = o.per_path;
    j["skip-invalid"] = o.skip_invalid;
  }
  j["format"] = o.format;
  j["out"] = o.out;
  return j;
}

int cmd_stats_paths(const StatsOpts& o, TableKind kind) {
  const GroupBy g = parse_group_by(o.group_by);
  auto corpus = load_corpora(o.corpus, o.adapter, o.mapping);
  auto parses = load_parses(o.conllu, o.skip_invalid);
  auto aligned = align(corpus, parses);
  PathStatsTable t = kind == TableKind::kLabels
                         ? label_distribution(aligned, g,
                                              o.per_path ? LabelCounting::kPerPath
                                                         : LabelCounting::kPerEdge)
                         : length_histogram(aligned, g);
  write_text(o.out, o.format == "json" ? t.to_json() : t.to_tsv());
  spdlog::info("{} relation path(s)", t.total_pairs);
  return 0;
}

int cmd_stats_dataset(const StatsOpts& o) {
  auto corpus = load_corpora(o.corpus, o.adapter, o.mapping);
  auto stats = dataset_stats(corpus);
  write_text(o.out, o.format == "json" ? stats.to_json() : stats.to_tsv());
  auto total = stats.total();
  spdlog::info("{} sentence(s), {} relation(s)", total.sentences, total.relations);
  return 0;
}

// --- gen --------------------------------------------------------------

struct GenOpts {
  std::vector<std::string> conllu;
  std::vector<std::string> labels = {"nsubj", "obj", "obl", "nmod", "appos"};
  std::size_t max_per_sentence = 5;
  std::size_t per_domain = 0;
  std::size_t holdout = 100;
  std::string out;
  std::string holdout_out;
  std::vector<std::size_t> sweep_sizes;
  std::string out_dir;
  std::string prefix = "silver";
  bool skip_invalid = false;
  // Gold instances from an annotated corpus instead of silver generation.
  std::vector<std::string> from_corpus;
  std::string adapter = "canonical";
  std::string mapping;
  std::optional<std::size_t> max_negatives;
};

int cmd_gen_gold(const GenOpts& o, const Globals& g) {
  auto corpus = load_corpora(o.from_corpus, o.adapter, o.mapping);
  auto gold = gold_instances(corpus, o.max_negatives, g.seed);
  if (gold.skipped_overlapping > 0) {
    spdlog::warn("{} pair(s) with overlapping spans skipped", gold.skipped_overlapping);
  }
  write_instances(o.out, gold.instances);
  spdlog::info("{} gold instance(s) written to {}", gold.instances.size(), o.out);
  return 0;
}

int cmd_gen(const GenOpts& o, const Globals& g) {
  if (!o.from_corpus.empty()) return cmd_gen_gold(o, g);

  GenerationConfig cfg;
  cfg.whitelist = o.labels;
  cfg.max_per_sentence = o.max_per_sentence;
  cfg.per_domain = o.per_domain;
  cfg.holdout_per_domain = o.holdout;
  cfg.seed = g.seed;
  auto pools = load_pools(o.conllu, o.skip_invalid);
  auto result = generate_silver(pools, cfg);

  if (!o.sweep_sizes.empty()) {
    auto lists = build_manifest(result.train_sample, cfg.whitelist, cfg.max_per_sentence,
                                o.sweep_sizes, cfg.seed);
    write_manifest(o.out_dir, o.prefix, lists, cfg.seed);
    spdlog::info("manifest with {} list(s) written to {}", lists.size(), o.out_dir);
  } else {
    write_instances(o.out, result.train_instances);
    spdlog::info("{} silver instance(s) written to {}", result.train_instances.size(), o.out);
  }
  if (!o.holdout_out.empty()) {
    write_instances(o.holdout_out, result.holdout_instances);
    spdlog::info("{} holdout instance(s) written to {}", result.holdout_instances.size(),
                 o.holdout_out);
  }
  return 0;
}

nlohmann::ordered_json gen_echo(const GenOpts& o) {
  nlohmann::ordered_json j;
  if (!o.from_corpus.empty()) {
    j["from-corpus"] = o.from_corpus;
    j["adapter"] = o.adapter;
    if (!o.mapping.empty()) j["mapping"] = o.mapping;
    if (o.max_negatives) j["max-negatives"] = *o.max_negatives;
  } else {
    j["conllu"] = o.conllu;
    j["labels"] = o.labels;
    j["max-per-sentence"] = o.max_per_sentence;
    j["per-domain"] = o.per_domain;
    j["holdout"] = o.holdout;
    if (!o.holdout_out.empty()) j["holdout-out"] = o.holdout_out;
    if (!o.sweep_sizes.empty()) {
      j["sweep-sizes"] = o.sweep_sizes;
      j["out-dir"] = o.out_dir;
      j["prefix"] = o.prefix;
    }
    j["skip-invalid"] = o.skip_invalid;
  }
  if (!o.out.empty()) j["out"] = o.out;
  return j;
}

// --- train / sweep ----------------------------------------------------

struct TrainOpts {
  std::vector<std::string> pretrain;
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
  std::string manifest;
  bool no_baseline = false;
  std::string report;
  std::string tsv;
  TrainConfig cfg;
  std::string averaging = "exclude-no-relation";
};

void add_train_flags(CLI::App* cmd, TrainOpts& o) {
  auto& c = o.cfg;
  cmd->add_option("--seeds", c.seeds, "Training seeds")->delimiter(',');
  cmd->add_option("--embedding-dim", c.dims.embedding, "Embedding width")->capture_default_str();
  cmd->add_option("--hidden-dim", c.dims.hidden, "Encoder width")->capture_default_str();
  cmd->add_option("--max-vocab", c.dims.max_vocab, "Vocabulary cap")->capture_default_str();
  cmd->add_option("--lr-pretrain", c.lr_pretrain, "Adam step size, silver phase")
      ->capture_default_str();
  cmd->add_option("--lr-finetune", c.lr_finetune, "Adam step size, fine-tuning")
      ->capture_default_str();
  cmd->add_option("--batch-pretrain", c.batch_pretrain)->capture_default_str();
  cmd->add_option("--batch-finetune", c.batch_finetune)->capture_default_str();
  cmd->add_option("--epochs-pretrain", c.epochs_pretrain)->capture_default_str();
  cmd->add_option("--epochs-finetune", c.epochs_finetune)->capture_default_str();
  cmd->add_option("--patience", c.patience, "Early stopping patience, 0 disables")
      ->capture_default_str();
  cmd->add_option("--max-instances", c.max_instances, "Silver prefix to use, 0 for all")
      ->capture_default_str();
  cmd->add_option("--averaging", o.averaging, "Macro-F1 averaging set")
      ->check(CLI::IsMember({"exclude-no-relation", "all", "gold-present"}))
      ->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads, 0 for SDPFORGE_THREADS or all cores");
  cmd->add_option("--train", o.train, "Gold training instances (JSONL)")->required();
  cmd->add_option("--dev", o.dev, "Gold dev instances (JSONL)");
  cmd->add_option("--report", o.report, "Report JSON path")->required();
  cmd->add_option("--tsv", o.tsv, "Optional per-seed TSV path");
}

nlohmann::ordered_json train_echo(const TrainOpts& o, bool sweep) {
  nlohmann::ordered_json j;
  if (sweep) {
    j["manifest"] = o.manifest;
    j["no-baseline"] = o.no_baseline;
  } else {
    if (!o.pretrain.empty()) j["pretrain"] = o.pretrain;
    j["test"] = o.test;
  }
  j["train"] = o.train;
  if (!o.dev.empty()) j["dev"] = o.dev;
  const auto c = o.cfg.to_json();
  j["seeds"] = c["seeds"];
  j["embedding-dim"] = c["embedding_dim"];
  j["hidden-dim"] = c["hidden_dim"];
  j["max-vocab"] = c["max_vocab"];
  j["lr-pretrain"] = c["lr_pretrain"];
  j["lr-finetune"] = c["lr_finetune"];
  j["batch-pretrain"] = c["batch_pretrain"];
  j["batch-finetune"] = c["batch_finetune"];
  j["epochs-pretrain"] = c["epochs_pretrain"];
  j["epochs-finetune"] = c["epochs_finetune"];
  j["patience"] = c["patience"];
  j["max-instances"] = c["max_instances"];
  j["averaging"] = o.averaging;
  j["report"] = o.report;
  if (!o.tsv.empty()) j["tsv"] = o.tsv;
  return j;
}

int cmd_train(TrainOpts o) {
  o.cfg.averaging = parse_macro_average(o.averaging);
  o.cfg.validate();
  auto pretrain = load_instance_files(o.pretrain);
  auto data = group_by_domain(load_instance_files(o.train), load_instance_files(o.dev),
                              load_instance_files(o.test));
  spdlog::info("{} silver instance(s), {} seed(s)", pretrain.size(), o.cfg.seeds.size());
  auto report = run_protocol(pretrain, data, o.cfg);
  write_text(o.report, report.to_json().dump(2) + "\n");
  if (!o.tsv.empty()) write_text(o.tsv, report.to_tsv());
  for (const auto& c : report.cells) {
    spdlog::info("{} -> {}: macro-F1 {:.4f} +- {:.4f}", c.train_domain, c.test_domain, c.mean,
                 c.std);
  }
  return 0;
}

int cmd_sweep(TrainOpts o) {
  o.cfg.averaging = parse_macro_average(o.averaging);
  o.cfg.validate();
  const auto manifest = Manifest::read(o.manifest);
  const fs::path base = fs::path(o.manifest).parent_path();
  std::vector<std::vector<InstanceRecord>> lists;
  if (!o.no_baseline) lists.emplace_back();
  for (const auto& e : manifest.entries) {
    lists.push_back(read_instances(base / e.file));
    if (lists.back().size() != e.instances) {
      throw Error(Errc::kSchemaMismatch, e.file + " holds " +
                                             std::to_string(lists.back().size()) +
                                             " instances, manifest says " +
                                             std::to_string(e.instances));
    }
  }
  auto data = group_by_domain(load_instance_files(o.train), load_instance_files(o.dev), {});
  auto result = sweep(lists, data, o.cfg);
  write_text(o.report, result.to_json().dump(2) + "\n");
  if (!o.tsv.empty()) write_text(o.tsv, result.to_tsv());
  for (const auto& p : result.points) {
    spdlog::info("{} instance(s): average dev macro-F1 {:.4f}", p.instances, p.average);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("sdpforge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Dependency-path statistics, silver data generation and relation classifier training."};
  app.name("sdpforge");
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of option values; explicit flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "Seed for sampling and generation")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  ValidateOpts vo;
  auto* validate = app.add_subcommand("validate", "Check CoNLL-U files; one line per violation");
  validate->add_option("--input", vo.inputs, "CoNLL-U files")->required();

  ConjOpts co;
  auto* conj = app.add_subcommand("conj-rewrite", "Attach conjuncts to the list's governor");
  conj->add_option("--input", co.input, "CoNLL-U file")->required();
  conj->add_option("--out", co.out, "Output file, - for stdout")->required();

  StatsOpts so;
  auto* stats = app.add_subcommand("stats", "Path and dataset statistics");
  stats->require_subcommand(1);
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--corpus", so.corpus, "Annotated corpus files")->required();
    cmd->add_option("--adapter", so.adapter, "canonical or crossre")
        ->check(CLI::IsMember({"canonical", "crossre"}))
        ->capture_default_str();
    cmd->add_option("--mapping", so.mapping, "CrossRE field mapping JSON");
    cmd->add_option("--format", so.format, "tsv or json")
        ->check(CLI::IsMember({"tsv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", so.out, "Output file, stdout when omitted");
  };
  auto add_paths = [&](CLI::App* cmd) {
    add_common(cmd);
    cmd->add_option("--conllu", so.conllu, "Parses aligned with the corpus, in order")
        ->required();
    cmd->add_option("--group-by", so.group_by, "domain, relation or all")
        ->check(CLI::IsMember({"domain", "relation", "all"}))
        ->capture_default_str();
    cmd->add_flag("--skip-invalid", so.skip_invalid, "Drop invalid sentences instead of failing");
  };
  auto* labels = stats->add_subcommand("labels", "Deprel distribution on entity paths");
  add_paths(labels);
  labels->add_flag("--per-path", so.per_path, "Count each label once per path");
  auto* lengths = stats->add_subcommand("lengths", "Path length histogram");
  add_paths(lengths);
  auto* dataset = stats->add_subcommand("dataset", "Sentences and relations per domain and split");
  add_common(dataset);

  GenOpts go;
  auto* gen = app.add_subcommand("gen", "Generate silver (or gold) training instances");
  auto* gen_conllu =
      gen->add_option("--conllu", go.conllu, "Domain sources: DIR, FILE or NAME=PATH");
  gen->add_option("--labels", go.labels, "Deprel whitelist")->delimiter(',');
  gen->add_option("--max-per-sentence", go.max_per_sentence)->capture_default_str();
  auto* per_domain = gen->add_option("--per-domain", go.per_domain, "Sentences per domain");
  gen->add_option("--holdout", go.holdout, "Held-out sentences per domain")
      ->capture_default_str();
  gen->add_option("--out", go.out, "Instance JSONL path");
  gen->add_option("--holdout-out", go.holdout_out, "Holdout instance JSONL path");
  auto* sweep_sizes = gen->add_option("--sweep-sizes", go.sweep_sizes,
                                      "Nested instance counts for a manifest")
                          ->delimiter(',');
  auto* out_dir = gen->add_option("--out-dir", go.out_dir, "Manifest directory");
  gen->add_option("--prefix", go.prefix, "Manifest file prefix")->capture_default_str();
  gen->add_flag("--skip-invalid", go.skip_invalid, "Drop invalid sentences instead of failing");
  auto* from_corpus = gen->add_option("--from-corpus", go.from_corpus,
                                      "Annotated corpus files: emit gold instances instead");
  gen->add_option("--adapter", go.adapter, "canonical or crossre")
      ->check(CLI::IsMember({"canonical", "crossre"}))
      ->capture_default_str();
  gen->add_option("--mapping", go.mapping, "CrossRE field mapping JSON");
  gen->add_option("--max-negatives", go.max_negatives, "No-relation pairs kept per record");
  from_corpus->excludes(gen_conllu)->excludes(sweep_sizes)->excludes(per_domain);
  sweep_sizes->needs(out_dir);

  TrainOpts to;
  auto* train = app.add_subcommand("train", "Two-phase training and cross-domain evaluation");
  train->add_option("--pretrain", to.pretrain, "Silver instances; omit for the baseline");
  add_train_flags(train, to);
  train->add_option("--test", to.test, "Gold test instances (JSONL)")->required();

  TrainOpts wo;
  auto* sweep_cmd = app.add_subcommand("sweep", "Dev Macro-F1 over nested silver sets");
  sweep_cmd->add_option("--manifest", wo.manifest, "manifest.json from gen --sweep-sizes")
      ->required();
  sweep_cmd->add_flag("--no-baseline", wo.no_baseline, "Skip the zero-instance point");
  add_train_flags(sweep_cmd, wo);

  try {
    app.parse(argc, argv);
    if (*gen) {
      if (go.from_corpus.empty()) {
        if (go.conllu.empty()) throw CLI::ValidationError("gen", "--conllu is required");
        if (per_domain->count() == 0) {
          throw CLI::ValidationError("gen", "--per-domain is required");
        }
      }
      if (go.sweep_sizes.empty() && go.out.empty()) {
        throw CLI::ValidationError("gen", "--out is required");
      }
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    nlohmann::ordered_json echo = global_echo(g);
    if (*validate) return cmd_validate(vo);
    if (*conj) {
      echo["conj-rewrite"] = {{"input", co.input}, {"out", co.out}};
      int rc = cmd_conj(co);
      if (co.out != "-") write_echo(co.out, echo);
      return rc;
    }
    if (*stats) {
      int rc = 0;
      std::string which;
      if (*labels) {
        which = "labels";
        rc = cmd_stats_paths(so, TableKind::kLabels);
      } else if (*lengths) {
        which = "lengths";
        rc = cmd_stats_paths(so, TableKind::kLengths);
      } else {
        which = "dataset";
        rc = cmd_stats_dataset(so);
      }
      echo["stats"] = {{which, stats_echo(so, which != "dataset")}};
      if (!so.out.empty() && so.out != "-") write_echo(so.out, echo);
      return rc;
    }
    if (*gen) {
      echo["gen"] = gen_echo(go);
      int rc = cmd_gen(go, g);
      write_echo(go.sweep_sizes.empty() ? fs::path(go.out) : fs::path(go.out_dir) / "manifest.json",
                 echo);
      return rc;
    }
    if (*train) {
      echo["train"] = train_echo(to, false);
      int rc = cmd_train(to);
      write_echo(to.report, echo);
      return rc;
    }
    if (*sweep_cmd) {
      echo["sweep"] = train_echo(wo, true);
      int rc = cmd_sweep(wo);
      write_echo(wo.report, echo);
      return rc;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == Errc::kInvalidConfig ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}
