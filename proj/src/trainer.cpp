#include "sdpforge/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "sdpforge/corpus.hpp"
#include "sdpforge/error.hpp"
#include "sdpforge/random.hpp"

namespace sdpforge {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

struct AdamState {
  Gradients m;
  Gradients v;
  std::int64_t step = 0;

  explicit AdamState(const ModelParams& p) : m(p), v(p) {}
};

template <typename P, typename G>
void adam_update(P& param, const G& grad, G& m, G& v, double lr, const AdamConfig& c,
                 double bias1, double bias2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
}

void adam_step(ModelParams& p, const Gradients& g, AdamState& s, double lr,
               const AdamConfig& c) {
  ++s.step;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
  adam_update(p.embeddings, g.embeddings, s.m.embeddings, s.v.embeddings, lr, c, bias1, bias2);
  adam_update(p.enc_weight, g.enc_weight, s.m.enc_weight, s.v.enc_weight, lr, c, bias1, bias2);
  adam_update(p.enc_bias, g.enc_bias, s.m.enc_bias, s.v.enc_bias, lr, c, bias1, bias2);
  adam_update(p.head_weight, g.head_weight, s.m.head_weight, s.v.head_weight, lr, c, bias1,
              bias2);
  adam_update(p.head_bias, g.head_bias, s.m.head_bias, s.v.head_bias, lr, c, bias1, bias2);
}

std::size_t worker_count(std::size_t configured, std::size_t jobs) {
  std::size_t n = configured;
  if (n == 0) {
    if (const char* env = std::getenv("SDPFORGE_THREADS")) {
      n = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(i) for i in [0, jobs) on a small pool; rethrows the first failure
// by job index so the reported error does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn fn) {
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t n = worker_count(threads, jobs);
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

PhaseCurve curve_of(const PhaseResult& r) {
  return {r.epoch_loss, r.dev_macro_f1, r.best_epoch};
}

nlohmann::ordered_json curve_json(const PhaseCurve& c) {
  nlohmann::ordered_json j;
  j["epoch_loss"] = c.epoch_loss;
  j["dev_macro_f1"] = c.dev_macro_f1;
  j["best_epoch"] = c.best_epoch;
  return j;
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, std::string(key) + ": " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::kInvalidConfig, msg); };
  if (!(lr_pretrain > 0.0) || !(lr_finetune > 0.0)) fail("learning rates must be > 0");
  if (batch_pretrain < 1 || batch_finetune < 1) fail("batch size must be >= 1");
  if (seeds.empty()) fail("at least one seed is required");
  if (dims.embedding < 1 || dims.hidden < 1) fail("dimensions must be >= 1");
  if (dims.max_vocab < 6) fail("max_vocab must leave room for the reserved entries");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0)) {
    fail("Adam betas must lie in [0, 1) and epsilon must be > 0");
  }
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["embedding_dim"] = dims.embedding;
  j["hidden_dim"] = dims.hidden;
  j["max_vocab"] = dims.max_vocab;
  j["lr_pretrain"] = lr_pretrain;
  j["lr_finetune"] = lr_finetune;
  j["batch_pretrain"] = batch_pretrain;
  j["batch_finetune"] = batch_finetune;
  j["epochs_pretrain"] = epochs_pretrain;
  j["epochs_finetune"] = epochs_finetune;
  j["patience"] = patience;
  j["seeds"] = seeds;
  j["adam_beta1"] = adam.beta1;
  j["adam_beta2"] = adam.beta2;
  j["adam_epsilon"] = adam.epsilon;
  j["max_instances"] = max_instances;
  j["averaging"] = std::string(to_string(averaging));
  return j;
}

void TrainConfig::update_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidConfig, "training config must be an object");
  read_key(j, "embedding_dim", dims.embedding);
  read_key(j, "hidden_dim", dims.hidden);
  read_key(j, "max_vocab", dims.max_vocab);
  read_key(j, "lr_pretrain", lr_pretrain);
  read_key(j, "lr_finetune", lr_finetune);
  read_key(j, "batch_pretrain", batch_pretrain);
  read_key(j, "batch_finetune", batch_finetune);
  read_key(j, "epochs_pretrain", epochs_pretrain);
  read_key(j, "epochs_finetune", epochs_finetune);
  read_key(j, "patience", patience);
  read_key(j, "seeds", seeds);
  read_key(j, "adam_beta1", adam.beta1);
  read_key(j, "adam_beta2", adam.beta2);
  read_key(j, "adam_epsilon", adam.epsilon);
  read_key(j, "max_instances", max_instances);
  read_key(j, "threads", threads);
  if (j.contains("averaging")) {
    std::string name;
    read_key(j, "averaging", name);
    averaging = parse_macro_average(name);
  }
  validate();
}

std::vector<EncodedInstance> encode_instances(const Vocab& vocab,
                                              std::span<const InstanceRecord> records,
                                              std::span<const std::string> labels) {
  std::vector<EncodedInstance> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = std::find(labels.begin(), labels.end(), r.label);
    if (it == labels.end()) {
      throw Error(Errc::kLabelOutOfRange, "label '" + r.label + "' is not in the label set");
    }
    out.push_back(encode(vocab, mark_instance(r), static_cast<int>(it - labels.begin())));
  }
  return out;
}

EvalReport evaluate(const ModelParams& params, std::span<const EncodedInstance> instances,
                    std::span<const std::string> labels, MacroAverage averaging) {
  std::vector<int> gold;
  std::vector<int> predicted;
  gold.reserve(instances.size());
  predicted.reserve(instances.size());
  for (const auto& inst : instances) {
    gold.push_back(inst.label);
    predicted.push_back(predict(params, inst));
  }
  return score_predictions(gold, predicted, labels, averaging);
}

PhaseResult train_phase(ModelParams params, std::span<const EncodedInstance> train,
                        std::span<const std::string> labels, const PhaseOptions& options,
                        std::span<const EncodedInstance> dev) {
  if (static_cast<int>(labels.size()) != params.label_count()) {
    throw Error(Errc::kLabelOutOfRange,
                std::to_string(labels.size()) + " label names for a head with " +
                    std::to_string(params.label_count()) + " classes");
  }
  for (const auto* set : {&train, &dev}) {
    for (const auto& inst : *set) {
      if (inst.label < 0 || inst.label >= params.label_count()) {
        throw Error(Errc::kLabelOutOfRange,
                    "label " + std::to_string(inst.label) + " with " +
                        std::to_string(params.label_count()) + " classes");
      }
    }
  }
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);

  PhaseResult result;
  Gradients grads(params);
  AdamState adam(params);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EncodedInstance> batch;

  std::optional<ModelParams> best;
  double best_f1 = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= options.epochs && !train.empty(); ++epoch) {
    Rng rng(derive_seed(options.seed, "epoch/" + std::to_string(epoch)));
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);
      const double l = loss_and_gradients(params, batch, grads);
      if (!std::isfinite(l)) {
        throw Error(Errc::kNonFiniteLoss,
                    "loss " + fmt(l) + " at epoch " + std::to_string(epoch) +
                        ", batch starting at " + std::to_string(start) + ", lr " +
                        fmt(options.lr));
      }
      epoch_total += l * static_cast<double>(stop - start);
      adam_step(params, grads, adam, options.lr, options.adam);
      if (!params.all_finite()) {
        throw Error(Errc::kNonFiniteLoss, "non-finite parameters after epoch " +
                                              std::to_string(epoch) + ", batch starting at " +
                                              std::to_string(start));
      }
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(train.size()));

    if (!dev.empty()) {
      const double f1 = evaluate(params, dev, labels, options.averaging).macro_f1;
      result.dev_macro_f1.push_back(f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = params;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (options.patience > 0 && ++since_best >= options.patience) {
        break;
      }
    }
  }
  if (best) {
    params = std::move(*best);
  } else {
    result.best_epoch = result.epoch_loss.size();
  }
  result.final_loss = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
  result.params = std::move(params);
  return result;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<std::string> finetune_label_set(const FinetuneData& data) {
  std::set<std::string> labels{std::string(kNoRelation)};
  for (const auto& [_, splits] : data) {
    for (const auto* part : {&splits.train, &splits.dev, &splits.test}) {
      for (const auto& r : *part) labels.insert(r.label);
    }
  }
  return {labels.begin(), labels.end()};
}

std::vector<std::string> pretrain_label_set(std::span<const InstanceRecord> instances) {
  std::set<std::string> labels;
  for (const auto& r : instances) labels.insert(r.label);
  return {labels.begin(), labels.end()};
}

const ReportCell* TrainReport::cell(std::string_view train_domain,
                                    std::string_view test_domain) const {
  for (const auto& c : cells) {
    if (c.train_domain == train_domain && c.test_domain == test_domain) return &c;
  }
  return nullptr;
}

nlohmann::ordered_json TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["config"] = config.to_json();
  nlohmann::ordered_json counts;
  counts["pretrain"] = pretrain_instances;
  nlohmann::ordered_json ft = nlohmann::ordered_json::object();
  for (const auto& [domain, n] : finetune_instances) {
    ft[domain] = {{"train", n[0]}, {"dev", n[1]}, {"test", n[2]}};
  }
  counts["finetune"] = ft;
  j["instances"] = counts;
  j["labels"] = {{"pretrain", pretrain_labels}, {"finetune", finetune_labels}};
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json cj;
    cj["train_domain"] = c.train_domain;
    cj["test_domain"] = c.test_domain;
    cj["per_seed"] = c.per_seed;
    cj["mean"] = c.mean;
    cj["std"] = c.std;
    j["cells"].push_back(std::move(cj));
  }
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json rj;
    rj["seed"] = r.seed;
    if (r.pretrain) rj["pretrain"] = curve_json(*r.pretrain);
    nlohmann::ordered_json fj = nlohmann::ordered_json::object();
    for (const auto& [domain, c] : r.finetune) fj[domain] = curve_json(c);
    rj["finetune"] = fj;
    j["runs"].push_back(std::move(rj));
  }
  return j;
}

std::string TrainReport::to_tsv() const {
  std::string out = "train_domain\ttest_domain\tseed\tmacro_f1\n";
  for (const auto& c : cells) {
    for (std::size_t i = 0; i < c.per_seed.size(); ++i) {
      out += c.train_domain + '\t' + c.test_domain + '\t' +
             std::to_string(config.seeds[i]) + '\t' + fmt(c.per_seed[i]) + '\n';
    }
  }
  return out;
}

TrainReport run_protocol(std::span<const InstanceRecord> pretrain_all,
                         const FinetuneData& finetune, const TrainConfig& config) {
  config.validate();
  if (finetune.empty()) throw Error(Errc::kEmptyCorpus, "no fine-tuning domains");

  std::span<const InstanceRecord> pretrain = pretrain_all;
  if (config.max_instances > 0 && pretrain.size() > config.max_instances) {
    pretrain = pretrain.first(config.max_instances);
  }
  const bool baseline = pretrain.empty();

  TrainReport report;
  report.mode = baseline ? "baseline" : "pretrained";
  report.config = config;
  report.pretrain_instances = pretrain.size();
  for (const auto& [domain, s] : finetune) {
    report.finetune_instances[domain] = {s.train.size(), s.dev.size(), s.test.size()};
  }
  report.finetune_labels = finetune_label_set(finetune);
  if (!baseline) {
    report.pretrain_labels = pretrain_label_set(pretrain);
    if (report.pretrain_labels.size() < 2) {
      throw Error(Errc::kInvalidConfig, "silver instances carry fewer than 2 labels");
    }
  }

  std::vector<std::vector<std::string>> vocab_corpus;
  for (const auto& r : pretrain) vocab_corpus.push_back(r.tokens);
  for (const auto& [_, s] : finetune) {
    for (const auto* part : {&s.train, &s.dev, &s.test}) {
      for (const auto& r : *part) vocab_corpus.push_back(r.tokens);
    }
  }
  if (vocab_corpus.empty()) throw Error(Errc::kEmptyCorpus, "no instances");
  const Vocab vocab = Vocab::build(vocab_corpus, config.dims.max_vocab);

  const auto& ft_labels = report.finetune_labels;
  const auto pre_encoded = encode_instances(vocab, pretrain, report.pretrain_labels);
  struct EncodedSplits {
    std::vector<EncodedInstance> train, dev, test;
  };
  std::map<std::string, EncodedSplits> ft_encoded;
  for (const auto& [domain, s] : finetune) {
    ft_encoded[domain] = {encode_instances(vocab, s.train, ft_labels),
                          encode_instances(vocab, s.dev, ft_labels),
                          encode_instances(vocab, s.test, ft_labels)};
  }

  const int k_ft = static_cast<int>(ft_labels.size());
  if (k_ft < 2) throw Error(Errc::kInvalidConfig, "fine-tuning needs at least 2 labels");
  const int k_init = baseline ? k_ft : static_cast<int>(report.pretrain_labels.size());

  report.runs.resize(config.seeds.size());
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    SeedRun run;
    run.seed = seed;
    ModelParams params = init_model(config.dims, k_init, vocab, seed);
    if (!baseline) {
      PhaseOptions opt{config.lr_pretrain, config.batch_pretrain, config.epochs_pretrain,
                       config.patience,    config.adam,           derive_seed(seed, "pretrain"),
                       config.averaging};
      auto phase = train_phase(std::move(params), pre_encoded, report.pretrain_labels, opt);
      run.pretrain = curve_of(phase);
      params = std::move(phase.params);
    }
    params = replace_head(std::move(params), k_ft, seed);
    for (const auto& [train_domain, data] : ft_encoded) {
      PhaseOptions opt{config.lr_finetune,
                       config.batch_finetune,
                       config.epochs_finetune,
                       config.patience,
                       config.adam,
                       derive_seed(seed, "finetune/" + train_domain),
                       config.averaging};
      auto phase = train_phase(params, data.train, ft_labels, opt, data.dev);
      run.finetune[train_domain] = curve_of(phase);
      for (const auto& [test_domain, test] : ft_encoded) {
        run.macro_f1[{train_domain, test_domain}] =
            evaluate(phase.params, test.test, ft_labels, config.averaging).macro_f1;
      }
    }
    report.runs[i] = std::move(run);
  });

  for (const auto& [train_domain, _] : finetune) {
    for (const auto& [test_domain, __] : finetune) {
      ReportCell c{train_domain, test_domain, {}, 0.0, 0.0};
      for (const auto& run : report.runs) {
        c.per_seed.push_back(run.macro_f1.at({train_domain, test_domain}));
      }
      c.mean = mean_of(c.per_seed);
      c.std = sample_std(c.per_seed);
      report.cells.push_back(std::move(c));
    }
  }
  return report;
}

std::string SweepResult::to_tsv() const {
  std::string out = "instances\ttrain_domain\tmean\tstd\n";
  for (const auto& p : points) {
    for (const auto& [domain, ms] : p.by_domain) {
      out += std::to_string(p.instances) + '\t' + domain + '\t' + fmt(ms.first) + '\t' +
             fmt(ms.second) + '\n';
    }
    out += std::to_string(p.instances) + "\taverage\t" + fmt(p.average) + "\t\n";
  }
  return out;
}

nlohmann::ordered_json SweepResult::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    nlohmann::ordered_json pj;
    pj["instances"] = p.instances;
    nlohmann::ordered_json bd = nlohmann::ordered_json::object();
    for (const auto& [domain, ms] : p.by_domain) {
      bd[domain] = {{"mean", ms.first}, {"std", ms.second}};
    }
    pj["by_domain"] = bd;
    pj["average"] = p.average;
    pj["report"] = p.report.to_json();
    j.push_back(std::move(pj));
  }
  return j;
}

SweepResult sweep(std::span<const std::vector<InstanceRecord>> pretrain_lists,
                  const FinetuneData& finetune, const TrainConfig& config) {
  FinetuneData on_dev = finetune;
  for (auto& [_, s] : on_dev) s.test = s.dev;

  SweepResult result;
  for (const auto& list : pretrain_lists) {
    SweepPoint point;
    point.report = run_protocol(list, on_dev, config);
    point.instances = point.report.pretrain_instances;
    std::vector<double> domain_means;
    for (const auto& [domain, _] : on_dev) {
      const ReportCell* c = point.report.cell(domain, domain);
      point.by_domain[domain] = {c->mean, c->std};
      domain_means.push_back(c->mean);
    }
    point.average = mean_of(domain_means);
    result.points.push_back(std::move(point));
  }
  return result;
}

}  // namespace sdpforge
