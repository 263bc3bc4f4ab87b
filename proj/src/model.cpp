#include "sdpforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sdpforge/error.hpp"
#include "sdpforge/random.hpp"

namespace sdpforge {

namespace {

void fill_uniform(Eigen::MatrixXd& m, double scale, Rng& rng) {
  // Row-major draw order so the values do not depend on Eigen's storage.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform_real(-1.0, 1.0) * scale;
    }
  }
}

void init_head(ModelParams& p, int label_count, std::uint64_t seed) {
  if (label_count < 2) {
    throw Error(Errc::kInvalidConfig, "need at least 2 labels, got " +
                                          std::to_string(label_count));
  }
  Rng rng(derive_seed(seed, "head"));
  const int in = 2 * p.hidden();
  p.head_weight.resize(label_count, in);
  fill_uniform(p.head_weight, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  p.head_bias = Eigen::VectorXd::Zero(label_count);
}

Eigen::VectorXd entity_input(const ModelParams& p, int marker,
                             const std::vector<int>& tokens) {
  Eigen::VectorXd x = p.embeddings.row(marker).transpose();
  if (!tokens.empty()) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
    for (int t : tokens) mean += p.embeddings.row(t).transpose();
    x += mean / static_cast<double>(tokens.size());
  }
  return x;
}

struct Activations {
  Eigen::VectorXd x1, x2, s1, s2, logits;
};

Activations run(const ModelParams& p, const EncodedInstance& inst) {
  Activations a;
  a.x1 = entity_input(p, inst.e1_marker, inst.e1_tokens);
  a.x2 = entity_input(p, inst.e2_marker, inst.e2_tokens);
  a.s1 = (p.enc_weight * a.x1 + p.enc_bias).array().tanh().matrix();
  a.s2 = (p.enc_weight * a.x2 + p.enc_bias).array().tanh().matrix();
  const int h = p.hidden();
  a.logits = p.head_bias;
  a.logits.noalias() += p.head_weight.leftCols(h) * a.s1;
  a.logits.noalias() += p.head_weight.rightCols(h) * a.s2;
  return a;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

void check_label(const ModelParams& p, const EncodedInstance& inst) {
  if (inst.label < 0 || inst.label >= p.label_count()) {
    throw Error(Errc::kLabelOutOfRange,
                "label " + std::to_string(inst.label) + " with " +
                    std::to_string(p.label_count()) + " classes");
  }
}

}  // namespace

Vocab Vocab::build(std::span<const std::vector<std::string>> sentences,
                   std::size_t max_size) {
  std::map<std::string, std::int64_t> freq;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++freq[t];
  }
  Vocab v;
  v.entries_.push_back("<unk>");
  for (auto m : kMarkerTokens) v.entries_.emplace_back(m);
  for (auto m : kMarkerTokens) freq.erase(std::string(m));
  freq.erase("<unk>");
  std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  for (const auto& [token, _] : ranked) {
    if (v.entries_.size() >= max_size) break;
    v.entries_.push_back(token);
  }
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    v.index_.emplace(v.entries_[i], static_cast<int>(i));
  }
  return v;
}

int Vocab::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

bool ModelParams::all_finite() const {
  return embeddings.allFinite() && enc_weight.allFinite() && enc_bias.allFinite() &&
         head_weight.allFinite() && head_bias.allFinite();
}

std::uint64_t ModelParams::encoder_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : vocab.entries()) {
    mix(e.data(), e.size());
    mix("\0", 1);
  }
  auto mix_matrix = [&mix](const auto& m) {
    const Eigen::Index dims[2] = {m.rows(), m.cols()};
    mix(dims, sizeof dims);
    mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  };
  mix_matrix(embeddings);
  mix_matrix(enc_weight);
  mix_matrix(enc_bias);
  return h;
}

std::size_t ModelParams::parameter_count() const {
  return static_cast<std::size_t>(embeddings.size() + enc_weight.size() +
                                  enc_bias.size() + head_weight.size() +
                                  head_bias.size());
}

ModelParams init_model(const ModelDims& dims, int label_count,
                       std::span<const std::vector<std::string>> vocab_corpus,
                       std::uint64_t seed) {
  bool any = std::any_of(vocab_corpus.begin(), vocab_corpus.end(),
                         [](const auto& s) { return !s.empty(); });
  if (!any) throw Error(Errc::kEmptyCorpus, "no tokens to build a vocabulary from");
  return init_model(dims, label_count, Vocab::build(vocab_corpus, dims.max_vocab), seed);
}

ModelParams init_model(const ModelDims& dims, int label_count, Vocab vocab,
                       std::uint64_t seed) {
  if (dims.embedding < 1 || dims.hidden < 1) {
    throw Error(Errc::kInvalidConfig, "dimensions must be positive");
  }
  ModelParams p;
  p.vocab = std::move(vocab);
  Rng rng(derive_seed(seed, "encoder"));
  p.embeddings.resize(static_cast<Eigen::Index>(p.vocab.size()), dims.embedding);
  fill_uniform(p.embeddings, 1.0, rng);
  p.enc_weight.resize(dims.hidden, dims.embedding);
  fill_uniform(p.enc_weight, 1.0 / std::sqrt(static_cast<double>(dims.embedding)), rng);
  p.enc_bias = Eigen::VectorXd::Zero(dims.hidden);
  init_head(p, label_count, seed);
  return p;
}

ModelParams replace_head(ModelParams params, int label_count, std::uint64_t seed) {
  init_head(params, label_count, seed);
  return params;
}

EncodedInstance encode(const Vocab& vocab, const MarkedInstance& m, int label) {
  const std::size_t n = m.tokens.size();
  auto holds = [&](std::size_t pos, std::string_view marker) {
    return pos < n && m.tokens[pos] == marker;
  };
  if (!holds(m.e1_start_pos, kE1Start) || !holds(m.e1_end_pos, kE1End) ||
      !holds(m.e2_start_pos, kE2Start) || !holds(m.e2_end_pos, kE2End) ||
      m.e1_end_pos <= m.e1_start_pos || m.e2_end_pos <= m.e2_start_pos) {
    throw Error(Errc::kMarkerMissing, "marker positions do not hold the four entity markers");
  }
  EncodedInstance e;
  e.e1_marker = vocab.lookup(kE1Start);
  e.e2_marker = vocab.lookup(kE2Start);
  for (const auto& t : m.e1_tokens()) e.e1_tokens.push_back(vocab.lookup(t));
  for (const auto& t : m.e2_tokens()) e.e2_tokens.push_back(vocab.lookup(t));
  e.label = label;
  return e;
}

Eigen::VectorXd forward(const ModelParams& params, const EncodedInstance& instance) {
  return run(params, instance).logits;
}

Eigen::VectorXd forward(const ModelParams& params, const MarkedInstance& instance) {
  return forward(params, encode(params.vocab, instance));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Gradients::Gradients(const ModelParams& p)
    : embeddings(Eigen::MatrixXd::Zero(p.embeddings.rows(), p.embeddings.cols())),
      enc_weight(Eigen::MatrixXd::Zero(p.enc_weight.rows(), p.enc_weight.cols())),
      enc_bias(Eigen::VectorXd::Zero(p.enc_bias.size())),
      head_weight(Eigen::MatrixXd::Zero(p.head_weight.rows(), p.head_weight.cols())),
      head_bias(Eigen::VectorXd::Zero(p.head_bias.size())) {}

void Gradients::set_zero() {
  embeddings.setZero();
  enc_weight.setZero();
  enc_bias.setZero();
  head_weight.setZero();
  head_bias.setZero();
}

double loss_and_gradients(const ModelParams& p, std::span<const EncodedInstance> batch,
                          Gradients& g) {
  g.set_zero();
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  const int h = p.hidden();
  double total = 0.0;
  for (const auto& inst : batch) {
    check_label(p, inst);
    Activations a = run(p, inst);
    total += log_sum_exp(a.logits) - a.logits(inst.label);

    Eigen::VectorXd d_logits = softmax(a.logits);
    d_logits(inst.label) -= 1.0;
    d_logits *= scale;
    g.head_bias += d_logits;
    g.head_weight.leftCols(h).noalias() += d_logits * a.s1.transpose();
    g.head_weight.rightCols(h).noalias() += d_logits * a.s2.transpose();

    auto backprop_entity = [&](const Eigen::VectorXd& d_s, const Eigen::VectorXd& s,
                               const Eigen::VectorXd& x, int marker,
                               const std::vector<int>& tokens) {
      Eigen::VectorXd d_pre = (d_s.array() * (1.0 - s.array().square())).matrix();
      g.enc_bias += d_pre;
      g.enc_weight.noalias() += d_pre * x.transpose();
      Eigen::VectorXd d_x = p.enc_weight.transpose() * d_pre;
      g.embeddings.row(marker) += d_x.transpose();
      if (!tokens.empty()) {
        const double share = 1.0 / static_cast<double>(tokens.size());
        for (int t : tokens) g.embeddings.row(t) += share * d_x.transpose();
      }
    };
    Eigen::VectorXd d_s1 = p.head_weight.leftCols(h).transpose() * d_logits;
    Eigen::VectorXd d_s2 = p.head_weight.rightCols(h).transpose() * d_logits;
    backprop_entity(d_s1, a.s1, a.x1, inst.e1_marker, inst.e1_tokens);
    backprop_entity(d_s2, a.s2, a.x2, inst.e2_marker, inst.e2_tokens);
  }
  return total * scale;
}

double loss(const ModelParams& p, std::span<const EncodedInstance> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& inst : batch) {
    check_label(p, inst);
    Eigen::VectorXd logits = forward(p, inst);
    total += log_sum_exp(logits) - logits(inst.label);
  }
  return total / static_cast<double>(batch.size());
}

int predict(const ModelParams& params, const EncodedInstance& instance) {
  Eigen::VectorXd logits = forward(params, instance);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits(k) > logits(best)) best = k;
  }
  return static_cast<int>(best);
}

}  // namespace sdpforge
