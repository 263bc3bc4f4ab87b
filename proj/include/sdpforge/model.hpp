#pragma once

// Desk-scale relation classifier.
//
// A shared encoder maps the input at each entity start marker to a hidden
// state; the head classifies the concatenation of the two start-marker
// states:
//
//   x_i    = E[marker_i] + mean(E[t] for t in entity span i)    i = 1, 2
//   s_i    = tanh(W_enc x_i + b_enc)
//   logits = W_head [s_1; s_2] + b_head
//
// The encoder is per-position rather than contextual: only the two markers
// and the tokens they enclose influence the logits. Replacing the head
// leaves vocabulary, embeddings and encoder weights untouched.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdpforge/instance_io.hpp"

namespace sdpforge {

class Vocab {
 public:
  static constexpr int kUnknown = 0;

  // Reserved entries first: the unknown bucket, then the four markers. The
  // remaining entries are ordered by descending frequency, ties by string,
  // and capped so the whole vocabulary has at most `max_size` entries.
  static Vocab build(std::span<const std::vector<std::string>> sentences,
                     std::size_t max_size);

  int lookup(std::string_view token) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }
  // Number of entries that are not reserved.
  std::size_t corpus_entries() const { return entries_.size() - 5; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
};

struct ModelDims {
  int embedding = 32;
  int hidden = 32;
  std::size_t max_vocab = 50000;
};

struct ModelParams {
  Vocab vocab;
  Eigen::MatrixXd embeddings;   // V x d, one row per vocabulary entry
  Eigen::MatrixXd enc_weight;   // h x d
  Eigen::VectorXd enc_bias;     // h
  Eigen::MatrixXd head_weight;  // K x 2h
  Eigen::VectorXd head_bias;    // K

  int label_count() const { return static_cast<int>(head_bias.size()); }
  int hidden() const { return static_cast<int>(enc_bias.size()); }
  bool all_finite() const;
  // FNV-1a over the vocabulary and the raw bytes of embeddings and encoder.
  std::uint64_t encoder_hash() const;
  // Number of scalar parameters.
  std::size_t parameter_count() const;
};

// Weights are uniform in [-1, 1] scaled by 1/sqrt(fan-in) (fan-in 1 for the
// embedding table); biases start at zero. The encoder draws from
// derive_seed(seed, "encoder"), the head from derive_seed(seed, "head").
// Throws kEmptyCorpus when the corpus has no tokens and kInvalidConfig when
// label_count < 2.
ModelParams init_model(const ModelDims& dims, int label_count,
                       std::span<const std::vector<std::string>> vocab_corpus,
                       std::uint64_t seed);

ModelParams init_model(const ModelDims& dims, int label_count, Vocab vocab,
                       std::uint64_t seed);

// Fresh head for `label_count` classes drawn from derive_seed(seed, "head").
ModelParams replace_head(ModelParams params, int label_count, std::uint64_t seed);

// A marked instance reduced to what the model reads.
struct EncodedInstance {
  int e1_marker = 0;
  int e2_marker = 0;
  std::vector<int> e1_tokens;
  std::vector<int> e2_tokens;
  int label = -1;
};

// Throws kMarkerMissing if the marker positions do not hold marker tokens.
EncodedInstance encode(const Vocab& vocab, const MarkedInstance& instance,
                       int label = -1);

Eigen::VectorXd forward(const ModelParams& params, const EncodedInstance& instance);
Eigen::VectorXd forward(const ModelParams& params, const MarkedInstance& instance);

// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct Gradients {
  Eigen::MatrixXd embeddings;
  Eigen::MatrixXd enc_weight;
  Eigen::VectorXd enc_bias;
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;

  explicit Gradients(const ModelParams& shape_of);
  void set_zero();
};

// Mean softmax cross-entropy over `batch` (log-sum-exp form) and its exact
// gradient with respect to every parameter. Throws kLabelOutOfRange.
double loss_and_gradients(const ModelParams& params,
                          std::span<const EncodedInstance> batch,
                          Gradients& grads);

double loss(const ModelParams& params, std::span<const EncodedInstance> batch);

int predict(const ModelParams& params, const EncodedInstance& instance);

}  // namespace sdpforge
