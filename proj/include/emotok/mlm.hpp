#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emotok/adam.hpp"
#include "emotok/rng.hpp"
#include "emotok/tokenizer.hpp"

namespace emotok {

struct MlmError : std::runtime_error {
  explicit MlmError(const std::string& what) : std::runtime_error(what) {}
};

struct MaskingConfig {
  double select_rate = 0.15;
  double mask_prob = 0.8;
  double random_prob = 0.1;
  double keep_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (std::abs(mask_prob + random_prob + keep_prob - 1.0) > 1e-12)
      throw MlmError("masking probabilities must sum to 1");
    if (!(select_rate >= 0.0 && select_rate <= 1.0))
      throw MlmError("select_rate must lie in [0, 1]");
  }
};

constexpr TokenId kIgnoreLabel = -1;

struct MaskedBatch {
  std::vector<TokenId> input_ids;  // ids after corruption
  std::vector<TokenId> labels;     // original id at selected positions, else ignore
};

// 80/10/10 corruption of maskable positions. Selected positions become [MASK]
// with mask_prob, a uniform non-special id with random_prob, or stay put.
inline MaskedBatch apply_masking(const TokenizedSequence& seq, const MaskingConfig& cfg,
                                 const Vocabulary& vocab, std::mt19937_64& rng) {
  cfg.validate();
  MaskedBatch batch;
  batch.input_ids = seq.ids;
  batch.labels.assign(seq.ids.size(), kIgnoreLabel);

  std::vector<TokenId> non_special;
  non_special.reserve(vocab.size());
  for (TokenId id = 0; id < static_cast<TokenId>(vocab.size()); ++id)
    if (!vocab.is_special(id)) non_special.push_back(id);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (!seq.maskable[i] || seq.ids[i] == vocab.pad_id()) continue;
    if (unit(rng) >= cfg.select_rate) continue;
    batch.labels[i] = seq.ids[i];
    const double action = unit(rng);
    if (action < cfg.mask_prob) {
      batch.input_ids[i] = vocab.mask_id();
    } else if (action < cfg.mask_prob + cfg.random_prob) {
      if (non_special.empty()) throw MlmError("vocabulary has no non-special tokens");
      std::uniform_int_distribution<std::size_t> pick(0, non_special.size() - 1);
      batch.input_ids[i] = non_special[pick(rng)];
    }
    // else: keep the original token
  }
  return batch;
}

// Bag-of-context masked LM: one embedding table doubles as input features and
// output weights. Logits for every labeled position of a sequence are
// (mean of context embeddings) . E^T + bias, context being the non-pad,
// non-labeled positions. Deliberately tiny; it exists so emoji tokens can earn
// distinct learned vectors, not to approximate a transformer.
class TinyMLM {
 public:
  TinyMLM() = default;

  TinyMLM(std::size_t vocab_size, std::size_t dim, std::uint64_t seed)
      : vocab_size_(vocab_size), dim_(dim), params_(vocab_size * dim + vocab_size, 0.0) {
    auto rng = make_rng(seed, "init");
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (std::size_t i = 0; i < vocab_size_ * dim_; ++i) params_[i] = u(rng);
  }

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t dim() const { return dim_; }
  std::size_t n_params() const { return params_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  const double* embedding(TokenId id) const { return params_.data() + id * dim_; }
  double bias(TokenId id) const { return params_[vocab_size_ * dim_ + id]; }

  nlohmann::json to_json() const {
    return nlohmann::json{{"magic", "EMOTOK-MLM-1"},
                          {"vocab_size", vocab_size_},
                          {"dim", dim_},
                          {"params", params_}};
  }

  static TinyMLM from_json(const nlohmann::json& doc) {
    if (doc.value("magic", "") != std::string("EMOTOK-MLM-1"))
      throw MlmError("checkpoint magic mismatch, expected EMOTOK-MLM-1");
    TinyMLM m;
    m.vocab_size_ = doc.at("vocab_size").get<std::size_t>();
    m.dim_ = doc.at("dim").get<std::size_t>();
    m.params_ = doc.at("params").get<std::vector<double>>();
    if (m.params_.size() != m.vocab_size_ * m.dim_ + m.vocab_size_)
      throw MlmError("checkpoint parameter count mismatch");
    return m;
  }

 private:
  std::size_t vocab_size_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> params_;
};

struct MlmLossStats {
  double ce_sum = 0.0;        // summed cross-entropy over labeled positions
  std::size_t n_labeled = 0;
  bool empty_warning = false; // set when a batch had no labeled positions
};

namespace detail {

struct SequenceForward {
  std::vector<double> context;  // mean context embedding, size dim
  std::vector<double> logits;   // size |V|
  std::vector<double> probs;    // softmax(logits)
  std::vector<std::size_t> context_positions;
  std::vector<std::size_t> labeled_positions;
  double log_z = 0.0;
};

inline SequenceForward mlm_forward(const TinyMLM& model, const MaskedBatch& batch,
                                   TokenId pad_id) {
  if (batch.input_ids.size() != batch.labels.size())
    throw MlmError("batch ids/labels length mismatch");
  const std::size_t V = model.vocab_size();
  const std::size_t d = model.dim();
  SequenceForward f;
  f.context.assign(d, 0.0);
  for (std::size_t i = 0; i < batch.input_ids.size(); ++i) {
    const TokenId id = batch.input_ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= V)
      throw MlmError("token id out of range for model vocabulary");
    if (batch.labels[i] != kIgnoreLabel) {
      f.labeled_positions.push_back(i);
    } else if (id != pad_id) {
      f.context_positions.push_back(i);
    }
  }
  if (!f.context_positions.empty()) {
    for (std::size_t i : f.context_positions) {
      const double* e = model.embedding(batch.input_ids[i]);
      for (std::size_t k = 0; k < d; ++k) f.context[k] += e[k];
    }
    const double inv = 1.0 / static_cast<double>(f.context_positions.size());
    for (std::size_t k = 0; k < d; ++k) f.context[k] *= inv;
  }
  f.logits.resize(V);
  double max_logit = -1e300;
  for (std::size_t v = 0; v < V; ++v) {
    const double* e = model.embedding(static_cast<TokenId>(v));
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += e[k] * f.context[k];
    f.logits[v] = dot + model.bias(static_cast<TokenId>(v));
    if (f.logits[v] > max_logit) max_logit = f.logits[v];
  }
  std::vector<double> expv(V);
  for (std::size_t v = 0; v < V; ++v) expv[v] = std::exp(f.logits[v] - max_logit);
  const double z = pairwise_sum(expv);
  f.log_z = max_logit + std::log(z);
  f.probs.resize(V);
  for (std::size_t v = 0; v < V; ++v) f.probs[v] = expv[v] / z;
  return f;
}

}  // namespace detail

inline MlmLossStats mlm_loss_stats(const TinyMLM& model, const MaskedBatch& batch,
                                   TokenId pad_id) {
  MlmLossStats stats;
  const auto f = detail::mlm_forward(model, batch, pad_id);
  if (f.labeled_positions.empty()) {
    stats.empty_warning = true;
    return stats;
  }
  std::vector<double> ces;
  ces.reserve(f.labeled_positions.size());
  for (std::size_t p : f.labeled_positions)
    ces.push_back(f.log_z - f.logits[batch.labels[p]]);
  stats.ce_sum = pairwise_sum(ces);
  stats.n_labeled = ces.size();
  return stats;
}

// Mean cross-entropy over labeled positions; 0 (with the warning flag in the
// stats variant) when nothing is labeled.
inline double mlm_loss(const TinyMLM& model, const MaskedBatch& batch, TokenId pad_id) {
  const auto stats = mlm_loss_stats(model, batch, pad_id);
  return stats.n_labeled == 0 ? 0.0 : stats.ce_sum / static_cast<double>(stats.n_labeled);
}

// Analytic gradient of mlm_loss w.r.t. the flat parameter vector (embeddings
// then biases). Returns loss; grad is accumulated into `grad` (must be zeroed
// by the caller if a fresh gradient is wanted).
inline double mlm_loss_grad(const TinyMLM& model, const MaskedBatch& batch, TokenId pad_id,
                            std::vector<double>& grad) {
  if (grad.size() != model.n_params()) throw MlmError("gradient buffer size mismatch");
  const std::size_t V = model.vocab_size();
  const std::size_t d = model.dim();
  const auto f = detail::mlm_forward(model, batch, pad_id);
  if (f.labeled_positions.empty()) return 0.0;
  const double k = static_cast<double>(f.labeled_positions.size());

  std::vector<double> ces;
  ces.reserve(f.labeled_positions.size());
  std::vector<double> label_counts(V, 0.0);
  for (std::size_t p : f.labeled_positions) {
    ces.push_back(f.log_z - f.logits[batch.labels[p]]);
    label_counts[batch.labels[p]] += 1.0;
  }
  const double loss = pairwise_sum(ces) / k;

  // dL/dlogit_v = p_v - (#labels==v)/k, shared across labeled positions
  std::vector<double> dlogits(V);
  for (std::size_t v = 0; v < V; ++v) dlogits[v] = f.probs[v] - label_counts[v] / k;

  // output path: dE_v += g_v * c, db_v += g_v
  double* gE = grad.data();
  double* gb = grad.data() + V * d;
  for (std::size_t v = 0; v < V; ++v) {
    const double g = dlogits[v];
    gb[v] += g;
    if (g != 0.0) {
      double* row = gE + v * d;
      for (std::size_t kk = 0; kk < d; ++kk) row[kk] += g * f.context[kk];
    }
  }
  // context path: dc = sum_v g_v E_v, spread over context token embeddings
  if (!f.context_positions.empty()) {
    std::vector<double> dcontext(d, 0.0);
    for (std::size_t v = 0; v < V; ++v) {
      const double g = dlogits[v];
      if (g == 0.0) continue;
      const double* e = model.embedding(static_cast<TokenId>(v));
      for (std::size_t kk = 0; kk < d; ++kk) dcontext[kk] += g * e[kk];
    }
    const double inv = 1.0 / static_cast<double>(f.context_positions.size());
    for (std::size_t i : f.context_positions) {
      double* row = gE + static_cast<std::size_t>(batch.input_ids[i]) * d;
      for (std::size_t kk = 0; kk < d; ++kk) row[kk] += dcontext[kk] * inv;
    }
  }
  return loss;
}

struct MlmTrainResult {
  std::vector<double> epoch_losses;  // mean loss per epoch
};

// Per-sequence Adam steps in corpus order; masking is re-drawn each epoch from
// the config seed's "masking" substream, so a run is fully reproducible.
inline MlmTrainResult train_mlm(const std::vector<TokenizedSequence>& corpus,
                                const MaskingConfig& cfg, TinyMLM& model,
                                std::size_t epochs, const Vocabulary& vocab,
                                AdamConfig adam_cfg = {}) {
  if (corpus.empty()) throw MlmError("train_mlm: empty corpus");
  cfg.validate();
  AdamOptimizer opt(model.n_params(), adam_cfg);
  auto rng = make_rng(cfg.seed, "masking");
  MlmTrainResult result;
  std::vector<double> grad(model.n_params(), 0.0);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<double> losses;
    losses.reserve(corpus.size());
    for (const auto& seq : corpus) {
      const MaskedBatch batch = apply_masking(seq, cfg, vocab, rng);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss = mlm_loss_grad(model, batch, vocab.pad_id(), grad);
      bool any_label = false;
      for (TokenId l : batch.labels)
        if (l != kIgnoreLabel) { any_label = true; break; }
      if (!any_label) continue;
      opt.step(model.params(), grad);
      losses.push_back(loss);
    }
    result.epoch_losses.push_back(
        losses.empty() ? 0.0 : pairwise_sum(losses) / static_cast<double>(losses.size()));
  }
  return result;
}

// exp(mean cross-entropy over all labeled positions) under fixed-seed masking.
inline double perplexity(const TinyMLM& model, const std::vector<TokenizedSequence>& corpus,
                         const MaskingConfig& cfg, const Vocabulary& vocab) {
  cfg.validate();
  auto rng = make_rng(cfg.seed, "masking");
  double ce_sum = 0.0;
  std::size_t n = 0;
  for (const auto& seq : corpus) {
    const MaskedBatch batch = apply_masking(seq, cfg, vocab, rng);
    const auto stats = mlm_loss_stats(model, batch, vocab.pad_id());
    ce_sum += stats.ce_sum;
    n += stats.n_labeled;
  }
  if (n == 0) throw MlmError("perplexity: no labeled positions in corpus");
  return std::exp(ce_sum / static_cast<double>(n));
}

inline void save_mlm(const TinyMLM& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw MlmError("cannot write checkpoint: " + path);
  f << model.to_json().dump();
}

inline TinyMLM load_mlm(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MlmError("cannot read checkpoint: " + path);
  nlohmann::json doc;
  f >> doc;
  return TinyMLM::from_json(doc);
}

}  // namespace emotok
