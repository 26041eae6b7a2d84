#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wordcode/code_table.hpp"
#include "wordcode/rng.hpp"
#include "wordcode/types.hpp"

namespace wordcode {

/// Single-layer tanh recurrence over code streams:
///   h' = tanh(W_hh·h + W_xhᵀ·emb[code] + b_h)
///   log P(next) = log-softmax(U·h' + b_o)
/// Sentences start from the zero state with a reserved all-zero input
/// vector, so the dictionary stays exactly the code table's.
struct CodeLmParams {
  Matrix emb;   // n_codes × d_emb
  Matrix w_hh;  // d_hid × d_hid
  Matrix w_xh;  // d_emb × d_hid
  Vector b_h;   // d_hid
  Matrix u;     // n_codes × d_hid
  Vector b_o;   // n_codes

  int n_codes() const { return static_cast<int>(emb.rows()); }
  int d_emb() const { return static_cast<int>(emb.cols()); }
  int d_hid() const { return static_cast<int>(b_h.size()); }

  template <class F>
  void for_each_tensor(F&& f) {
    f(emb); f(w_hh); f(w_xh); f(b_h); f(u); f(b_o);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    f(emb); f(w_hh); f(w_xh); f(b_h); f(u); f(b_o);
  }
};

struct LmState {
  Vector h;
};

struct TrainConfig {
  Scalar lr = 0.1;
  int epochs = 10;
  int batch_size = 16;
  Scalar clip_norm = 5.0;
  std::uint64_t seed = 1;
};

/// All tensors uniform in [-0.08, 0.08], drawn in field order.
CodeLmParams init_lm(int n_codes, int d_emb, int d_hid, std::uint64_t seed);

/// Sentence start: the state after the reserved zero input, plus the
/// predictive log-probabilities for the first code.
std::pair<LmState, Vector> lm_begin(const CodeLmParams& params);

/// Consume one code and return the next state with the predictive
/// log-probabilities for the following position.
std::pair<LmState, Vector> lm_step(const CodeLmParams& params,
                                   const LmState& state, CodeId code);

/// Mean per-code negative log-likelihood over the batch and its gradient,
/// computed by backpropagation through time. Deterministic.
std::pair<Scalar, CodeLmParams> lm_loss_and_grad(
    const CodeLmParams& params, const std::vector<CodeSeq>& batch);

struct TrainResult {
  CodeLmParams params;
  std::vector<Scalar> history;  // per-epoch mean per-code NLL
};

/// Plain SGD with global gradient-norm clipping. Sequence order is
/// reshuffled each epoch from cfg.seed; the run replays exactly.
TrainResult train_lm(CodeLmParams params, const EncodedCorpus& corpus,
                     const TrainConfig& cfg);

/// CodeSequenceModel view of trained parameters.
class CodeLmScorer : public CodeSequenceModel {
 public:
  explicit CodeLmScorer(CodeLmParams params) : params_(std::move(params)) {}

  int n_codes() const override { return params_.n_codes(); }
  Matrix predictive_log_probs(const CodeSeq& codes) const override;

  const CodeLmParams& params() const { return params_; }

 private:
  CodeLmParams params_;
};

/// Line 1 `#codelm-v1 n_codes d_emb d_hid`, then one line per tensor in
/// field order (embedding, W_hh, W_xh, b_h, U, b_o), row-major decimal
/// values. Round trips are value-exact.
std::string format_checkpoint(const CodeLmParams& params);
CodeLmParams parse_checkpoint(std::string_view text);
void save_checkpoint(const CodeLmParams& params, const std::string& path);
CodeLmParams load_checkpoint(const std::string& path);

}  // namespace wordcode
