#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wordcode/types.hpp"

namespace wordcode {

/// Mixture-of-softmaxes output layer over a shared output embedding W
/// (V_out × d): mixture k scores words with softmax(W·tanh(W_h[k]·g)) and
/// the priors are a softmax over g·w_pi[k].
struct MosParams {
  Matrix w;                  // V_out × d
  std::vector<Matrix> w_h;   // per mixture, d × d_g
  std::vector<Vector> w_pi;  // per mixture, d_g

  int m_mix() const { return static_cast<int>(w_h.size()); }
  int v_out() const { return static_cast<int>(w.rows()); }
  int d() const { return static_cast<int>(w.cols()); }
  int d_g() const { return w_h.empty() ? 0 : static_cast<int>(w_h[0].cols()); }
};

/// softmax(W·h): probability of each output row's embedding against h.
Vector softmax_probs(const Vector& h, const Matrix& w);

/// Eq-by-eq mixture: priors softmax(g·w_pi[k]), components
/// softmax_probs(tanh(W_h[k]·g), W), output their convex combination.
Vector mos_probs(const Vector& g, const MosParams& params);

/// Throws unless every row log-sum-exps to 0 within 1e-9.
void check_log_prob_matrix(const Matrix& log_probs);

/// Row-wise log-softmax of a random N×V matrix of the given rank (product
/// of N×rank and rank×V standard normal factors). The log-prob matrix has
/// numerical rank at most rank + 1 (the normalizer shift).
Matrix synthetic_log_prob_matrix(int n, int v_out, int rank,
                                 std::uint64_t seed);

/// Count of singular values above rel_tol × the largest singular value.
int numerical_rank(const Matrix& m, Scalar rel_tol);

enum class OutputModel { kSingle, kMos };

/// Everything the fit optimizes. For kSingle only h (the contexts, N × d)
/// and mos.w are live, making the logits literally the factorization H·Wᵀ;
/// for kMos the contexts are d_g-wide and feed the full mixture.
struct OutputLayerParams {
  OutputModel model = OutputModel::kSingle;
  Matrix h;  // N × d contexts, one row per truth row
  MosParams mos;
};

/// N × V_out log-probabilities the parameters currently assign.
Matrix model_log_probs(const OutputLayerParams& params);

/// Mean over rows of KL(truth row ‖ model row), in nats, with the gradient
/// in the same shape as the parameters.
std::pair<Scalar, OutputLayerParams> fit_loss_and_grad(
    const Matrix& truth_log_probs, const OutputLayerParams& params);

struct FitConfig {
  OutputModel model = OutputModel::kSingle;
  int m_mix = 1;  // mixtures when model is kMos
  int d = 2;
  // Context width for the mixture model (0 = use d). The single-softmax
  // contexts are always d-wide: that model IS the rank-d factorization,
  // while the mixture projects a wider context down to d per component.
  int d_g = 0;
  int iters = 4000;
  Scalar lr = 1.0;
  std::uint64_t seed = 1;
  Scalar init_scale = 0.1;
};

struct FittedOutputLayer {
  OutputLayerParams params;
  Scalar mean_kl = 0;
  Matrix log_probs;  // fitted N × V_out log outputs
};

/// Full-batch gradient descent on mean KL from a seeded random start.
/// Deterministic; throws TrainingDivergedError if the loss leaves the
/// finite range.
FittedOutputLayer fit_output_layer(const Matrix& truth_log_probs,
                                   const FitConfig& cfg);

struct BottleneckConfig {
  int n_contexts = 16;
  int v_out = 16;
  int truth_rank = 8;
  int d = 2;
  int d_g = 16;  // mixture context width; matches v_out at desk scale
  std::vector<int> m_mixes = {4};  // MoS variants; single always runs
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int iters = 80000;  // enough for the mixture to pull well clear of the
                      // single softmax's rank floor at the sizes above
  Scalar lr = 1.0;
  Scalar rank_rel_tol = 1e-6;
};

struct BottleneckRecord {
  std::string model;  // "single" or "mos"
  int m_mix = 1;
  int d = 0;
  Scalar kl = 0;
  int rank = 0;
};

struct BottleneckReport {
  std::vector<BottleneckRecord> records;  // per seed: single, then each mos
};

/// Fits every configured model against a fresh synthetic truth per seed and
/// records mean KL plus the numerical rank of the fitted log outputs.
BottleneckReport bottleneck_report(const BottleneckConfig& cfg);

/// One record per line: `model<TAB>M_mix<TAB>d<TAB>kl<TAB>rank`.
std::string format_report(const BottleneckReport& report);
BottleneckReport parse_report(std::string_view text);

}  // namespace wordcode
