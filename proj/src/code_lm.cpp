#include "wordcode/code_lm.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "text_format.hpp"
#include "wordcode/errors.hpp"
#include "wordcode/numeric.hpp"

namespace wordcode {
namespace {

template <class F>
void for_each_pair(CodeLmParams& a, const CodeLmParams& b, F&& f) {
  f(a.emb, b.emb);
  f(a.w_hh, b.w_hh);
  f(a.w_xh, b.w_xh);
  f(a.b_h, b.b_h);
  f(a.u, b.u);
  f(a.b_o, b.b_o);
}

CodeLmParams zeros_like(const CodeLmParams& p) {
  CodeLmParams z;
  z.emb = Matrix::Zero(p.emb.rows(), p.emb.cols());
  z.w_hh = Matrix::Zero(p.w_hh.rows(), p.w_hh.cols());
  z.w_xh = Matrix::Zero(p.w_xh.rows(), p.w_xh.cols());
  z.b_h = Vector::Zero(p.b_h.size());
  z.u = Matrix::Zero(p.u.rows(), p.u.cols());
  z.b_o = Vector::Zero(p.b_o.size());
  return z;
}

void check_code(const CodeLmParams& params, CodeId code) {
  if (code < 0 || code >= params.n_codes())
    throw ArgumentError("code " + std::to_string(code) +
                        " outside dictionary of size " +
                        std::to_string(params.n_codes()));
}

}  // namespace

CodeLmParams init_lm(int n_codes, int d_emb, int d_hid, std::uint64_t seed) {
  if (n_codes < 1 || d_emb < 1 || d_hid < 1)
    throw ArgumentError("init_lm: dimensions must be ≥ 1");
  CodeLmParams p;
  p.emb.resize(n_codes, d_emb);
  p.w_hh.resize(d_hid, d_hid);
  p.w_xh.resize(d_emb, d_hid);
  p.b_h.resize(d_hid);
  p.u.resize(n_codes, d_hid);
  p.b_o.resize(n_codes);
  Rng rng(seed);
  p.for_each_tensor([&](auto& t) {
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) t(r, c) = rng.uniform(-0.08, 0.08);
  });
  return p;
}

std::pair<LmState, Vector> lm_begin(const CodeLmParams& params) {
  LmState state{params.b_h.array().tanh().matrix()};
  Vector logits = params.u * state.h + params.b_o;
  return {std::move(state), log_softmax_vec(logits)};
}

std::pair<LmState, Vector> lm_step(const CodeLmParams& params,
                                   const LmState& state, CodeId code) {
  check_code(params, code);
  if (state.h.size() != params.d_hid())
    throw ContractError("lm_step: state dimension mismatch");
  Vector pre = params.w_hh * state.h +
               params.w_xh.transpose() * params.emb.row(code).transpose() +
               params.b_h;
  LmState next{pre.array().tanh().matrix()};
  Vector logits = params.u * next.h + params.b_o;
  return {std::move(next), log_softmax_vec(logits)};
}

std::pair<Scalar, CodeLmParams> lm_loss_and_grad(
    const CodeLmParams& params, const std::vector<CodeSeq>& batch) {
  if (batch.empty()) throw ArgumentError("lm_loss_and_grad: empty batch");
  std::int64_t total_codes = 0;
  for (const CodeSeq& seq : batch) {
    total_codes += static_cast<std::int64_t>(seq.size());
    for (CodeId code : seq) check_code(params, code);
  }
  if (total_codes == 0)
    throw ArgumentError("lm_loss_and_grad: batch has no codes");

  const Scalar scale = Scalar(1) / static_cast<Scalar>(total_codes);
  const int d_hid = params.d_hid();
  Scalar loss = 0;
  CodeLmParams grad = zeros_like(params);

  for (const CodeSeq& seq : batch) {
    const Index T = static_cast<Index>(seq.size());
    if (T == 0) continue;

    Matrix h(d_hid, T);    // hidden states, one column per position
    Matrix p(params.n_codes(), T);  // output softmax per position
    for (Index t = 0; t < T; ++t) {
      Vector pre = params.b_h;
      if (t > 0)
        pre += params.w_hh * h.col(t - 1) +
               params.w_xh.transpose() *
                   params.emb.row(seq[static_cast<std::size_t>(t - 1)])
                       .transpose();
      h.col(t) = pre.array().tanh().matrix();
      Vector logits = params.u * h.col(t) + params.b_o;
      Vector lp = log_softmax_vec(logits);
      loss -= scale * lp(seq[static_cast<std::size_t>(t)]);
      p.col(t) = lp.array().exp().matrix();
    }

    Vector dh = Vector::Zero(d_hid);
    for (Index t = T - 1; t >= 0; --t) {
      Vector dlogit = scale * p.col(t);
      dlogit(seq[static_cast<std::size_t>(t)]) -= scale;
      grad.u += dlogit * h.col(t).transpose();
      grad.b_o += dlogit;
      dh += params.u.transpose() * dlogit;
      Vector da =
          (dh.array() * (1 - h.col(t).array().square())).matrix();
      grad.b_h += da;
      if (t > 0) {
        const CodeId prev = seq[static_cast<std::size_t>(t - 1)];
        grad.w_hh += da * h.col(t - 1).transpose();
        grad.w_xh += params.emb.row(prev).transpose() * da.transpose();
        grad.emb.row(prev) += (params.w_xh * da).transpose();
        dh = params.w_hh.transpose() * da;
      }
    }
  }
  return {loss, std::move(grad)};
}

TrainResult train_lm(CodeLmParams params, const EncodedCorpus& corpus,
                     const TrainConfig& cfg) {
  if (cfg.lr < 0) throw ArgumentError("train_lm: negative learning rate");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.clip_norm <= 0)
    throw ArgumentError("train_lm: epochs, batch size, clip norm must be positive");

  std::vector<const CodeSeq*> streams;
  for (const CodeSeq& s : corpus.streams)
    if (!s.empty()) streams.push_back(&s);
  if (streams.empty()) throw ArgumentError("train_lm: corpus has no codes");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(streams.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    Scalar epoch_nll = 0;
    std::int64_t epoch_codes = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<CodeSeq> batch;
      std::int64_t batch_codes = 0;
      for (std::size_t i = start;
           i < order.size() && i < start + static_cast<std::size_t>(cfg.batch_size);
           ++i) {
        batch.push_back(*streams[order[i]]);
        batch_codes += static_cast<std::int64_t>(batch.back().size());
      }
      auto [loss, grad] = lm_loss_and_grad(params, batch);
      if (!std::isfinite(loss))
        throw TrainingDivergedError("train_lm: non-finite loss", epoch);
      epoch_nll += loss * static_cast<Scalar>(batch_codes);
      epoch_codes += batch_codes;

      Scalar sq = 0;
      grad.for_each_tensor([&](const auto& t) { sq += t.squaredNorm(); });
      Scalar norm = std::sqrt(sq);
      Scalar step = cfg.lr;
      if (norm > cfg.clip_norm) step *= cfg.clip_norm / norm;
      for_each_pair(params, grad,
                    [&](auto& dst, const auto& g) { dst -= step * g; });
    }
    result.history.push_back(epoch_nll / static_cast<Scalar>(epoch_codes));
  }
  result.params = std::move(params);
  return result;
}

Matrix CodeLmScorer::predictive_log_probs(const CodeSeq& codes) const {
  Matrix out(static_cast<Index>(codes.size()), params_.n_codes());
  if (codes.empty()) return out;
  auto [state, lp] = lm_begin(params_);
  out.row(0) = lp.transpose();
  for (std::size_t t = 1; t < codes.size(); ++t) {
    std::tie(state, lp) = lm_step(params_, state, codes[t - 1]);
    out.row(static_cast<Index>(t)) = lp.transpose();
  }
  return out;
}

std::string format_checkpoint(const CodeLmParams& params) {
  std::string out = "#codelm-v1 " + std::to_string(params.n_codes()) + " " +
                    std::to_string(params.d_emb()) + " " +
                    std::to_string(params.d_hid()) + "\n";
  params.for_each_tensor([&](const auto& t) {
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) {
        if (r != 0 || c != 0) out += ' ';
        out += fmt_double(t(r, c));
      }
    out += '\n';
  });
  return out;
}

CodeLmParams parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line))
    throw ArgumentError("parse_checkpoint: empty input");
  std::istringstream header(line);
  std::string magic;
  int n_codes = 0, d_emb = 0, d_hid = 0;
  if (!(header >> magic >> n_codes >> d_emb >> d_hid) ||
      magic != "#codelm-v1")
    throw ArgumentError("parse_checkpoint: missing #codelm-v1 header");
  if (n_codes < 1 || d_emb < 1 || d_hid < 1)
    throw ArgumentError("parse_checkpoint: bad dimensions");

  CodeLmParams p;
  p.emb.resize(n_codes, d_emb);
  p.w_hh.resize(d_hid, d_hid);
  p.w_xh.resize(d_emb, d_hid);
  p.b_h.resize(d_hid);
  p.u.resize(n_codes, d_hid);
  p.b_o.resize(n_codes);
  p.for_each_tensor([&](auto& t) {
    if (!std::getline(in, line))
      throw ArgumentError("parse_checkpoint: truncated tensor data");
    const char* s = line.c_str();
    for (Index r = 0; r < t.rows(); ++r)
      for (Index c = 0; c < t.cols(); ++c) {
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end == s || !std::isfinite(v))
          throw ArgumentError("parse_checkpoint: bad value");
        t(r, c) = v;
        s = end;
      }
    while (*s == ' ') ++s;
    if (*s != '\0')
      throw ArgumentError("parse_checkpoint: trailing data in tensor line");
  });
  if (std::getline(in, line) && !line.empty())
    throw ArgumentError("parse_checkpoint: trailing data");
  return p;
}

void save_checkpoint(const CodeLmParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_checkpoint(params);
  if (!out.flush()) throw IoError("failed writing " + path);
}

CodeLmParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace wordcode
