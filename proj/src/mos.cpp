#include "wordcode/mos.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "text_format.hpp"
#include "wordcode/errors.hpp"
#include "wordcode/numeric.hpp"
#include "wordcode/rng.hpp"

namespace wordcode {
namespace {

void check_mos_dims(const Vector& g, const MosParams& p) {
  if (p.m_mix() < 1) throw ArgumentError("mos: at least one mixture required");
  if (p.w_pi.size() != p.w_h.size())
    throw ContractError("mos: w_h and w_pi mixture counts differ");
  for (int k = 0; k < p.m_mix(); ++k) {
    if (p.w_h[static_cast<std::size_t>(k)].rows() != p.d() ||
        p.w_h[static_cast<std::size_t>(k)].cols() != g.size() ||
        p.w_pi[static_cast<std::size_t>(k)].size() != g.size())
      throw ContractError("mos: mixture " + std::to_string(k) +
                          " has inconsistent dimensions");
  }
}

Matrix normal_matrix(Index rows, Index cols, Scalar scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

OutputLayerParams zeros_like(const OutputLayerParams& p) {
  OutputLayerParams z;
  z.model = p.model;
  z.h = Matrix::Zero(p.h.rows(), p.h.cols());
  z.mos.w = Matrix::Zero(p.mos.w.rows(), p.mos.w.cols());
  for (const Matrix& wh : p.mos.w_h)
    z.mos.w_h.push_back(Matrix::Zero(wh.rows(), wh.cols()));
  for (const Vector& wp : p.mos.w_pi)
    z.mos.w_pi.push_back(Vector::Zero(wp.size()));
  return z;
}

}  // namespace

Vector softmax_probs(const Vector& h, const Matrix& w) {
  if (w.cols() != h.size())
    throw ContractError("softmax_probs: embedding width " +
                        std::to_string(w.cols()) +
                        " does not match context dimension " +
                        std::to_string(h.size()));
  Vector logits = w * h;
  return softmax_vec(logits);
}

Vector mos_probs(const Vector& g, const MosParams& params) {
  check_mos_dims(g, params);
  const int m = params.m_mix();
  Vector a(m);
  for (int k = 0; k < m; ++k)
    a(k) = params.w_pi[static_cast<std::size_t>(k)].dot(g);
  Vector pi = softmax_vec(a);
  Vector out = Vector::Zero(params.v_out());
  for (int k = 0; k < m; ++k) {
    Vector hk =
        (params.w_h[static_cast<std::size_t>(k)] * g).array().tanh().matrix();
    out += pi(k) * softmax_probs(hk, params.w);
  }
  return out;
}

void check_log_prob_matrix(const Matrix& log_probs) {
  for (Index i = 0; i < log_probs.rows(); ++i) {
    const Scalar lse = log_sum_exp(log_probs.row(i).transpose());
    if (std::abs(lse) > 1e-9)
      throw ArgumentError("log-prob matrix row " + std::to_string(i) +
                          " sums to exp(" + std::to_string(lse) + ") ≠ 1");
  }
}

Matrix synthetic_log_prob_matrix(int n, int v_out, int rank,
                                 std::uint64_t seed) {
  if (n < 1 || v_out < 1 || rank < 1 || rank > std::min(n, v_out))
    throw ArgumentError("synthetic_log_prob_matrix: need 1 ≤ rank ≤ min(N, V)");
  Rng rng(seed);
  Matrix left = normal_matrix(n, rank, 1.0, rng);
  Matrix right = normal_matrix(rank, v_out, 1.0, rng);
  Matrix a = left * right;
  for (Index i = 0; i < a.rows(); ++i)
    a.row(i) = log_softmax_vec(a.row(i).transpose()).transpose();
  return a;
}

int numerical_rank(const Matrix& m, Scalar rel_tol) {
  if (m.size() == 0) return 0;
  if (!m.allFinite()) throw ArgumentError("numerical_rank: non-finite matrix");
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return 0;
  int rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++rank;
  return rank;
}

Matrix model_log_probs(const OutputLayerParams& params) {
  const Index n = params.h.rows();
  const Index v = params.mos.w.rows();
  Matrix out(n, v);
  if (params.model == OutputModel::kSingle) {
    Matrix logits = params.h * params.mos.w.transpose();
    for (Index i = 0; i < n; ++i)
      out.row(i) = log_softmax_vec(logits.row(i).transpose()).transpose();
    return out;
  }
  const int m = params.mos.m_mix();
  for (Index i = 0; i < n; ++i) {
    Vector g = params.h.row(i).transpose();
    check_mos_dims(g, params.mos);
    Vector a(m);
    for (int k = 0; k < m; ++k)
      a(k) = params.mos.w_pi[static_cast<std::size_t>(k)].dot(g);
    Vector lpi = log_softmax_vec(a);
    Matrix lc(m, v);
    for (int k = 0; k < m; ++k) {
      Vector hk = (params.mos.w_h[static_cast<std::size_t>(k)] * g)
                      .array()
                      .tanh()
                      .matrix();
      Vector zk = params.mos.w * hk;
      lc.row(k) = log_softmax_vec(zk).transpose();
    }
    for (Index j = 0; j < v; ++j) {
      Vector terms = lc.col(j) + lpi;
      out(i, j) = log_sum_exp(terms);
    }
  }
  return out;
}

std::pair<Scalar, OutputLayerParams> fit_loss_and_grad(
    const Matrix& truth_log_probs, const OutputLayerParams& params) {
  const Index n = truth_log_probs.rows();
  const Index v = truth_log_probs.cols();
  if (params.h.rows() != n)
    throw ContractError("fit_loss_and_grad: context count mismatch");
  if (params.mos.w.rows() != v)
    throw ContractError("fit_loss_and_grad: output size mismatch");
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);

  Scalar loss = 0;
  OutputLayerParams grad = zeros_like(params);

  if (params.model == OutputModel::kSingle) {
    for (Index i = 0; i < n; ++i) {
      Vector h = params.h.row(i).transpose();
      Vector z = params.mos.w * h;
      Vector lm = log_softmax_vec(z);
      Vector m = lm.array().exp().matrix();
      Vector t = truth_log_probs.row(i).array().exp().matrix();
      for (Index j = 0; j < v; ++j)
        if (t(j) > 0) loss += inv_n * t(j) * (truth_log_probs(i, j) - lm(j));
      Vector dz = inv_n * (m - t);
      grad.mos.w += dz * h.transpose();
      grad.h.row(i) += (params.mos.w.transpose() * dz).transpose();
    }
    return {loss, std::move(grad)};
  }

  const int mix = params.mos.m_mix();
  for (Index i = 0; i < n; ++i) {
    Vector g = params.h.row(i).transpose();
    check_mos_dims(g, params.mos);
    Vector a(mix);
    for (int k = 0; k < mix; ++k)
      a(k) = params.mos.w_pi[static_cast<std::size_t>(k)].dot(g);
    Vector lpi = log_softmax_vec(a);
    Vector pi = lpi.array().exp().matrix();

    Matrix hk(params.mos.d(), mix), ck(v, mix);
    for (int k = 0; k < mix; ++k) {
      hk.col(k) = (params.mos.w_h[static_cast<std::size_t>(k)] * g)
                      .array()
                      .tanh()
                      .matrix();
      Vector zk = params.mos.w * hk.col(k);
      ck.col(k) = log_softmax_vec(zk).array().exp().matrix();
    }
    Vector m = ck * pi;  // mixture probabilities
    Vector t = truth_log_probs.row(i).array().exp().matrix();
    for (Index j = 0; j < v; ++j)
      if (t(j) > 0)
        loss += inv_n * t(j) * (truth_log_probs(i, j) - std::log(m(j)));

    Vector dm = (-inv_n) * (t.array() / m.array()).matrix();
    Vector dg = Vector::Zero(g.size());

    Vector dpi = ck.transpose() * dm;
    Vector da = (pi.array() * (dpi.array() - pi.dot(dpi))).matrix();
    for (int k = 0; k < mix; ++k) {
      grad.mos.w_pi[static_cast<std::size_t>(k)] += da(k) * g;
      dg += da(k) * params.mos.w_pi[static_cast<std::size_t>(k)];
    }

    for (int k = 0; k < mix; ++k) {
      Vector dck = pi(k) * dm;
      Vector c = ck.col(k);
      Vector dz = (c.array() * (dck.array() - c.dot(dck))).matrix();
      grad.mos.w += dz * hk.col(k).transpose();
      Vector dhk = params.mos.w.transpose() * dz;
      Vector dpre =
          (dhk.array() * (1 - hk.col(k).array().square())).matrix();
      grad.mos.w_h[static_cast<std::size_t>(k)] += dpre * g.transpose();
      dg += params.mos.w_h[static_cast<std::size_t>(k)].transpose() * dpre;
    }
    grad.h.row(i) += dg.transpose();
  }
  return {loss, std::move(grad)};
}

FittedOutputLayer fit_output_layer(const Matrix& truth_log_probs,
                                   const FitConfig& cfg) {
  check_log_prob_matrix(truth_log_probs);
  if (cfg.d < 1 || cfg.d_g < 0 || cfg.iters < 1 || cfg.lr < 0 ||
      (cfg.model == OutputModel::kMos && cfg.m_mix < 1))
    throw ArgumentError("fit_output_layer: bad configuration");
  const Index n = truth_log_probs.rows();
  const Index v = truth_log_probs.cols();
  // The single softmax IS the rank-d factorization, so its contexts are
  // d-wide by definition; the mixture projects a wider context down to d
  // inside each component.
  const int dg = (cfg.model == OutputModel::kMos && cfg.d_g > 0) ? cfg.d_g
                                                                 : cfg.d;

  Rng rng(cfg.seed);
  OutputLayerParams p;
  p.model = cfg.model;
  p.h = normal_matrix(n, dg, cfg.init_scale, rng);
  p.mos.w = normal_matrix(v, cfg.d, cfg.init_scale, rng);
  if (cfg.model == OutputModel::kMos) {
    for (int k = 0; k < cfg.m_mix; ++k) {
      p.mos.w_h.push_back(normal_matrix(cfg.d, dg, cfg.init_scale, rng));
      p.mos.w_pi.push_back(
          normal_matrix(dg, 1, cfg.init_scale, rng).col(0));
    }
  }

  for (int it = 0; it < cfg.iters; ++it) {
    auto [loss, grad] = fit_loss_and_grad(truth_log_probs, p);
    if (!std::isfinite(loss))
      throw TrainingDivergedError("fit_output_layer: non-finite loss", it);
    p.h -= cfg.lr * grad.h;
    p.mos.w -= cfg.lr * grad.mos.w;
    for (std::size_t k = 0; k < p.mos.w_h.size(); ++k) {
      p.mos.w_h[k] -= cfg.lr * grad.mos.w_h[k];
      p.mos.w_pi[k] -= cfg.lr * grad.mos.w_pi[k];
    }
  }

  FittedOutputLayer out;
  Scalar final_loss = fit_loss_and_grad(truth_log_probs, p).first;
  if (!std::isfinite(final_loss))
    throw TrainingDivergedError("fit_output_layer: non-finite final loss",
                                cfg.iters);
  out.params = std::move(p);
  out.mean_kl = final_loss;
  out.log_probs = model_log_probs(out.params);
  return out;
}

BottleneckReport bottleneck_report(const BottleneckConfig& cfg) {
  BottleneckReport report;
  for (std::uint64_t seed : cfg.seeds) {
    Matrix truth = synthetic_log_prob_matrix(cfg.n_contexts, cfg.v_out,
                                             cfg.truth_rank, seed);
    FitConfig fit;
    fit.d = cfg.d;
    fit.d_g = cfg.d_g;
    fit.iters = cfg.iters;
    fit.lr = cfg.lr;
    fit.seed = seed;

    fit.model = OutputModel::kSingle;
    fit.m_mix = 1;
    FittedOutputLayer single = fit_output_layer(truth, fit);
    report.records.push_back(
        {"single", 1, cfg.d, single.mean_kl,
         numerical_rank(single.log_probs, cfg.rank_rel_tol)});

    for (int m : cfg.m_mixes) {
      fit.model = OutputModel::kMos;
      fit.m_mix = m;
      FittedOutputLayer mos = fit_output_layer(truth, fit);
      report.records.push_back(
          {"mos", m, cfg.d, mos.mean_kl,
           numerical_rank(mos.log_probs, cfg.rank_rel_tol)});
    }
  }
  return report;
}

std::string format_report(const BottleneckReport& report) {
  std::string out;
  for (const BottleneckRecord& r : report.records) {
    out += r.model;
    out += '\t';
    out += std::to_string(r.m_mix);
    out += '\t';
    out += std::to_string(r.d);
    out += '\t';
    out += fmt_double(r.kl);
    out += '\t';
    out += std::to_string(r.rank);
    out += '\n';
  }
  return out;
}

BottleneckReport parse_report(std::string_view text) {
  BottleneckReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    BottleneckRecord r;
    std::string kl;
    if (!(fields >> r.model >> r.m_mix >> r.d >> kl >> r.rank) ||
        (r.model != "single" && r.model != "mos"))
      throw ArgumentError("parse_report: malformed line " +
                          std::to_string(line_no));
    char* end = nullptr;
    r.kl = std::strtod(kl.c_str(), &end);
    if (end == kl.c_str() || *end != '\0')
      throw ArgumentError("parse_report: bad kl at line " +
                          std::to_string(line_no));
    report.records.push_back(std::move(r));
  }
  return report;
}

}  // namespace wordcode
