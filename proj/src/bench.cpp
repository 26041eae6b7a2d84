#include "wordcode/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <new>

#include "wordcode/errors.hpp"
#include "wordcode/numeric.hpp"
#include "wordcode/rng.hpp"

namespace wordcode {
namespace {

struct LayerInputs {
  Matrix g;                 // batch × d contexts
  Matrix w;                 // n × d shared embedding
  std::vector<Matrix> w_h;  // m of d × d
  Matrix w_pi;              // d × m
};

LayerInputs make_inputs(int batch, int d, int n, int m, std::uint64_t seed) {
  try {
    Rng rng(seed);
    LayerInputs in;
    auto fill = [&](Matrix& t, Index rows, Index cols) {
      t.resize(rows, cols);
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) t(r, c) = rng.normal();
    };
    fill(in.g, batch, d);
    fill(in.w, n, d);
    in.w_h.resize(static_cast<std::size_t>(m));
    for (Matrix& wh : in.w_h) fill(wh, d, d);
    fill(in.w_pi, d, m);
    return in;
  } catch (const std::bad_alloc&) {
    throw ResourceError("bench: allocation failed for n=" +
                        std::to_string(n) + " m=" + std::to_string(m) +
                        " batch=" + std::to_string(batch));
  }
}

// One full MoS forward for the batch; returns a digest of the mixture
// probabilities so the work cannot be elided.
Scalar forward_once(const LayerInputs& in) {
  const Index batch = in.g.rows();
  const Index n = in.w.rows();
  const int m = static_cast<int>(in.w_h.size());

  Matrix prior_logits = in.g * in.w_pi;  // batch × m
  Matrix pi(batch, m);
  for (Index b = 0; b < batch; ++b)
    pi.row(b) = softmax_vec(prior_logits.row(b).transpose()).transpose();

  Matrix mix = Matrix::Zero(batch, n);
  Matrix logits(batch, n), probs(batch, n);
  for (int k = 0; k < m; ++k) {
    Matrix hk = (in.g * in.w_h[static_cast<std::size_t>(k)].transpose())
                    .array()
                    .tanh()
                    .matrix();
    logits.noalias() = hk * in.w.transpose();
    for (Index b = 0; b < batch; ++b)
      probs.row(b) = softmax_vec(logits.row(b).transpose()).transpose();
    for (Index b = 0; b < batch; ++b) mix.row(b) += pi(b, k) * probs.row(b);
  }
  Scalar digest = mix.sum() + mix.col(0).sum();
  do_not_optimize(digest);
  return digest;
}

Scalar median(std::vector<Scalar> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BenchResult time_config(int batch, int d, int n, int m, int reps, int warmup,
                        std::uint64_t seed) {
  LayerInputs in = make_inputs(batch, d, n, m, seed);
  for (int r = 0; r < warmup; ++r) do_not_optimize(forward_once(in));

  std::vector<Scalar> times;
  times.reserve(static_cast<std::size_t>(reps));
  Scalar checksum = 0;
  bool first = true;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    Scalar digest = forward_once(in);
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(
        std::chrono::duration<Scalar, std::milli>(t1 - t0).count());
    if (first) {
      checksum = digest;
      first = false;
    } else if (digest != checksum) {
      throw NumericError("bench: repetition produced a different result");
    }
  }

  BenchResult result;
  result.output_size = n;
  result.m_mix = m;
  result.median_ms = median(times);
  LayerBytes bytes = softmax_layer_bytes(batch, d, n, m);
  result.bytes = bytes.total();
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  result.spread = *lo > 0 ? *hi / *lo : 1;
  result.checksum = checksum;
  return result;
}

}  // namespace

LayerBytes softmax_layer_bytes(int batch, int d, int n, int m_mix) {
  if (batch < 1 || d < 1 || n < 1 || m_mix < 1)
    throw ArgumentError("softmax_layer_bytes: dimensions must be positive");
  LayerBytes b;
  const auto s = static_cast<std::int64_t>(sizeof(Scalar));
  b.embedding = static_cast<std::int64_t>(n) * d * s;
  b.logits = static_cast<std::int64_t>(m_mix) * batch * n * s;
  b.probs = static_cast<std::int64_t>(m_mix) * batch * n * s;
  return b;
}

std::vector<BenchResult> run_bench(const BenchSpec& spec) {
  if (spec.batch < 1 || spec.d < 1 || spec.reps < 3 || spec.warmup < 0)
    throw ArgumentError("run_bench: batch, d positive and reps ≥ 3 required");
  if (spec.output_sizes.empty() || spec.m_mixes.empty())
    throw ArgumentError("run_bench: no configurations to measure");
  std::vector<BenchResult> results;
  for (int n : spec.output_sizes)
    for (int m : spec.m_mixes)
      results.push_back(time_config(spec.batch, spec.d, n, m, spec.reps,
                                    spec.warmup, spec.seed));
  return results;
}

CodedVsFlat compare_coded_vs_flat(int vocab_size, int code_dict_size,
                                  int m_mix, const BenchSpec& spec) {
  if (code_dict_size > vocab_size)
    throw ArgumentError("compare_coded_vs_flat: code dictionary must not "
                        "exceed the vocabulary");
  if (spec.reps < 3) throw ArgumentError("compare_coded_vs_flat: reps ≥ 3");

  CodedVsFlat out;
  out.flat = time_config(spec.batch, spec.d, vocab_size, m_mix, spec.reps,
                         spec.warmup, spec.seed);

  // two code positions per word: the same layer evaluated twice per rep
  LayerInputs in =
      make_inputs(spec.batch, spec.d, code_dict_size, m_mix, spec.seed);
  for (int r = 0; r < spec.warmup; ++r) {
    do_not_optimize(forward_once(in));
    do_not_optimize(forward_once(in));
  }
  std::vector<Scalar> times;
  Scalar checksum = 0;
  for (int r = 0; r < spec.reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    Scalar digest = forward_once(in) + forward_once(in);
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(
        std::chrono::duration<Scalar, std::milli>(t1 - t0).count());
    checksum = digest;
  }
  out.coded.output_size = code_dict_size;
  out.coded.m_mix = m_mix;
  out.coded.median_ms = median(times);
  out.coded.bytes = 2 * softmax_layer_bytes(spec.batch, spec.d,
                                            code_dict_size, m_mix)
                            .total();
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  out.coded.spread = *lo > 0 ? *hi / *lo : 1;
  out.coded.checksum = checksum;

  out.time_ratio = out.coded.median_ms / out.flat.median_ms;
  out.per_softmax_memory_ratio =
      static_cast<Scalar>(
          softmax_layer_bytes(spec.batch, spec.d, code_dict_size, 1)
              .total()) /
      static_cast<Scalar>(
          softmax_layer_bytes(spec.batch, spec.d, vocab_size, 1).total());
  return out;
}

std::string format_bench_line(const BenchResult& result) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "n=%d,m=%d\t%.6g\t%lld\t%.6g\n",
                result.output_size, result.m_mix, result.median_ms,
                static_cast<long long>(result.bytes), result.spread);
  return buf;
}

}  // namespace wordcode
