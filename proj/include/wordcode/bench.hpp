#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wordcode/types.hpp"

namespace wordcode {

template <class T>
inline void do_not_optimize(const T& value) {
  asm volatile("" : : "g"(&value) : "memory");
}

struct BenchSpec {
  int batch = 32;
  int d = 64;
  std::vector<int> output_sizes = {10000, 30000};
  std::vector<int> m_mixes = {1, 3};
  int reps = 5;    // timed repetitions, ≥ 3
  int warmup = 2;  // untimed repetitions before the clock starts
  std::uint64_t seed = 1;
};

/// Analytic working-set accounting for one mixture-of-softmaxes forward:
/// the shared embedding plus per-mixture logit and probability tensors.
struct LayerBytes {
  std::int64_t embedding = 0;  // n · d · sizeof(Scalar)
  std::int64_t logits = 0;     // m_mix · batch · n · sizeof(Scalar)
  std::int64_t probs = 0;      // m_mix · batch · n · sizeof(Scalar)

  std::int64_t total() const { return embedding + logits + probs; }
};

LayerBytes softmax_layer_bytes(int batch, int d, int n, int m_mix);

struct BenchResult {
  int output_size = 0;
  int m_mix = 1;
  Scalar median_ms = 0;
  std::int64_t bytes = 0;
  Scalar spread = 1;  // max/min over the timed repetitions
  Scalar checksum = 0;  // deterministic output digest, equal across reps
};

/// Times a full batch MoS forward (priors, per-mixture tanh projection,
/// softmax over n outputs, mixture) for every (output size, mixture count)
/// pair: median of `reps` runs after `warmup` discarded ones.
std::vector<BenchResult> run_bench(const BenchSpec& spec);

struct CodedVsFlat {
  BenchResult flat;   // one softmax position over vocab_size outputs
  BenchResult coded;  // two positions over code_dict_size outputs
  Scalar time_ratio = 0;                // coded / flat median time
  Scalar per_softmax_memory_ratio = 0;  // single-softmax tensor bytes ratio
};

/// Worst-case coded output cost (two code positions per word) against a
/// flat softmax over the full vocabulary, at the same batch and mixtures.
CodedVsFlat compare_coded_vs_flat(int vocab_size, int code_dict_size,
                                  int m_mix, const BenchSpec& spec);

/// `config<TAB>median_ms<TAB>bytes<TAB>spread`, config as `n=...,m=...`.
std::string format_bench_line(const BenchResult& result);

}  // namespace wordcode
