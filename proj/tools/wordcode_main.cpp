#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "wordcode/assign.hpp"
#include "wordcode/bench.hpp"
#include "wordcode/bpe.hpp"
#include "wordcode/code_lm.hpp"
#include "wordcode/code_table.hpp"
#include "wordcode/corpus.hpp"
#include "wordcode/errors.hpp"
#include "wordcode/mos.hpp"

namespace {

using namespace wordcode;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out.flush()) throw IoError("failed writing " + path);
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct TrainBpeArgs {
  std::string input, output;
  int merges = 1000;  // target dictionary size
  std::string eow = std::string(kDefaultEow);
};

int cmd_train_bpe(const TrainBpeArgs& args) {
  std::vector<Sentence> corpus = read_corpus(args.input);
  Vocabulary vocab = build_vocab(corpus, std::numeric_limits<int>::max());
  MergeList merges = train_bpe(vocab, args.merges, args.eow);
  save_merges(merges, args.output);
  const std::int64_t before = initial_symbol_count(vocab);
  const std::int64_t after = encoded_symbol_count(vocab, merges);
  std::cout << "dictionary size: " << merges.dictionary_size() << "\n";
  if (merges.dictionary_size() < args.merges)
    std::cout << "early stop: no pair occurs twice\n";
  std::cout << "compression ratio: "
            << fmt6(static_cast<double>(after) / static_cast<double>(before))
            << " (" << after << "/" << before << " symbols)\n";
  return 0;
}

struct LearnTableArgs {
  std::string input, output, trace;
  int k_freq = 0;
  int rows = 1, cols = 1;
  int rounds = 1;
  int max_vocab = 10000;
  int d_emb = 16, d_hid = 32;
  int epochs = 5, batch_size = 16;
  double lr = 0.1, clip = 5.0;
  int exact_cap = 256;
  std::uint64_t seed = 1;
};

int cmd_learn_table(const LearnTableArgs& args) {
  std::vector<Sentence> corpus = read_corpus(args.input);
  Vocabulary vocab = build_vocab(corpus, args.max_vocab);

  HybridTrainConfig cfg;
  cfg.k_freq = args.k_freq;
  cfg.d1 = args.rows;
  cfg.d2 = args.cols;
  cfg.rounds = args.rounds;
  cfg.d_emb = args.d_emb;
  cfg.d_hid = args.d_hid;
  cfg.exact_cap = args.exact_cap;
  cfg.lm.lr = args.lr;
  cfg.lm.epochs = args.epochs;
  cfg.lm.batch_size = args.batch_size;
  cfg.lm.clip_norm = args.clip;
  cfg.lm.seed = args.seed;

  HybridResult result = train_hybrid_lightrnn(corpus, vocab, cfg);

  std::vector<Token> words;
  words.reserve(static_cast<std::size_t>(vocab.size()));
  for (const auto& [word, count] : vocab.entries()) words.push_back(word);
  save_table(result.table, words, args.output);
  if (!args.trace.empty())
    write_file(args.trace, "#trace-v1 seed=" + std::to_string(args.seed) +
                               "\n" + format_trace(result.trace));

  for (const RoundTrace& tr : result.trace)
    std::cout << "round " << tr.round << ": nll " << fmt6(tr.nll_before)
              << " -> " << fmt6(tr.nll_after) << ", ot " << fmt6(tr.ot_before)
              << " -> " << fmt6(tr.ot_after) << "\n";
  return 0;
}

struct CoderArgs {
  std::string coder, input, output;
};

enum class CoderKind { kBpe, kTable };

CoderKind detect_coder(const std::string& text) {
  if (text.rfind("#bpe-v1 ", 0) == 0) return CoderKind::kBpe;
  if (text.rfind("#hlr-v1 ", 0) == 0) return CoderKind::kTable;
  throw ArgumentError("coder file has no #bpe-v1 or #hlr-v1 magic line");
}

int cmd_encode(const CoderArgs& args) {
  const std::string coder_text = read_file(args.coder);
  const std::string input = read_file(args.input);
  std::vector<Sentence> corpus = parse_corpus(input);
  std::string out;

  if (detect_coder(coder_text) == CoderKind::kBpe) {
    MergeList merges = parse_merges(coder_text);
    for (const Sentence& sentence : corpus) {
      bool first = true;
      for (const Token& word : sentence) {
        for (const std::string& code : bpe_encode(word, merges)) {
          if (!first) out += ' ';
          out += code;
          first = false;
        }
      }
      out += '\n';
    }
  } else {
    LoadedTable loaded = parse_table(coder_text);
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < loaded.words.size(); ++i)
      index.emplace(loaded.words[i], static_cast<int>(i));
    for (const Sentence& sentence : corpus) {
      bool first = true;
      for (const Token& word : sentence) {
        auto it = index.find(word);
        int id = it == index.end() ? loaded.table.unk_id() : it->second;
        for (CodeId code : loaded.table.encode_word(id)) {
          if (!first) out += ' ';
          out += std::to_string(code);
          first = false;
        }
      }
      out += '\n';
    }
  }
  if (corpus.empty()) out.clear();  // empty input stays empty
  write_file(args.output, out);
  return 0;
}

int cmd_decode(const CoderArgs& args) {
  const std::string coder_text = read_file(args.coder);
  const std::string input = read_file(args.input);
  std::vector<Sentence> lines = parse_corpus(input);
  std::string out;

  if (detect_coder(coder_text) == CoderKind::kBpe) {
    MergeList merges = parse_merges(coder_text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      std::vector<std::string> codes(lines[ln].begin(), lines[ln].end());
      std::vector<Token> words;
      try {
        words = bpe_decode(codes, merges);
      } catch (const MalformedSequenceError& e) {
        throw MalformedSequenceError("line " + std::to_string(ln + 1) + ": " +
                                         e.what(),
                                     e.position, e.dangling);
      }
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (w) out += ' ';
        out += words[w];
      }
      out += '\n';
    }
  } else {
    LoadedTable loaded = parse_table(coder_text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      CodeSeq codes;
      for (const Token& tok : lines[ln]) {
        try {
          codes.push_back(std::stoi(tok));
        } catch (const std::logic_error&) {
          throw ArgumentError("line " + std::to_string(ln + 1) +
                              ": bad code id \"" + tok + "\"");
        }
      }
      std::vector<int> ids;
      try {
        ids = loaded.table.decode_sequence(codes);
      } catch (const MalformedSequenceError& e) {
        throw MalformedSequenceError("line " + std::to_string(ln + 1) + ": " +
                                         e.what(),
                                     e.position, e.dangling);
      }
      for (std::size_t w = 0; w < ids.size(); ++w) {
        if (w) out += ' ';
        out += ids[w] == loaded.table.unk_id()
                   ? std::string(kUnkText)
                   : loaded.words[static_cast<std::size_t>(ids[w])];
      }
      out += '\n';
    }
  }
  if (lines.empty()) out.clear();
  write_file(args.output, out);
  return 0;
}

int cmd_dump_table(const std::string& table_path) {
  LoadedTable loaded = load_table(table_path);
  const CodeTable& table = loaded.table;
  for (int r = 0; r < table.d1(); ++r) {
    std::cout << "row " << table.row_code(r) << ":";
    for (int c = 0; c < table.d2(); ++c) {
      int word = table.word_at(r, c);
      if (word == -1) continue;
      std::cout << ' '
                << (word == table.unk_id()
                        ? std::string(kUnkText)
                        : loaded.words[static_cast<std::size_t>(word)]);
    }
    std::cout << "\n";
  }
  return 0;
}

struct RankArgs {
  std::string output;
  int contexts = 16, v_out = 16, truth_rank = 8, d = 2, d_g = 16;
  std::vector<int> mixtures = {4};
  int runs = 10;
  int iters = 80000;
  double lr = 1.0;
  std::uint64_t seed = 1;
};

int cmd_rank(const RankArgs& args) {
  BottleneckConfig cfg;
  cfg.n_contexts = args.contexts;
  cfg.v_out = args.v_out;
  cfg.truth_rank = args.truth_rank;
  cfg.d = args.d;
  cfg.d_g = args.d_g;
  cfg.m_mixes = args.mixtures;
  cfg.iters = args.iters;
  cfg.lr = args.lr;
  cfg.seeds.clear();
  for (int i = 0; i < args.runs; ++i) cfg.seeds.push_back(args.seed + i);

  BottleneckReport report = bottleneck_report(cfg);
  const std::string body = format_report(report);
  if (!args.output.empty())
    write_file(args.output, "#rank-v1 seed=" + std::to_string(args.seed) +
                                "\n" + body);
  std::cout << body;
  return 0;
}

struct BenchArgs {
  std::string output;
  int batch = 32, d = 64;
  std::vector<int> sizes = {10000, 30000};
  std::vector<int> mixtures = {1, 3};
  int reps = 5, warmup = 2;
  std::uint64_t seed = 1;
  int compare_vocab = 0, compare_codes = 0;
};

int cmd_bench(const BenchArgs& args) {
  BenchSpec spec;
  spec.batch = args.batch;
  spec.d = args.d;
  spec.output_sizes = args.sizes;
  spec.m_mixes = args.mixtures;
  spec.reps = args.reps;
  spec.warmup = args.warmup;
  spec.seed = args.seed;

  std::string body;
  for (const BenchResult& r : run_bench(spec)) body += format_bench_line(r);
  if (args.compare_vocab > 0 && args.compare_codes > 0) {
    CodedVsFlat cmp = compare_coded_vs_flat(args.compare_vocab,
                                            args.compare_codes,
                                            args.mixtures.back(), spec);
    body += "coded_vs_flat\ttime_ratio=" + fmt6(cmp.time_ratio) +
            "\tmemory_ratio=" + fmt6(cmp.per_softmax_memory_ratio) + "\n";
  }
  if (!args.output.empty())
    write_file(args.output, "#bench-v1 seed=" + std::to_string(args.seed) +
                                "\n" + body);
  std::cout << body;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"word-coding toolkit: BPE and Hybrid-LightRNN coders, "
               "mixture-of-softmaxes analysis, output-layer benchmarks"};
  app.require_subcommand(1);
  app.set_config("--config");

  TrainBpeArgs bpe_args;
  auto* bpe = app.add_subcommand("train-bpe", "learn a BPE merge list");
  bpe->add_option("--input", bpe_args.input, "training corpus")->required();
  bpe->add_option("--output", bpe_args.output, "merge file")->required();
  bpe->add_option("--merges", bpe_args.merges, "target dictionary size");
  bpe->add_option("--eow", bpe_args.eow, "end-of-word marker");

  LearnTableArgs table_args;
  auto* learn = app.add_subcommand("learn-table",
                                   "learn a Hybrid-LightRNN code table");
  learn->add_option("--input", table_args.input, "training corpus")
      ->required();
  learn->add_option("--output", table_args.output, "table file")->required();
  learn->add_option("--trace", table_args.trace, "round trace file");
  learn->add_option("--k-freq", table_args.k_freq,
                    "words with exclusive codes");
  learn->add_option("--rows", table_args.rows, "table rows");
  learn->add_option("--cols", table_args.cols, "table columns");
  learn->add_option("--rounds", table_args.rounds, "alternating rounds");
  learn->add_option("--max-vocab", table_args.max_vocab, "vocabulary cap");
  learn->add_option("--d-emb", table_args.d_emb, "code embedding size");
  learn->add_option("--d-hid", table_args.d_hid, "recurrent state size");
  learn->add_option("--epochs", table_args.epochs, "LM epochs per round");
  learn->add_option("--batch-size", table_args.batch_size, "LM batch size");
  learn->add_option("--lr", table_args.lr, "LM learning rate");
  learn->add_option("--clip", table_args.clip, "LM gradient clip norm");
  learn->add_option("--exact-cap", table_args.exact_cap,
                    "largest instance for the exact solver");
  learn->add_option("--seed", table_args.seed, "random seed");

  CoderArgs encode_args;
  auto* encode = app.add_subcommand("encode", "corpus text to code stream");
  encode->add_option("--coder", encode_args.coder, "merge or table file")
      ->required();
  encode->add_option("--input", encode_args.input, "text input")->required();
  encode->add_option("--output", encode_args.output, "encoded output")
      ->required();

  CoderArgs decode_args;
  auto* decode = app.add_subcommand("decode", "code stream back to text");
  decode->add_option("--coder", decode_args.coder, "merge or table file")
      ->required();
  decode->add_option("--input", decode_args.input, "encoded input")
      ->required();
  decode->add_option("--output", decode_args.output, "decoded output")
      ->required();

  std::string dump_path;
  auto* dump = app.add_subcommand("dump-table", "list words per table row");
  dump->add_option("--table", dump_path, "table file")->required();

  RankArgs rank_args;
  auto* rank = app.add_subcommand(
      "rank", "softmax-bottleneck fits and rank analysis");
  rank->add_option("--output", rank_args.output, "report file");
  rank->add_option("--contexts", rank_args.contexts, "truth rows");
  rank->add_option("--v-out", rank_args.v_out, "output vocabulary size");
  rank->add_option("--truth-rank", rank_args.truth_rank,
                   "rank of the synthetic truth");
  rank->add_option("--d", rank_args.d, "embedding dimension");
  rank->add_option("--d-g", rank_args.d_g,
                   "mixture context width (0 = same as --d)");
  rank->add_option("--mixtures", rank_args.mixtures, "mixture counts");
  rank->add_option("--runs", rank_args.runs, "number of seeds");
  rank->add_option("--iters", rank_args.iters, "fit iterations");
  rank->add_option("--lr", rank_args.lr, "fit learning rate");
  rank->add_option("--seed", rank_args.seed, "base random seed");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "output-layer timing and memory");
  bench->add_option("--output", bench_args.output, "result file");
  bench->add_option("--batch", bench_args.batch, "batch size");
  bench->add_option("--d", bench_args.d, "hidden dimension");
  bench->add_option("--sizes", bench_args.sizes, "output sizes");
  bench->add_option("--mixtures", bench_args.mixtures, "mixture counts");
  bench->add_option("--reps", bench_args.reps, "timed repetitions");
  bench->add_option("--warmup", bench_args.warmup, "warmup repetitions");
  bench->add_option("--seed", bench_args.seed, "random seed");
  bench->add_option("--compare-vocab", bench_args.compare_vocab,
                    "flat vocabulary size for the coded-vs-flat ratio");
  bench->add_option("--compare-codes", bench_args.compare_codes,
                    "code dictionary size for the coded-vs-flat ratio");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bpe->parsed()) return cmd_train_bpe(bpe_args);
    if (learn->parsed()) return cmd_learn_table(table_args);
    if (encode->parsed()) return cmd_encode(encode_args);
    if (decode->parsed()) return cmd_decode(decode_args);
    if (dump->parsed()) return cmd_dump_table(dump_path);
    if (rank->parsed()) return cmd_rank(rank_args);
    if (bench->parsed()) return cmd_bench(bench_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
