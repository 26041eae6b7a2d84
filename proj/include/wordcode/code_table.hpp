#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wordcode/corpus.hpp"
#include "wordcode/types.hpp"

namespace wordcode {

/// Index into the unified code dictionary of size K_freq + d1 + d2.
/// [0, K_freq) are exclusive frequent-word codes, [K_freq, K_freq+d1) row
/// codes, [K_freq+d1, K_freq+d1+d2) column codes.
using CodeId = int;
using CodeSeq = std::vector<CodeId>;

/// Word → code-sequence mapping: the K_freq most frequent words own
/// length-1 codes, every other word (and the reserved UNK slot, pinned to
/// the last cell) owns a (row, column) cell of a d1×d2 table. Prefix-free:
/// a frequent code ends a word, a row code must be followed by a column
/// code. Immutable; assignment updates go through with_dense_cells.
class CodeTable {
 public:
  /// `dense_cells[j]` is the cell of word K_freq + j, for all words from
  /// K_freq through vocab_size inclusive; the final entry is the UNK slot.
  /// Cells must be in range and distinct.
  CodeTable(int k_freq, int d1, int d2, int vocab_size,
            std::vector<std::pair<int, int>> dense_cells);

  int k_freq() const { return k_freq_; }
  int d1() const { return d1_; }
  int d2() const { return d2_; }
  /// Real words; the UNK slot is word id vocab_size().
  int vocab_size() const { return vocab_size_; }
  int unk_id() const { return vocab_size_; }
  int n_codes() const { return k_freq_ + d1_ + d2_; }
  int capacity() const { return k_freq_ + d1_ * d2_; }

  CodeId row_code(int r) const { return k_freq_ + r; }
  CodeId col_code(int c) const { return k_freq_ + d1_ + c; }
  bool is_frequent_code(CodeId code) const { return code < k_freq_; }
  bool is_row_code(CodeId code) const {
    return code >= k_freq_ && code < k_freq_ + d1_;
  }
  bool is_col_code(CodeId code) const {
    return code >= k_freq_ + d1_ && code < n_codes();
  }

  CodeSeq encode_word(int word_id) const;
  /// Cell of an infrequent word (word_id in [K_freq, vocab_size]).
  std::pair<int, int> dense_cell(int word_id) const;
  /// Word id occupying cell (r, c), or -1 if the cell is unused.
  int word_at(int r, int c) const;

  /// Streaming prefix-free parse back to word ids. Throws
  /// MalformedSequenceError naming the offending position on a column code
  /// opening a word, a row code not followed by a column code, an unused
  /// cell, or a stream ending mid-word.
  std::vector<int> decode_sequence(const CodeSeq& codes) const;

  /// Same table with the infrequent words reassigned; the whole mapping is
  /// replaced in one step.
  CodeTable with_dense_cells(std::vector<std::pair<int, int>> cells) const;

  const std::vector<std::pair<int, int>>& dense_cells() const {
    return dense_cells_;
  }

 private:
  int k_freq_ = 0, d1_ = 0, d2_ = 0, vocab_size_ = 0;
  std::vector<std::pair<int, int>> dense_cells_;
  std::vector<int> cell_word_;  // d1*d2 row-major, -1 = unused
};

/// Frequency-ranked construction: words 0..K_freq-1 take the exclusive
/// codes, the rest fill the dense table row-major by rank, UNK takes the
/// last cell. Requires K_freq ≤ |vocab| and K_freq + d1·d2 ≥ |vocab| + 1
/// (one cell reserved for UNK).
CodeTable init_table(const Vocabulary& vocab, int k_freq, int d1, int d2);

/// Per-sentence code streams; one stream per input sentence, each the
/// concatenation of its words' code sequences.
struct EncodedCorpus {
  std::vector<CodeSeq> streams;

  std::int64_t total_codes() const;
};

EncodedCorpus encode_corpus(const CodeTable& table, const Vocabulary& vocab,
                            const std::vector<Sentence>& corpus);

/// A model that scores code streams left to right.
class CodeSequenceModel {
 public:
  virtual ~CodeSequenceModel() = default;
  virtual int n_codes() const = 0;
  /// Row t holds log P(· | codes[0..t)): the predictive distribution at
  /// every position of the stream, conditioning only on codes before it.
  virtual Matrix predictive_log_probs(const CodeSeq& codes) const = 0;
};

/// Score `codes` against externally supplied per-position predictive
/// distributions (one row per code). Also the frozen-context evaluation:
/// the rows may come from a different stream of equal length.
Scalar sequence_nll(const Matrix& log_probs, const CodeSeq& codes);

/// Total corpus negative log-likelihood in nats: the sum over every code
/// position of every stream of -log P(code | preceding codes).
Scalar corpus_log_likelihood(const CodeTable& table,
                             const CodeSequenceModel& lm,
                             const EncodedCorpus& corpus);
Scalar corpus_log_likelihood(const CodeTable& table,
                             const CodeSequenceModel& lm,
                             const Vocabulary& vocab,
                             const std::vector<Sentence>& corpus);

/// Line 1 `#hlr-v1 K_freq d1 d2 vocab_size`, then `word<TAB>code0[,code1]`
/// per word in vocabulary order. Code ids are dictionary indices. The UNK
/// slot is pinned by construction and carries no line.
std::string format_table(const CodeTable& table,
                         const std::vector<Token>& words);

struct LoadedTable {
  CodeTable table;
  std::vector<Token> words;  // vocabulary order
};

LoadedTable parse_table(std::string_view text);
void save_table(const CodeTable& table, const std::vector<Token>& words,
                const std::string& path);
LoadedTable load_table(const std::string& path);

}  // namespace wordcode
