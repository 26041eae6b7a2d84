#include "wordcode/code_table.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wordcode/errors.hpp"

namespace wordcode {

CodeTable::CodeTable(int k_freq, int d1, int d2, int vocab_size,
                     std::vector<std::pair<int, int>> dense_cells)
    : k_freq_(k_freq),
      d1_(d1),
      d2_(d2),
      vocab_size_(vocab_size),
      dense_cells_(std::move(dense_cells)) {
  if (k_freq_ < 0 || d1_ < 1 || d2_ < 1 || vocab_size_ < 0)
    throw ArgumentError("CodeTable: negative or empty dimensions");
  if (k_freq_ > vocab_size_)
    throw ArgumentError("CodeTable: K_freq " + std::to_string(k_freq_) +
                        " exceeds vocabulary size " +
                        std::to_string(vocab_size_));
  if (capacity() < vocab_size_ + 1)
    throw ArgumentError("CodeTable: capacity K_freq + d1*d2 = " +
                        std::to_string(capacity()) +
                        " cannot hold |V| = " + std::to_string(vocab_size_) +
                        " words plus UNK");
  const std::size_t expected =
      static_cast<std::size_t>(vocab_size_ - k_freq_) + 1;
  if (dense_cells_.size() != expected)
    throw ArgumentError("CodeTable: expected " + std::to_string(expected) +
                        " dense cells, got " +
                        std::to_string(dense_cells_.size()));

  cell_word_.assign(static_cast<std::size_t>(d1_) * d2_, -1);
  for (std::size_t j = 0; j < dense_cells_.size(); ++j) {
    auto [r, c] = dense_cells_[j];
    if (r < 0 || r >= d1_ || c < 0 || c >= d2_)
      throw ArgumentError("CodeTable: cell out of range");
    int& slot = cell_word_[static_cast<std::size_t>(r) * d2_ + c];
    if (slot != -1)
      throw ArgumentError("CodeTable: cell (" + std::to_string(r) + "," +
                          std::to_string(c) + ") assigned twice");
    slot = k_freq_ + static_cast<int>(j);
  }
}

CodeSeq CodeTable::encode_word(int word_id) const {
  if (word_id < 0 || word_id > vocab_size_)
    throw ArgumentError("encode_word: word id " + std::to_string(word_id) +
                        " out of range");
  if (word_id < k_freq_) return {word_id};
  auto [r, c] = dense_cells_[static_cast<std::size_t>(word_id - k_freq_)];
  return {row_code(r), col_code(c)};
}

std::pair<int, int> CodeTable::dense_cell(int word_id) const {
  if (word_id < k_freq_ || word_id > vocab_size_)
    throw ArgumentError("dense_cell: word id " + std::to_string(word_id) +
                        " is not in the dense block");
  return dense_cells_[static_cast<std::size_t>(word_id - k_freq_)];
}

int CodeTable::word_at(int r, int c) const {
  if (r < 0 || r >= d1_ || c < 0 || c >= d2_)
    throw ArgumentError("word_at: cell out of range");
  return cell_word_[static_cast<std::size_t>(r) * d2_ + c];
}

std::vector<int> CodeTable::decode_sequence(const CodeSeq& codes) const {
  std::vector<int> words;
  std::size_t i = 0;
  while (i < codes.size()) {
    CodeId code = codes[i];
    if (code < 0 || code >= n_codes())
      throw MalformedSequenceError(
          "decode_sequence: code " + std::to_string(code) +
              " outside the dictionary at position " + std::to_string(i),
          i);
    if (is_frequent_code(code)) {
      words.push_back(code);
      ++i;
      continue;
    }
    if (is_col_code(code))
      throw MalformedSequenceError(
          "decode_sequence: column code at position " + std::to_string(i) +
              " opens a word",
          i);
    // row code: a column code must follow
    if (i + 1 >= codes.size())
      throw MalformedSequenceError(
          "decode_sequence: stream ends after a row code",
          codes.size(), std::to_string(code));
    CodeId next = codes[i + 1];
    if (!is_col_code(next))
      throw MalformedSequenceError(
          "decode_sequence: row code followed by non-column code at position " +
              std::to_string(i + 1),
          i + 1);
    int word = word_at(code - k_freq_, next - k_freq_ - d1_);
    if (word == -1)
      throw MalformedSequenceError(
          "decode_sequence: unused cell at position " + std::to_string(i + 1),
          i + 1);
    words.push_back(word);
    i += 2;
  }
  return words;
}

CodeTable CodeTable::with_dense_cells(
    std::vector<std::pair<int, int>> cells) const {
  return CodeTable(k_freq_, d1_, d2_, vocab_size_, std::move(cells));
}

CodeTable init_table(const Vocabulary& vocab, int k_freq, int d1, int d2) {
  const int v = vocab.size();
  if (k_freq < 0 || k_freq > v)
    throw ArgumentError("init_table: K_freq " + std::to_string(k_freq) +
                        " outside [0, " + std::to_string(v) + "]");
  if (d1 < 1 || d2 < 1) throw ArgumentError("init_table: d1, d2 must be ≥ 1");
  if (k_freq + d1 * d2 < v + 1)
    throw ArgumentError("init_table: capacity K_freq + d1*d2 = " +
                        std::to_string(k_freq + d1 * d2) +
                        " cannot hold |V| = " + std::to_string(v) +
                        " words plus UNK");

  std::vector<std::pair<int, int>> cells;
  cells.reserve(static_cast<std::size_t>(v - k_freq) + 1);
  for (int j = 0; j < v - k_freq; ++j) cells.emplace_back(j / d2, j % d2);
  cells.emplace_back(d1 - 1, d2 - 1);  // UNK
  return CodeTable(k_freq, d1, d2, v, std::move(cells));
}

std::int64_t EncodedCorpus::total_codes() const {
  std::int64_t total = 0;
  for (const CodeSeq& stream : streams)
    total += static_cast<std::int64_t>(stream.size());
  return total;
}

EncodedCorpus encode_corpus(const CodeTable& table, const Vocabulary& vocab,
                            const std::vector<Sentence>& corpus) {
  if (vocab.size() != table.vocab_size())
    throw ContractError("encode_corpus: vocabulary size " +
                        std::to_string(vocab.size()) +
                        " does not match table vocab_size " +
                        std::to_string(table.vocab_size()));
  EncodedCorpus encoded;
  encoded.streams.reserve(corpus.size());
  for (const Sentence& sentence : corpus) {
    CodeSeq stream;
    for (const Token& token : sentence) {
      CodeSeq codes = table.encode_word(vocab.id_or_unk(token));
      stream.insert(stream.end(), codes.begin(), codes.end());
    }
    encoded.streams.push_back(std::move(stream));
  }
  return encoded;
}

Scalar sequence_nll(const Matrix& log_probs, const CodeSeq& codes) {
  if (log_probs.rows() != static_cast<Index>(codes.size()))
    throw ContractError("sequence_nll: " + std::to_string(codes.size()) +
                        " codes but " + std::to_string(log_probs.rows()) +
                        " predictive rows");
  Scalar nll = 0;
  for (Index t = 0; t < log_probs.rows(); ++t) {
    CodeId code = codes[static_cast<std::size_t>(t)];
    if (code < 0 || code >= log_probs.cols())
      throw ContractError("sequence_nll: code outside the dictionary");
    nll -= log_probs(t, code);
  }
  if (!std::isfinite(nll)) throw NumericError("sequence_nll: non-finite");
  return nll;
}

Scalar corpus_log_likelihood(const CodeTable& table,
                             const CodeSequenceModel& lm,
                             const EncodedCorpus& corpus) {
  if (lm.n_codes() != table.n_codes())
    throw ContractError("corpus_log_likelihood: model dictionary " +
                        std::to_string(lm.n_codes()) +
                        " does not match table dictionary " +
                        std::to_string(table.n_codes()));
  Scalar total = 0;
  for (const CodeSeq& stream : corpus.streams)
    total += sequence_nll(lm.predictive_log_probs(stream), stream);
  return total;
}

Scalar corpus_log_likelihood(const CodeTable& table,
                             const CodeSequenceModel& lm,
                             const Vocabulary& vocab,
                             const std::vector<Sentence>& corpus) {
  return corpus_log_likelihood(table, lm, encode_corpus(table, vocab, corpus));
}

std::string format_table(const CodeTable& table,
                         const std::vector<Token>& words) {
  if (static_cast<int>(words.size()) != table.vocab_size())
    throw ContractError("format_table: " + std::to_string(words.size()) +
                        " words for vocab_size " +
                        std::to_string(table.vocab_size()));
  std::string out = "#hlr-v1 " + std::to_string(table.k_freq()) + " " +
                    std::to_string(table.d1()) + " " +
                    std::to_string(table.d2()) + " " +
                    std::to_string(table.vocab_size()) + "\n";
  for (int i = 0; i < table.vocab_size(); ++i) {
    out += words[static_cast<std::size_t>(i)];
    out += '\t';
    CodeSeq codes = table.encode_word(i);
    out += std::to_string(codes[0]);
    if (codes.size() == 2) {
      out += ',';
      out += std::to_string(codes[1]);
    }
    out += '\n';
  }
  return out;
}

LoadedTable parse_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line))
    throw ArgumentError("parse_table: empty input");
  std::istringstream header(line);
  std::string magic;
  int k_freq = 0, d1 = 0, d2 = 0, vocab_size = 0;
  if (!(header >> magic >> k_freq >> d1 >> d2 >> vocab_size) ||
      magic != "#hlr-v1")
    throw ArgumentError("parse_table: missing #hlr-v1 header");

  std::vector<Token> words;
  std::vector<std::pair<int, int>> cells;
  words.reserve(static_cast<std::size_t>(vocab_size));
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ArgumentError("parse_table: malformed line " +
                          std::to_string(line_no));
    Token word = line.substr(0, tab);
    std::string codes = line.substr(tab + 1);
    const int id = static_cast<int>(words.size());
    std::size_t comma = codes.find(',');
    try {
      if (comma == std::string::npos) {
        if (std::stoi(codes) != id)
          throw ArgumentError("parse_table: frequent code must equal rank at line " +
                              std::to_string(line_no));
        if (id >= k_freq)
          throw ArgumentError("parse_table: length-1 code for infrequent word at line " +
                              std::to_string(line_no));
      } else {
        int row = std::stoi(codes.substr(0, comma));
        int col = std::stoi(codes.substr(comma + 1));
        if (id < k_freq)
          throw ArgumentError("parse_table: length-2 code for frequent word at line " +
                              std::to_string(line_no));
        cells.emplace_back(row - k_freq, col - k_freq - d1);
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ArgumentError*>(&e)) throw;
      throw ArgumentError("parse_table: bad code id at line " +
                          std::to_string(line_no));
    }
    words.push_back(std::move(word));
  }
  if (static_cast<int>(words.size()) != vocab_size)
    throw ArgumentError("parse_table: header promises " +
                        std::to_string(vocab_size) + " words, found " +
                        std::to_string(words.size()));
  cells.emplace_back(d1 - 1, d2 - 1);  // UNK, pinned
  return LoadedTable{CodeTable(k_freq, d1, d2, vocab_size, std::move(cells)),
                     std::move(words)};
}

void save_table(const CodeTable& table, const std::vector<Token>& words,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_table(table, words);
  if (!out.flush()) throw IoError("failed writing " + path);
}

LoadedTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

}  // namespace wordcode
