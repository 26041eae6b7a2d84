#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace wordcode {

/// A whitespace-free word as it appears in the corpus.
using Token = std::string;
using Sentence = std::vector<Token>;

/// Spelling used when an out-of-vocabulary word has to be shown as text.
inline constexpr std::string_view kUnkText = "<unk>";

bool is_unicode_space(char32_t cp);

/// Decodes the code point starting at byte `i` of `text` and advances `i`
/// past it. Throws DecodeError naming the byte offset on malformed input.
char32_t decode_utf8(std::string_view text, std::size_t& i);

/// Splits on runs of Unicode whitespace. No lowercasing or normalisation;
/// token order is preserved.
std::vector<Token> tokenize(std::string_view text);

/// Splits a valid UTF-8 word into single-code-point strings.
std::vector<std::string> split_code_points(std::string_view word);

/// Words ranked by corpus frequency: ids 0..size()-1 run from most to least
/// frequent, count ties broken by lexicographic word order. Words outside
/// the vocabulary map to the reserved id `unk_id() == size()`.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// `entries` must already be in canonical order with positive counts.
  explicit Vocabulary(std::vector<std::pair<Token, std::int64_t>> entries);

  int size() const { return static_cast<int>(entries_.size()); }
  int unk_id() const { return size(); }

  const Token& word(int id) const;
  std::int64_t count(int id) const;

  std::optional<int> find(std::string_view word) const;
  int id_or_unk(std::string_view word) const;

  const std::vector<std::pair<Token, std::int64_t>>& entries() const {
    return entries_;
  }
  std::int64_t total_count() const;

 private:
  std::vector<std::pair<Token, std::int64_t>> entries_;
  std::unordered_map<std::string, int> index_;
};

/// The `max_size` most frequent words of the corpus under the canonical
/// ordering. Deterministic for a fixed corpus.
Vocabulary build_vocab(const std::vector<Sentence>& corpus, int max_size);

/// One sentence per line, UTF-8.
std::vector<Sentence> parse_corpus(std::string_view text);
std::vector<Sentence> read_corpus(const std::string& path);

/// `word<TAB>count` per line, canonical order.
std::string format_vocab(const Vocabulary& vocab);
Vocabulary parse_vocab(std::string_view text);
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace wordcode
