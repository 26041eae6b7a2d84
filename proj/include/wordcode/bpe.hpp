#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wordcode/corpus.hpp"

namespace wordcode {

inline constexpr std::string_view kDefaultEow = "</w>";

struct MergeRule {
  std::string left;
  std::string right;
  std::string merged;  // always left + right

  friend bool operator==(const MergeRule&, const MergeRule&) = default;
};

/// Ordered merge rules plus the character alphabet they were trained over.
/// The dictionary is the alphabet, the end-of-word marker and one new code
/// per rule.
struct MergeList {
  std::vector<MergeRule> rules;
  std::vector<std::string> alphabet;  // sorted single code points, no marker
  std::string eow{kDefaultEow};

  int dictionary_size() const {
    return static_cast<int>(alphabet.size()) + 1 +
           static_cast<int>(rules.size());
  }
};

/// Grows the code dictionary by merging the most frequent adjacent code pair
/// (weighted by word frequency) until it holds `target_dict_size` codes or no
/// pair occurs at least twice. Pair-count ties break by lexicographic
/// (left, right).
MergeList train_bpe(const Vocabulary& vocab, int target_dict_size,
                    std::string_view eow = kDefaultEow);

/// Splits `word` into code points plus the end-of-word marker, then applies
/// every rule exhaustively left-to-right in training order. Characters
/// outside the training alphabet stay as singleton codes.
std::vector<std::string> bpe_encode(const Token& word,
                                    const MergeList& merges);

/// Joins codes back into words, one word per marker-terminated code.
std::vector<Token> bpe_decode(const std::vector<std::string>& codes,
                              std::string_view eow);
std::vector<Token> bpe_decode(const std::vector<std::string>& codes,
                              const MergeList& merges);

/// Sum over vocabulary words of count * encoded length.
std::int64_t encoded_symbol_count(const Vocabulary& vocab,
                                  const MergeList& merges);
/// Sum over vocabulary words of count * (code points + marker).
std::int64_t initial_symbol_count(const Vocabulary& vocab);

/// Line 1 `#bpe-v1 <eow>`, then one `left right` per rule, in order.
std::string format_merges(const MergeList& merges);
MergeList parse_merges(std::string_view text);
void save_merges(const MergeList& merges, const std::string& path);
MergeList load_merges(const std::string& path);

}  // namespace wordcode
