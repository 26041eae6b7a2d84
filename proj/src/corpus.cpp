#include "wordcode/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "wordcode/errors.hpp"

namespace wordcode {

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const auto fail = [&](const char* why, std::size_t at) -> char32_t {
    std::ostringstream msg;
    msg << "invalid UTF-8 (" << why << ") at byte " << at;
    throw DecodeError(msg.str(), at);
  };

  const std::size_t start = i;
  const unsigned char lead = static_cast<unsigned char>(text[i]);
  if (lead < 0x80) {
    ++i;
    return lead;
  }

  int trailing = 0;
  char32_t cp = 0;
  char32_t min_cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    trailing = 1;
    cp = lead & 0x1Fu;
    min_cp = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    trailing = 2;
    cp = lead & 0x0Fu;
    min_cp = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    trailing = 3;
    cp = lead & 0x07u;
    min_cp = 0x10000;
  } else {
    return fail("bad lead byte", start);
  }

  for (int k = 0; k < trailing; ++k) {
    const std::size_t at = start + 1 + static_cast<std::size_t>(k);
    if (at >= text.size()) return fail("truncated sequence", start);
    const unsigned char c = static_cast<unsigned char>(text[at]);
    if ((c & 0xC0) != 0x80) return fail("bad continuation byte", at);
    cp = (cp << 6) | (c & 0x3Fu);
  }
  if (cp < min_cp) return fail("overlong encoding", start);
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return fail("code point out of range", start);
  }
  i = start + 1 + static_cast<std::size_t>(trailing);
  return cp;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t word_start = 0;
  bool in_word = false;
  while (i < text.size()) {
    const std::size_t cp_start = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      if (in_word) {
        out.emplace_back(text.substr(word_start, cp_start - word_start));
        in_word = false;
      }
    } else if (!in_word) {
      word_start = cp_start;
      in_word = true;
    }
  }
  if (in_word) out.emplace_back(text.substr(word_start));
  return out;
}

std::vector<std::string> split_code_points(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::size_t start = i;
    decode_utf8(word, i);
    out.emplace_back(word.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::pair<Token, std::int64_t>> entries)
    : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (int id = 0; id < size(); ++id) {
    const auto& [word, count] = entries_[static_cast<std::size_t>(id)];
    if (word.empty()) throw ArgumentError("vocabulary word is empty");
    if (count <= 0) throw ArgumentError("vocabulary count must be positive");
    if (!index_.emplace(word, id).second) {
      throw ArgumentError("duplicate vocabulary word: " + word);
    }
  }
}

const Token& Vocabulary::word(int id) const {
  if (id < 0 || id >= size()) throw ArgumentError("word id out of range");
  return entries_[static_cast<std::size_t>(id)].first;
}

std::int64_t Vocabulary::count(int id) const {
  if (id < 0 || id >= size()) throw ArgumentError("word id out of range");
  return entries_[static_cast<std::size_t>(id)].second;
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id_or_unk(std::string_view word) const {
  return find(word).value_or(unk_id());
}

std::int64_t Vocabulary::total_count() const {
  std::int64_t total = 0;
  for (const auto& [word, count] : entries_) total += count;
  return total;
}

Vocabulary build_vocab(const std::vector<Sentence>& corpus, int max_size) {
  if (max_size <= 0) throw ArgumentError("max_size must be positive");

  // std::map keeps words ordered, which makes the frequency sort below a
  // stable function of the corpus contents alone.
  std::map<Token, std::int64_t> counts;
  for (const Sentence& sentence : corpus) {
    for (const Token& token : sentence) ++counts[token];
  }
  if (counts.empty()) throw ArgumentError("corpus has no tokens");

  std::vector<std::pair<Token, std::int64_t>> entries(counts.begin(),
                                                      counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  if (static_cast<int>(entries.size()) > max_size) {
    entries.resize(static_cast<std::size_t>(max_size));
  }
  return Vocabulary(std::move(entries));
}

std::vector<Sentence> parse_corpus(std::string_view text) {
  // One sentence per line; empty lines stay as empty sentences so that
  // line-oriented encode/decode round trips preserve line structure.
  std::vector<Sentence> corpus;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    corpus.push_back(tokenize(text.substr(pos, eol - pos)));
    pos = eol + 1;
  }
  return corpus;
}

std::vector<Sentence> read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string format_vocab(const Vocabulary& vocab) {
  std::ostringstream out;
  for (const auto& [word, count] : vocab.entries()) {
    out << word << '\t' << count << '\n';
  }
  return out.str();
}

Vocabulary parse_vocab(std::string_view text) {
  std::vector<std::pair<Token, std::int64_t>> entries;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    if (!line.empty()) {
      const std::size_t tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw ArgumentError("vocabulary line " + std::to_string(line_no) +
                            " has no tab separator");
      }
      const std::string word(line.substr(0, tab));
      std::int64_t count = 0;
      try {
        count = std::stoll(std::string(line.substr(tab + 1)));
      } catch (const std::exception&) {
        throw ArgumentError("vocabulary line " + std::to_string(line_no) +
                            " has a bad count");
      }
      entries.emplace_back(word, count);
    }
    pos = eol + 1;
  }
  return Vocabulary(std::move(entries));
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open vocabulary file for writing: " + path);
  out << format_vocab(vocab);
  if (!out) throw IoError("failed writing vocabulary file: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vocab(buf.str());
}

}  // namespace wordcode
