#include "wordcode/bpe.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "wordcode/errors.hpp"

namespace wordcode {
namespace {

// One left-to-right pass. A merge cannot enable another match of the same
// rule on either side of itself, so a single pass is exhaustive.
void apply_merge(std::vector<std::string>& symbols, const MergeRule& rule) {
  std::size_t out = 0;
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == rule.left &&
        symbols[i + 1] == rule.right) {
      symbols[out++] = rule.merged;
      i += 2;
    } else {
      if (out != i) symbols[out] = std::move(symbols[i]);
      ++out;
      ++i;
    }
  }
  symbols.resize(out);
}

std::vector<std::string> word_symbols(const Token& word,
                                      std::string_view eow) {
  std::vector<std::string> symbols = split_code_points(word);
  symbols.emplace_back(eow);
  return symbols;
}

}  // namespace

MergeList train_bpe(const Vocabulary& vocab, int target_dict_size,
                    std::string_view eow) {
  if (eow.empty()) throw ArgumentError("train_bpe: empty eow marker");
  if (vocab.size() == 0) throw ArgumentError("train_bpe: empty vocabulary");

  std::vector<std::vector<std::string>> words;
  std::vector<std::int64_t> weights;
  std::set<std::string> alphabet;
  words.reserve(vocab.size());
  weights.reserve(vocab.size());
  for (const auto& [word, count] : vocab.entries()) {
    words.push_back(word_symbols(word, eow));
    weights.push_back(count);
    for (std::size_t i = 0; i + 1 < words.back().size(); ++i)
      alphabet.insert(words.back()[i]);
  }
  if (alphabet.count(std::string(eow)))
    throw ArgumentError("train_bpe: eow marker collides with a character");

  MergeList merges;
  merges.alphabet.assign(alphabet.begin(), alphabet.end());
  merges.eow = std::string(eow);

  const int base_size = static_cast<int>(alphabet.size()) + 1;
  if (target_dict_size < base_size)
    throw ArgumentError("train_bpe: target_dict_size " +
                        std::to_string(target_dict_size) +
                        " below alphabet size " + std::to_string(base_size));

  while (merges.dictionary_size() < target_dict_size) {
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& symbols = words[w];
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i)
        counts[{symbols[i], symbols[i + 1]}] += weights[w];
    }

    const std::pair<const std::pair<std::string, std::string>, std::int64_t>*
        best = nullptr;
    for (const auto& entry : counts)
      if (!best || entry.second > best->second) best = &entry;
    if (!best || best->second < 2) break;

    MergeRule rule{best->first.first, best->first.second,
                   best->first.first + best->first.second};
    for (auto& symbols : words) apply_merge(symbols, rule);
    merges.rules.push_back(std::move(rule));
  }
  return merges;
}

std::vector<std::string> bpe_encode(const Token& word,
                                    const MergeList& merges) {
  if (word.empty()) throw ArgumentError("bpe_encode: empty word");
  std::vector<std::string> symbols = word_symbols(word, merges.eow);
  for (const MergeRule& rule : merges.rules) apply_merge(symbols, rule);
  return symbols;
}

std::vector<Token> bpe_decode(const std::vector<std::string>& codes,
                              std::string_view eow) {
  std::vector<Token> words;
  std::string current;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const std::string& code = codes[i];
    current += code;
    if (code.size() >= eow.size() &&
        std::string_view(code).substr(code.size() - eow.size()) == eow) {
      current.resize(current.size() - eow.size());
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty())
    throw MalformedSequenceError(
        "bpe_decode: code sequence ends mid-word with \"" + current + "\"",
        codes.size(), current);
  return words;
}

std::vector<Token> bpe_decode(const std::vector<std::string>& codes,
                              const MergeList& merges) {
  return bpe_decode(codes, merges.eow);
}

std::int64_t encoded_symbol_count(const Vocabulary& vocab,
                                  const MergeList& merges) {
  std::int64_t total = 0;
  for (const auto& [word, count] : vocab.entries())
    total += count * static_cast<std::int64_t>(bpe_encode(word, merges).size());
  return total;
}

std::int64_t initial_symbol_count(const Vocabulary& vocab) {
  std::int64_t total = 0;
  for (const auto& [word, count] : vocab.entries())
    total +=
        count * static_cast<std::int64_t>(split_code_points(word).size() + 1);
  return total;
}

std::string format_merges(const MergeList& merges) {
  std::string out = "#bpe-v1 " + merges.eow + "\n";
  for (const MergeRule& rule : merges.rules) {
    out += rule.left;
    out += ' ';
    out += rule.right;
    out += '\n';
  }
  return out;
}

MergeList parse_merges(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("#bpe-v1 ", 0) != 0)
    throw ArgumentError("parse_merges: missing #bpe-v1 header");
  MergeList merges;
  merges.eow = line.substr(8);
  if (merges.eow.empty())
    throw ArgumentError("parse_merges: header lacks eow marker");

  std::set<std::string> alphabet;
  auto add_chars = [&](const std::string& component) {
    std::string_view body = component;
    if (body.size() >= merges.eow.size() &&
        body.substr(body.size() - merges.eow.size()) == merges.eow)
      body.remove_suffix(merges.eow.size());
    for (const std::string& cp : split_code_points(body)) alphabet.insert(cp);
  };

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 == line.size())
      throw ArgumentError("parse_merges: malformed rule at line " +
                          std::to_string(line_no));
    MergeRule rule{line.substr(0, sp), line.substr(sp + 1), {}};
    rule.merged = rule.left + rule.right;
    add_chars(rule.left);
    add_chars(rule.right);
    merges.rules.push_back(std::move(rule));
  }
  merges.alphabet.assign(alphabet.begin(), alphabet.end());
  return merges;
}

void save_merges(const MergeList& merges, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_merges(merges);
  if (!out.flush()) throw IoError("failed writing " + path);
}

MergeList load_merges(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_merges(buf.str());
}

}  // namespace wordcode
