#include "vulnloc/bpe.hpp"

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vulnloc {

namespace {

std::uint64_t pair_key(int left, int right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

// Words are maximal runs of non-whitespace or of whitespace, so
// concatenating the words reproduces the input exactly.
std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  bool current_ws = false;
  for (char c : text) {
    const bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!current.empty() && ws != current_ws) {
      words.push_back(current);
      current.clear();
    }
    current.push_back(c);
    current_ws = ws;
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

std::string escape_token(const std::string& token) {
  std::string out;
  for (unsigned char c : token) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c >= 0x7f) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  return out;
}

std::string unescape_token(const std::string& text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out.push_back(text[i]);
      continue;
    }
    if (i + 1 >= text.size()) throw std::runtime_error("bpe vocab: dangling escape");
    const char c = text[++i];
    switch (c) {
      case '\\': out.push_back('\\'); break;
      case 's': out.push_back(' '); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 'x': {
        if (i + 2 >= text.size()) throw std::runtime_error("bpe vocab: bad \\x escape");
        const std::string hex = text.substr(i + 1, 2);
        out.push_back(static_cast<char>(std::stoi(hex, nullptr, 16)));
        i += 2;
        break;
      }
      default:
        throw std::runtime_error("bpe vocab: unknown escape '\\" + std::string(1, c) + "'");
    }
  }
  return out;
}

}  // namespace

BpeVocab::BpeVocab() {
  id_to_token_.reserve(256);
  for (int b = 0; b < 256; ++b) {
    id_to_token_.emplace_back(1, static_cast<char>(b));
  }
}

void BpeVocab::add_merge(int left, int right) {
  if (left < 0 || left >= size() || right < 0 || right >= size()) {
    throw std::invalid_argument("bpe: merge references unknown token id");
  }
  const int id = size();
  id_to_token_.push_back(id_to_token_[static_cast<std::size_t>(left)] +
                         id_to_token_[static_cast<std::size_t>(right)]);
  merges_.emplace_back(left, right);
  merge_rank_[pair_key(left, right)] = id;
  word_cache_.clear();
}

std::vector<int> BpeVocab::encode_word(const std::string& word) const {
  auto cached = word_cache_.find(word);
  if (cached != word_cache_.end()) return cached->second;

  std::vector<int> symbols;
  symbols.reserve(word.size());
  for (unsigned char c : word) symbols.push_back(static_cast<int>(c));

  // apply merges in learned order; each pass collapses every occurrence
  for (std::size_t rule = 0; rule < merges_.size() && symbols.size() > 1; ++rule) {
    const auto [left, right] = merges_[rule];
    const int merged = 256 + static_cast<int>(rule);
    std::vector<int> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
        next.push_back(merged);
        ++i;
      } else {
        next.push_back(symbols[i]);
      }
    }
    symbols.swap(next);
  }

  word_cache_[word] = symbols;
  return symbols;
}

std::vector<int> BpeVocab::tokenize(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& word : split_words(text)) {
    const auto word_ids = encode_word(word);
    ids.insert(ids.end(), word_ids.begin(), word_ids.end());
  }
  return ids;
}

std::string BpeVocab::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < 0 || id >= size()) throw std::out_of_range("bpe: token id out of range");
    out += id_to_token_[static_cast<std::size_t>(id)];
  }
  return out;
}

void BpeVocab::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("bpe vocab: cannot open '" + path + "' for writing");
  out << "# vulnloc bpe merges v1\n";
  for (const auto& [left, right] : merges_) {
    out << escape_token(id_to_token_[static_cast<std::size_t>(left)]) << ' '
        << escape_token(id_to_token_[static_cast<std::size_t>(right)]) << '\n';
  }
  if (!out) throw std::runtime_error("bpe vocab: write to '" + path + "' failed");
}

BpeVocab BpeVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("bpe vocab: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "# vulnloc bpe merges v1") {
    throw std::runtime_error("bpe vocab: '" + path + "' missing version header");
  }

  BpeVocab vocab;
  std::unordered_map<std::string, int> token_ids;
  for (int b = 0; b < 256; ++b) token_ids[vocab.token(b)] = b;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) {
      throw std::runtime_error("bpe vocab: malformed merge at line " + std::to_string(line_no));
    }
    const std::string left = unescape_token(line.substr(0, space));
    const std::string right = unescape_token(line.substr(space + 1));
    auto li = token_ids.find(left);
    auto ri = token_ids.find(right);
    if (li == token_ids.end() || ri == token_ids.end()) {
      throw std::runtime_error("bpe vocab: merge at line " + std::to_string(line_no) +
                               " references unknown token");
    }
    vocab.add_merge(li->second, ri->second);
    token_ids[vocab.token(vocab.size() - 1)] = vocab.size() - 1;
  }
  return vocab;
}

BpeVocab train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                   std::string* warning) {
  if (corpus.empty()) throw std::invalid_argument("train_bpe: empty corpus");
  if (vocab_size <= 256) {
    throw std::invalid_argument("train_bpe: vocab_size must exceed the 256-byte alphabet");
  }

  // distinct word -> frequency, with words as mutable symbol sequences
  std::map<std::string, long> word_freq;
  for (const auto& text : corpus) {
    for (const auto& word : split_words(text)) ++word_freq[word];
  }

  BpeVocab vocab;
  std::vector<std::vector<int>> words;
  std::vector<long> freqs;
  words.reserve(word_freq.size());
  for (const auto& [word, freq] : word_freq) {
    std::vector<int> symbols;
    symbols.reserve(word.size());
    for (unsigned char c : word) symbols.push_back(static_cast<int>(c));
    words.push_back(std::move(symbols));
    freqs.push_back(freq);
  }

  while (vocab.size() < vocab_size) {
    std::unordered_map<std::uint64_t, long> pair_counts;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& symbols = words[w];
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_counts[pair_key(symbols[i], symbols[i + 1])] += freqs[w];
      }
    }
    if (pair_counts.empty()) break;

    // best = highest count, ties by lexicographically smallest token pair
    bool have_best = false;
    long best_count = 0;
    int best_left = 0, best_right = 0;
    for (const auto& [key, count] : pair_counts) {
      const int left = static_cast<int>(key >> 32);
      const int right = static_cast<int>(key & 0xffffffffu);
      bool better = false;
      if (!have_best || count > best_count) {
        better = true;
      } else if (count == best_count) {
        const auto& bl = vocab.token(best_left);
        const auto& br = vocab.token(best_right);
        const auto& cl = vocab.token(left);
        const auto& cr = vocab.token(right);
        better = std::tie(cl, cr) < std::tie(bl, br);
      }
      if (better) {
        have_best = true;
        best_count = count;
        best_left = left;
        best_right = right;
      }
    }
    vocab.add_merge(best_left, best_right);
    const int merged = vocab.size() - 1;
    for (auto& symbols : words) {
      if (symbols.size() < 2) continue;
      std::vector<int> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == best_left && symbols[i + 1] == best_right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(symbols[i]);
        }
      }
      symbols.swap(next);
    }
  }

  if (vocab.size() < vocab_size && warning) {
    std::ostringstream msg;
    msg << "corpus exhausted after " << vocab.merges().size() << " merges; vocabulary has "
        << vocab.size() << " of " << vocab_size << " requested tokens";
    *warning = msg.str();
  }
  return vocab;
}

}  // namespace vulnloc
