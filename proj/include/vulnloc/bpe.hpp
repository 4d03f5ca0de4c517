#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vulnloc {

// Byte-pair-encoding vocabulary. The base alphabet is all 256 byte values
// (ids 0..255), so tokenization is total over arbitrary source bytes; each
// learned merge appends one token (id 256 + merge index). Applying the
// merge list in learned order reproduces training-time segmentation.
class BpeVocab {
 public:
  BpeVocab();

  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::string& token(int id) const { return id_to_token_[static_cast<std::size_t>(id)]; }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }

  // Splits text on whitespace-run boundaries (runs are kept as words of
  // their own, so detokenize(tokenize(x)) == x) and BPE-encodes each word.
  std::vector<int> tokenize(const std::string& text) const;
  std::string detokenize(const std::vector<int>& ids) const;

  std::vector<int> encode_word(const std::string& word) const;

  void add_merge(int left, int right);

  void save(const std::string& path) const;
  static BpeVocab load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::vector<std::pair<int, int>> merges_;
  // merge lookup: (left<<32|right) -> merged id
  std::unordered_map<std::uint64_t, int> merge_rank_;
  mutable std::unordered_map<std::string, std::vector<int>> word_cache_;
};

// Greedy highest-frequency pair merging until `vocab_size` tokens exist.
// Ties break toward the lexicographically smallest (left, right) token-string
// pair. Stops early (setting *warning when provided) if the corpus runs out
// of repeated pairs first.
BpeVocab train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                   std::string* warning = nullptr);

}  // namespace vulnloc
