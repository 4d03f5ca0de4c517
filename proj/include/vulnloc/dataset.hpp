#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vulnloc {

// One source function with its function-level label, optional line-level
// ground truth (0-based line indices in the comment-stripped source), and an
// optional CWE tag carried through untouched.
struct FunctionSample {
  std::string id;
  std::string source;
  int label = 0;
  std::optional<std::set<int>> vulnerable_lines;
  std::optional<std::string> cwe;
  std::string split;  // train | valid | test
};

struct Dataset {
  std::vector<FunctionSample> samples;

  std::vector<const FunctionSample*> split(const std::string& name) const;
};

// JSON Lines container: one object per line with fields
// {id, code, label, vulnerable_lines?, cwe?, split}. Malformed records and
// duplicate ids raise std::runtime_error naming the offending line/field.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);

struct SplitStats {
  long vulnerable = 0;
  long non_vulnerable = 0;
  double avg_statements = 0.0;       // over all functions in the split
  double avg_vulnerable_statements = 0.0;  // over vulnerable functions with line info
  bool has_line_info = false;
};

struct DatasetStats {
  SplitStats train, valid, test;
  std::string to_table() const;
};

DatasetStats dataset_stats(const Dataset& dataset);

// ---- fix-pair ingestion ----------------------------------------------------

struct FixPair {
  std::string id;
  std::string pre_fix;
  std::string post_fix;
};

// Line-level LCS diff of the comment-stripped sources. Deleted or modified
// pre-fix lines become vulnerable_lines; a pure insertion is anchored to the
// nearest preceding pre-fix line. Blank changed lines are ignored. Identical
// sources yield label 0 and set *warning when provided.
FunctionSample label_statements_from_fix(const FixPair& pair, std::string* warning = nullptr);

// JSONL records {id, code_before, code_after}.
std::vector<FixPair> load_fix_pairs(const std::string& path);

// ---- synthetic corpus ------------------------------------------------------

struct SyntheticSpec {
  int train_count = 200;
  int valid_count = 50;
  int test_count = 50;
  double vulnerable_fraction = 0.3;
  int min_statements = 8;
  int max_statements = 20;
  int min_vulnerable_lines = 1;
  int max_vulnerable_lines = 3;
  // token sequences that mark a line as vulnerable; defaults used when empty
  std::vector<std::vector<std::string>> planted_templates;
  std::uint64_t seed = 42;

  void validate() const;
};

// Pseudo-code functions of benign token lines; vulnerable functions carry
// planted-pattern lines at recorded indices. Deterministic under the seed.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace vulnloc
