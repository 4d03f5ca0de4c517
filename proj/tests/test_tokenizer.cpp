#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "vulnloc/bpe.hpp"
#include "vulnloc/tokenizer.hpp"

using namespace vulnloc;

namespace {

FunctionSample make_sample(std::string id, std::string source, int label = 0,
                           std::set<int> vulnerable = {}) {
  FunctionSample s;
  s.id = std::move(id);
  s.source = std::move(source);
  s.label = label;
  if (label == 1) s.vulnerable_lines = std::move(vulnerable);
  s.split = "train";
  return s;
}

BpeVocab tiny_vocab() { return train_bpe({"load reg slot val"}, 270); }

}  // namespace

TEST_CASE("function shorter than max_len keeps every statement") {
  const auto vocab = tiny_vocab();
  const auto tf = tokenize_function(make_sample("f", "load reg\nslot val\n"), vocab, 512);
  CHECK(tf.statement_count == 2);
  CHECK(tf.truncated_statements.empty());
  CHECK(tf.token_ids.size() == tf.statement_of_token.size());
}

TEST_CASE("truncation cuts a prefix and records fully-cut statements") {
  const auto vocab = tiny_vocab();
  std::string source;
  for (int i = 0; i < 40; ++i) source += "load reg slot val\n";
  const auto full = tokenize_function(make_sample("f", source), vocab, 10000);
  const auto cut = tokenize_function(make_sample("f", source), vocab, 17);

  REQUIRE(cut.token_ids.size() == 17);
  // prefix property: surviving tokens and their membership are unchanged
  for (std::size_t i = 0; i < cut.token_ids.size(); ++i) {
    CHECK(cut.token_ids[i] == full.token_ids[i]);
    CHECK(cut.statement_of_token[i] == full.statement_of_token[i]);
  }
  CHECK(cut.statement_count == 40);
  CHECK_FALSE(cut.truncated_statements.empty());
  // a partially surviving statement is not "truncated"
  CHECK(cut.truncated_statements.count(cut.statement_of_token.back()) == 0);
}

TEST_CASE("dense membership matrix has unit row sums and token-count column sums") {
  const auto vocab = tiny_vocab();
  const auto tf = tokenize_function(
      make_sample("f", "load reg slot\nval reg\n\nload slot val reg\n"), vocab, 512);

  // brute-force dense reconstruction of S
  const int n = static_cast<int>(tf.token_ids.size());
  const int m = tf.statement_count;
  std::vector<std::vector<int>> dense(static_cast<std::size_t>(n),
                                      std::vector<int>(static_cast<std::size_t>(m), 0));
  for (int i = 0; i < n; ++i) {
    dense[static_cast<std::size_t>(i)][static_cast<std::size_t>(tf.statement_of_token[i])] = 1;
  }

  for (int i = 0; i < n; ++i) {
    int row_sum = 0;
    for (int j = 0; j < m; ++j) row_sum += dense[i][j];
    CHECK(row_sum == 1);
  }
  std::vector<int> expected_counts(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < n; ++i) ++expected_counts[static_cast<std::size_t>(tf.statement_of_token[i])];
  for (int j = 0; j < m; ++j) {
    int col_sum = 0;
    for (int i = 0; i < n; ++i) col_sum += dense[i][j];
    CHECK(col_sum == expected_counts[static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("statement indices are monotone in token order") {
  const auto vocab = tiny_vocab();
  const auto tf =
      tokenize_function(make_sample("f", "load reg\nslot\nval val\nreg\n"), vocab, 512);
  for (std::size_t i = 1; i < tf.statement_of_token.size(); ++i) {
    CHECK(tf.statement_of_token[i] >= tf.statement_of_token[i - 1]);
  }
}

TEST_CASE("same source and vocab produce identical tokenization") {
  const auto vocab = tiny_vocab();
  const auto sample = make_sample("f", "load reg slot\nval\n");
  const auto a = tokenize_function(sample, vocab, 512);
  const auto b = tokenize_function(sample, vocab, 512);
  CHECK(a.token_ids == b.token_ids);
  CHECK(a.statement_of_token == b.statement_of_token);
  CHECK(a.statement_lines == b.statement_lines);
}

TEST_CASE("statement lines map back through blank lines") {
  const auto vocab = tiny_vocab();
  const auto tf = tokenize_function(make_sample("f", "load reg\n\nslot val\n"), vocab, 512);
  REQUIRE(tf.statement_count == 2);
  CHECK(tf.statement_lines[0] == 0);
  CHECK(tf.statement_lines[1] == 2);
  CHECK(statement_for_line(tf, 2) == 1);
  CHECK(statement_for_line(tf, 1) == -1);  // blank line
  CHECK(statement_for_line(tf, 9) == -1);
}

TEST_CASE("truncation-conflict filter drops only unlocatable vulnerable samples") {
  const auto vocab = tiny_vocab();
  std::string head;
  for (int i = 0; i < 30; ++i) head += "load reg slot val\n";

  Dataset dataset;
  // vulnerable line is the last statement, far past a max_len of 16 tokens
  dataset.samples.push_back(make_sample("gone", head + "reg reg\n", 1, {30}));
  // same shape but the vulnerable line is the very first statement
  dataset.samples.push_back(make_sample("kept", head + "reg reg\n", 1, {0}));
  // non-vulnerable functions are never dropped
  dataset.samples.push_back(make_sample("benign", head, 0));
  // vulnerable without line info is kept (nothing to check against)
  dataset.samples.push_back(make_sample("nolines", head));
  dataset.samples.back().label = 1;

  const int removed = filter_truncation_conflicts(dataset, vocab, 16);
  CHECK(removed == 1);
  REQUIRE(dataset.samples.size() == 3);
  CHECK(dataset.samples[0].id == "kept");
  CHECK(dataset.samples[1].id == "benign");
  CHECK(dataset.samples[2].id == "nolines");
}

TEST_CASE("zero surviving tokens is an error") {
  const auto vocab = tiny_vocab();
  CHECK_THROWS(tokenize_function(make_sample("f", "\n \n"), vocab, 512));
}
