#pragma once

#include <set>
#include <string>
#include <vector>

#include "vulnloc/bpe.hpp"
#include "vulnloc/dataset.hpp"

namespace vulnloc {

// Subword view of one function. Token i lives at position i and belongs to
// exactly one statement (statement_of_token[i]); this is the sparse form of
// the dense n x m binary membership matrix with one 1 per row.
struct TokenizedFunction {
  std::vector<int> token_ids;          // length n <= max_len
  std::vector<int> statement_of_token; // length n, values in [0, statement_count)
  int statement_count = 0;             // m, statements after segmentation
  std::vector<int> statement_lines;    // per statement: line in stripped source
  std::set<int> truncated_statements;  // statements with zero surviving tokens

  int surviving_statements() const {
    return statement_count - static_cast<int>(truncated_statements.size());
  }
  // member token positions per non-truncated statement, in statement order
  std::vector<std::vector<int>> statement_groups() const;
  // statement indices aligned with statement_groups()
  std::vector<int> surviving_statement_indices() const;
};

// Strips comments, segments statements, and emits tokens statement by
// statement, cutting the sequence at max_len. Statements whose tokens were
// all cut are recorded in truncated_statements. Throws std::runtime_error if
// no token survives.
TokenizedFunction tokenize_function(const FunctionSample& sample, const BpeVocab& vocab,
                                    int max_len);

// Drops every label-1 sample whose known vulnerable lines all fell outside
// the token window. Returns the number of removed samples.
int filter_truncation_conflicts(Dataset& dataset, const BpeVocab& vocab, int max_len);

// Statement index for a stripped-source line, or -1 when the line is blank
// or out of range.
int statement_for_line(const TokenizedFunction& tf, int line);

}  // namespace vulnloc
