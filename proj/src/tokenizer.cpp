#include "vulnloc/tokenizer.hpp"

#include <algorithm>
#include <stdexcept>

#include "vulnloc/text.hpp"

namespace vulnloc {

std::vector<std::vector<int>> TokenizedFunction::statement_groups() const {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(statement_count));
  for (std::size_t i = 0; i < statement_of_token.size(); ++i) {
    groups[static_cast<std::size_t>(statement_of_token[i])].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> surviving;
  surviving.reserve(groups.size());
  for (int j = 0; j < statement_count; ++j) {
    if (!truncated_statements.count(j)) surviving.push_back(std::move(groups[static_cast<std::size_t>(j)]));
  }
  return surviving;
}

std::vector<int> TokenizedFunction::surviving_statement_indices() const {
  std::vector<int> indices;
  indices.reserve(static_cast<std::size_t>(statement_count));
  for (int j = 0; j < statement_count; ++j) {
    if (!truncated_statements.count(j)) indices.push_back(j);
  }
  return indices;
}

TokenizedFunction tokenize_function(const FunctionSample& sample, const BpeVocab& vocab,
                                    int max_len) {
  if (max_len < 1) throw std::invalid_argument("tokenize_function: max_len must be >= 1");
  const std::string stripped = strip_comments(sample.source);
  const auto statements = segment_statements(stripped);

  TokenizedFunction tf;
  tf.statement_count = static_cast<int>(statements.size());
  tf.statement_lines.reserve(statements.size());
  for (const auto& s : statements) tf.statement_lines.push_back(s.line);

  for (int j = 0; j < tf.statement_count; ++j) {
    const auto ids = vocab.tokenize(statements[static_cast<std::size_t>(j)].text);
    bool any_survived = false;
    for (int id : ids) {
      if (static_cast<int>(tf.token_ids.size()) >= max_len) break;
      tf.token_ids.push_back(id);
      tf.statement_of_token.push_back(j);
      any_survived = true;
    }
    if (!any_survived) tf.truncated_statements.insert(j);
  }

  if (tf.token_ids.empty()) {
    throw std::runtime_error("tokenize_function: no token survived for sample '" + sample.id + "'");
  }
  return tf;
}

int statement_for_line(const TokenizedFunction& tf, int line) {
  const auto it = std::lower_bound(tf.statement_lines.begin(), tf.statement_lines.end(), line);
  if (it == tf.statement_lines.end() || *it != line) return -1;
  return static_cast<int>(it - tf.statement_lines.begin());
}

int filter_truncation_conflicts(Dataset& dataset, const BpeVocab& vocab, int max_len) {
  std::vector<FunctionSample> kept;
  kept.reserve(dataset.samples.size());
  int removed = 0;
  for (auto& sample : dataset.samples) {
    bool drop = false;
    if (sample.label == 1 && sample.vulnerable_lines.has_value()) {
      const auto tf = tokenize_function(sample, vocab, max_len);
      bool any_survives = false;
      for (int line : *sample.vulnerable_lines) {
        const int stmt = statement_for_line(tf, line);
        if (stmt >= 0 && !tf.truncated_statements.count(stmt)) {
          any_survives = true;
          break;
        }
      }
      drop = !any_survives;
    }
    if (drop) {
      ++removed;
    } else {
      kept.push_back(std::move(sample));
    }
  }
  dataset.samples = std::move(kept);
  return removed;
}

}  // namespace vulnloc
