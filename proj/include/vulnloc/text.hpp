#pragma once

#include <string>
#include <vector>

namespace vulnloc {

// Removes // and /* */ comments from C/C++-like source without a full parse.
// String and character literals are respected; the line structure of the
// remaining code is preserved (newlines inside block comments are kept so
// line indices stay stable). An unterminated block comment strips to EOF and
// sets *warning when provided.
std::string strip_comments(const std::string& source, std::string* warning = nullptr);

struct StatementSpan {
  int line = 0;       // 0-based physical line in the comment-stripped source
  std::string text;   // the line's content, without the trailing newline
};

// One statement per non-blank physical line of comment-stripped source, in
// order. Throws std::invalid_argument when no statement remains.
std::vector<StatementSpan> segment_statements(const std::string& stripped_source);

std::vector<std::string> split_lines(const std::string& text);

}  // namespace vulnloc
