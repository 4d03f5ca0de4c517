#include "vulnloc/text.hpp"

#include <cctype>
#include <stdexcept>

namespace vulnloc {

std::string strip_comments(const std::string& source, std::string* warning) {
  enum class State { Code, LineComment, BlockComment, StringLit, CharLit };
  State state = State::Code;
  std::string out;
  out.reserve(source.size());

  const std::size_t n = source.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = source[i];
    const char next = i + 1 < n ? source[i + 1] : '\0';
    switch (state) {
      case State::Code:
        if (c == '/' && next == '/') {
          state = State::LineComment;
          ++i;
        } else if (c == '/' && next == '*') {
          state = State::BlockComment;
          ++i;
        } else if (c == '"') {
          state = State::StringLit;
          out.push_back(c);
        } else if (c == '\'') {
          state = State::CharLit;
          out.push_back(c);
        } else {
          out.push_back(c);
        }
        break;
      case State::LineComment:
        if (c == '\n') {
          out.push_back(c);
          state = State::Code;
        }
        break;
      case State::BlockComment:
        if (c == '*' && next == '/') {
          state = State::Code;
          ++i;
        } else if (c == '\n') {
          out.push_back(c);  // keep line numbering stable
        }
        break;
      case State::StringLit:
        out.push_back(c);
        if (c == '\\' && i + 1 < n) {
          out.push_back(next);
          ++i;
        } else if (c == '"') {
          state = State::Code;
        }
        break;
      case State::CharLit:
        out.push_back(c);
        if (c == '\\' && i + 1 < n) {
          out.push_back(next);
          ++i;
        } else if (c == '\'') {
          state = State::Code;
        }
        break;
    }
  }

  if (state == State::BlockComment && warning) {
    *warning = "unterminated block comment; stripped to end of input";
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::vector<StatementSpan> segment_statements(const std::string& stripped_source) {
  std::vector<StatementSpan> statements;
  const auto lines = split_lines(stripped_source);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    bool blank = true;
    for (char c : lines[i]) {
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    }
    if (!blank) {
      statements.push_back({static_cast<int>(i), lines[i]});
    }
  }
  if (statements.empty()) {
    throw std::invalid_argument("segment_statements: no statements in function body");
  }
  return statements;
}

}  // namespace vulnloc
