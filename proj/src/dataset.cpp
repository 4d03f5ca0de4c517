#include "vulnloc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "vulnloc/rng.hpp"
#include "vulnloc/text.hpp"

#include <json.hpp>

namespace vulnloc {

namespace {

using nlohmann::json;

const std::unordered_set<std::string> kSplits = {"train", "valid", "test"};

[[noreturn]] void record_error(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

void validate_sample(const FunctionSample& s, const std::string& path, int line) {
  if (s.label != 0 && s.label != 1) record_error(path, line, "field 'label' must be 0 or 1");
  if (!kSplits.count(s.split)) {
    record_error(path, line, "field 'split' must be one of train/valid/test");
  }
  if (s.vulnerable_lines.has_value()) {
    if (s.label == 1 && s.vulnerable_lines->empty()) {
      record_error(path, line, "label 1 with empty 'vulnerable_lines'");
    }
    if (s.label == 0 && !s.vulnerable_lines->empty()) {
      record_error(path, line, "label 0 with non-empty 'vulnerable_lines'");
    }
    const auto stripped_lines = split_lines(strip_comments(s.source));
    for (int v : *s.vulnerable_lines) {
      if (v < 0 || v >= static_cast<int>(stripped_lines.size())) {
        record_error(path, line, "'vulnerable_lines' index " + std::to_string(v) +
                                     " outside the comment-stripped source");
      }
    }
  }
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::vector<const FunctionSample*> Dataset::split(const std::string& name) const {
  std::vector<const FunctionSample*> out;
  for (const auto& s : samples) {
    if (s.split == name) out.push_back(&s);
  }
  return out;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");

  Dataset dataset;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      record_error(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) record_error(path, line_no, "record is not a JSON object");

    FunctionSample s;
    try {
      s.id = record.at("id").get<std::string>();
      s.source = record.at("code").get<std::string>();
      s.label = record.at("label").get<int>();
      s.split = record.at("split").get<std::string>();
      if (record.contains("vulnerable_lines") && !record["vulnerable_lines"].is_null()) {
        std::set<int> lines;
        for (const auto& v : record.at("vulnerable_lines")) lines.insert(v.get<int>());
        s.vulnerable_lines = std::move(lines);
      }
      if (record.contains("cwe") && !record["cwe"].is_null()) {
        s.cwe = record.at("cwe").get<std::string>();
      }
    } catch (const json::exception& e) {
      record_error(path, line_no, std::string("bad record field: ") + e.what());
    }

    validate_sample(s, path, line_no);
    if (!seen_ids.insert(s.id).second) {
      record_error(path, line_no, "duplicate id '" + s.id + "'");
    }
    dataset.samples.push_back(std::move(s));
  }
  if (dataset.samples.empty()) {
    throw std::runtime_error("dataset: '" + path + "' contains no records");
  }
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot open '" + path + "' for writing");
  for (const auto& s : dataset.samples) {
    json record;
    record["id"] = s.id;
    record["code"] = s.source;
    record["label"] = s.label;
    record["split"] = s.split;
    if (s.vulnerable_lines.has_value()) {
      record["vulnerable_lines"] = *s.vulnerable_lines;
    }
    if (s.cwe.has_value()) record["cwe"] = *s.cwe;
    out << record.dump() << '\n';
  }
  if (!out) throw std::runtime_error("dataset: write to '" + path + "' failed");
}

namespace {

SplitStats stats_for(const std::vector<const FunctionSample*>& samples) {
  SplitStats st;
  long statement_total = 0;
  long vul_statement_total = 0;
  long vul_with_lines = 0;
  for (const auto* s : samples) {
    if (s->label == 1) {
      ++st.vulnerable;
    } else {
      ++st.non_vulnerable;
    }
    const auto stripped = strip_comments(s->source);
    const auto lines = split_lines(stripped);
    long statements = 0;
    for (const auto& l : lines) {
      if (!is_blank(l)) ++statements;
    }
    statement_total += statements;
    if (s->label == 1 && s->vulnerable_lines.has_value()) {
      st.has_line_info = true;
      ++vul_with_lines;
      vul_statement_total += static_cast<long>(s->vulnerable_lines->size());
    }
  }
  const long total = st.vulnerable + st.non_vulnerable;
  st.avg_statements = total > 0 ? static_cast<double>(statement_total) / total : 0.0;
  st.avg_vulnerable_statements =
      vul_with_lines > 0 ? static_cast<double>(vul_statement_total) / vul_with_lines : 0.0;
  return st;
}

void stats_row(std::ostream& out, const std::string& name, const SplitStats& st) {
  out << std::left << std::setw(8) << name << std::right << std::setw(10) << st.vulnerable
      << std::setw(12) << st.non_vulnerable << std::setw(14);
  out << std::fixed << std::setprecision(2) << st.avg_statements << std::setw(18);
  if (st.has_line_info) {
    out << st.avg_vulnerable_statements;
  } else {
    out << "N/A";
  }
  out << '\n';
}

}  // namespace

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats stats;
  stats.train = stats_for(dataset.split("train"));
  stats.valid = stats_for(dataset.split("valid"));
  stats.test = stats_for(dataset.split("test"));
  return stats;
}

std::string DatasetStats::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(8) << "split" << std::right << std::setw(10) << "vul"
      << std::setw(12) << "non-vul" << std::setw(14) << "avg stat" << std::setw(18)
      << "avg vul stat" << '\n';
  stats_row(out, "train", train);
  stats_row(out, "valid", valid);
  stats_row(out, "test", test);
  return out.str();
}

// ---- fix-pair diff labeling -------------------------------------------------

namespace {

// classic O(a*b) line LCS; functions are short enough that this is fine
std::vector<std::pair<int, int>> lcs_pairs(const std::vector<std::string>& a,
                                           const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      dp[i][j] = a[i] == b[j] ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
    }
  }
  std::vector<std::pair<int, int>> matches;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j]) {
      matches.emplace_back(static_cast<int>(i), static_cast<int>(j));
      ++i;
      ++j;
    } else if (dp[i + 1][j] >= dp[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return matches;
}

}  // namespace

FunctionSample label_statements_from_fix(const FixPair& pair, std::string* warning) {
  const auto pre_lines = split_lines(strip_comments(pair.pre_fix));
  const auto post_lines = split_lines(strip_comments(pair.post_fix));

  FunctionSample sample;
  sample.id = pair.id;
  sample.source = pair.pre_fix;
  sample.split = "train";

  if (pre_lines == post_lines) {
    sample.label = 0;
    sample.vulnerable_lines = std::set<int>{};
    if (warning) *warning = "fix pair '" + pair.id + "' has identical sources";
    return sample;
  }

  const auto matches = lcs_pairs(pre_lines, post_lines);
  std::vector<bool> pre_matched(pre_lines.size(), false);
  std::vector<bool> post_matched(post_lines.size(), false);
  for (const auto& [pi, qi] : matches) {
    pre_matched[static_cast<std::size_t>(pi)] = true;
    post_matched[static_cast<std::size_t>(qi)] = true;
  }

  std::set<int> vulnerable;
  // deleted or modified pre-fix lines
  for (std::size_t i = 0; i < pre_lines.size(); ++i) {
    if (!pre_matched[i] && !is_blank(pre_lines[i])) vulnerable.insert(static_cast<int>(i));
  }
  // A deletion-free fix still indicates the vulnerability's locus: anchor
  // each inserted post line to the pre line preceding the insertion point
  // (the first following match when the insertion leads the function). When
  // any pre line was deleted, the deletions already carry the labels.
  if (vulnerable.empty()) {
    for (std::size_t j = 0; j < post_lines.size(); ++j) {
      if (post_matched[j] || is_blank(post_lines[j])) continue;
      int anchor = -1;
      for (const auto& [pi, qi] : matches) {
        if (qi < static_cast<int>(j)) {
          anchor = pi;
        } else {
          if (anchor == -1) anchor = pi;  // insertion before the first match
          break;
        }
      }
      if (anchor >= 0 && !is_blank(pre_lines[static_cast<std::size_t>(anchor)])) {
        vulnerable.insert(anchor);
      }
    }
  }

  sample.label = vulnerable.empty() ? 0 : 1;
  if (sample.label == 1) {
    sample.vulnerable_lines = std::move(vulnerable);
  } else {
    sample.vulnerable_lines = std::set<int>{};
    if (warning) {
      *warning = "fix pair '" + pair.id + "' differs only in blank lines; labeled 0";
    }
  }
  return sample;
}

std::vector<FixPair> load_fix_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fix pairs: cannot open '" + path + "'");
  std::vector<FixPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
      pairs.push_back({record.at("id").get<std::string>(),
                       record.at("code_before").get<std::string>(),
                       record.at("code_after").get<std::string>()});
    } catch (const json::exception& e) {
      record_error(path, line_no, std::string("bad fix-pair record: ") + e.what());
    }
  }
  return pairs;
}

// ---- synthetic corpus -------------------------------------------------------

void SyntheticSpec::validate() const {
  if (train_count < 0 || valid_count < 0 || test_count < 0 ||
      train_count + valid_count + test_count == 0) {
    throw std::invalid_argument("synthetic: split counts must be non-negative and not all zero");
  }
  if (vulnerable_fraction < 0.0 || vulnerable_fraction > 1.0) {
    throw std::invalid_argument("synthetic: vulnerable_fraction must lie in [0, 1]");
  }
  if (min_statements < 1 || max_statements < min_statements) {
    throw std::invalid_argument("synthetic: bad statements-per-function range");
  }
  if (min_vulnerable_lines < 1 || max_vulnerable_lines < min_vulnerable_lines) {
    throw std::invalid_argument("synthetic: bad vulnerable-lines range");
  }
  if (max_vulnerable_lines > min_statements) {
    throw std::invalid_argument("synthetic: vulnerable lines cannot exceed min statements");
  }
}

namespace {

const std::vector<std::vector<std::string>>& default_templates() {
  static const std::vector<std::vector<std::string>> templates = {
      {"copy", "raw", "input", "without", "bound"},
      {"free", "slot", "then", "deref", "slot"},
      {"sum", "narrow", "counters", "into", "short"},
      {"format", "external", "text", "into", "log"},
  };
  return templates;
}

std::string benign_line(Rng& rng) {
  static const std::vector<std::string> verbs = {"load",  "store", "move", "mask",
                                                 "shift", "init",  "read", "swap"};
  static const std::vector<std::string> nouns = {"reg", "slot", "val", "ptr", "len", "idx"};
  std::ostringstream line;
  line << verbs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(verbs.size()) - 1))];
  const int operands = rng.uniform_int(2, 4);
  for (int i = 0; i < operands; ++i) {
    line << ' '
         << nouns[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(nouns.size()) - 1))]
         << rng.uniform_int(0, 9);
  }
  return line.str();
}

FunctionSample synthesize_function(const std::string& id, const std::string& split,
                                   bool vulnerable, const SyntheticSpec& spec,
                                   const std::vector<std::vector<std::string>>& templates,
                                   Rng& rng) {
  const int statements = rng.uniform_int(spec.min_statements, spec.max_statements);

  std::vector<std::string> body(static_cast<std::size_t>(statements));
  for (auto& line : body) line = benign_line(rng);

  std::set<int> planted_statements;
  if (vulnerable) {
    const int planted =
        std::min(rng.uniform_int(spec.min_vulnerable_lines, spec.max_vulnerable_lines), statements);
    while (static_cast<int>(planted_statements.size()) < planted) {
      planted_statements.insert(rng.uniform_int(0, statements - 1));
    }
    for (int idx : planted_statements) {
      const auto& tpl =
          templates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(templates.size()) - 1))];
      std::ostringstream line;
      for (std::size_t t = 0; t < tpl.size(); ++t) {
        if (t) line << ' ';
        line << tpl[t];
      }
      body[static_cast<std::size_t>(idx)] = line.str();
    }
  }

  // occasional blank line so statement indices and line indices differ
  std::ostringstream source;
  std::set<int> vulnerable_lines;
  int line_no = 0;
  for (int j = 0; j < statements; ++j) {
    if (j > 0 && rng.uniform() < 0.15) {
      source << '\n';
      ++line_no;
    }
    source << body[static_cast<std::size_t>(j)] << '\n';
    if (planted_statements.count(j)) vulnerable_lines.insert(line_no);
    ++line_no;
  }

  FunctionSample sample;
  sample.id = id;
  sample.source = source.str();
  sample.label = vulnerable ? 1 : 0;
  sample.vulnerable_lines = std::move(vulnerable_lines);
  sample.split = split;
  return sample;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto& templates = spec.planted_templates.empty() ? default_templates() : spec.planted_templates;
  for (const auto& tpl : templates) {
    if (tpl.empty()) throw std::invalid_argument("synthetic: empty planted template");
  }

  Rng rng(spec.seed);
  Dataset dataset;
  const struct {
    const char* name;
    int count;
  } splits[] = {{"train", spec.train_count}, {"valid", spec.valid_count}, {"test", spec.test_count}};

  for (const auto& [split_name, count] : splits) {
    // exact vulnerable count at the fraction's mean; seeded placement
    const int vulnerable_count =
        std::min(count, static_cast<int>(std::lround(spec.vulnerable_fraction * count)));
    std::vector<char> is_vulnerable(static_cast<std::size_t>(count), 0);
    std::fill(is_vulnerable.begin(), is_vulnerable.begin() + vulnerable_count, 1);
    rng.shuffle(is_vulnerable);

    for (int i = 0; i < count; ++i) {
      std::ostringstream id;
      id << "syn-" << split_name << '-' << std::setw(4) << std::setfill('0') << i;
      dataset.samples.push_back(synthesize_function(
          id.str(), split_name, is_vulnerable[static_cast<std::size_t>(i)] != 0, spec, templates,
          rng));
    }
  }
  return dataset;
}

}  // namespace vulnloc
