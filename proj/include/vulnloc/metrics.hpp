#pragma once

#include <set>
#include <string>
#include <vector>

#include "vulnloc/model.hpp"

namespace vulnloc {

// Function verdict derived from statement scores: the function is vulnerable
// iff at least one statement crosses the threshold (the predicted-label
// analog of the bag/instance max relation).
struct FunctionPrediction {
  std::string id;
  int predicted_label = 0;
  std::vector<int> statement_labels;  // aligned with scores rows
  std::vector<StatementScores::Row> scores;
  std::vector<int> ranked_rows;  // row indices, best first, 1-based rank = position+1
};

FunctionPrediction predict_function(const StatementScores& scores, double threshold = 0.5,
                                    const std::string& id = "");

// Descending fused score; ties go to the lower line index. Returns row
// indices; ranks are 1-based positions in this order.
std::vector<int> rank_statements(const StatementScores& scores);

struct ConfusionStats {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double acc = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  // zero denominators are reported as 0 with the matching flag set
  bool degenerate_precision = false, degenerate_recall = false, degenerate_f1 = false;
};

ConfusionStats confusion_and_prf(const std::vector<int>& predicted,
                                 const std::vector<int>& actual);

// Ranked lines plus ground truth for one vulnerable function; every case
// must contain at least one vulnerable line present in the ranking.
struct LocalizationCase {
  std::vector<int> ranked_lines;
  std::set<int> vulnerable_lines;
};

struct RankingMetrics {
  double top1 = 0.0, top3 = 0.0, top5 = 0.0;
  double mfr = 0.0, mar = 0.0, ifa = 0.0;
  long functions = 0;  // |S_v|
};

RankingMetrics ranking_metrics(const std::vector<LocalizationCase>& cases);

struct EvalReport {
  ConfusionStats function_level;
  bool statement_absolute_available = false;
  ConfusionStats statement_level;
  bool ranking_available = false;
  RankingMetrics ranking;
  long test_functions = 0;
  long scored_statements = 0;
  double threshold = 0.5;

  std::string to_table() const;
  std::string to_json() const;
};

// Scores one function in eval mode (no graph, no dropout).
StatementScores score_function(const ModelParams& model, const EncoderConfig& config,
                               const TokenizedFunction& tokens);

// Full test-split evaluation. Statement-level blocks require line-level
// ground truth: the absolute block covers every function whose statement
// truth is known, the ranking block covers vulnerable functions with at
// least one labeled line surviving tokenization. `threads` > 1 parallelizes
// the read-only per-function scoring without changing any result.
EvalReport evaluate(const ModelParams& model, const EncoderConfig& config,
                    const std::vector<const FunctionSample*>& test_samples,
                    const std::vector<const TokenizedFunction*>& test_tokens,
                    double threshold = 0.5, int threads = 1);

}  // namespace vulnloc
