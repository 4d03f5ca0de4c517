#include "vulnloc/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace vulnloc {

std::vector<int> rank_statements(const StatementScores& scores) {
  if (scores.rows.empty()) throw std::invalid_argument("rank_statements: no scored statements");
  std::vector<int> order(scores.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ra = scores.rows[static_cast<std::size_t>(a)];
    const auto& rb = scores.rows[static_cast<std::size_t>(b)];
    if (ra.p != rb.p) return ra.p > rb.p;
    return ra.line < rb.line;
  });
  return order;
}

FunctionPrediction predict_function(const StatementScores& scores, double threshold,
                                    const std::string& id) {
  FunctionPrediction pred;
  pred.id = id;
  pred.scores = scores.rows;
  pred.statement_labels.reserve(scores.rows.size());
  for (const auto& row : scores.rows) {
    pred.statement_labels.push_back(row.p > threshold ? 1 : 0);
  }
  pred.predicted_label = 0;
  for (int y : pred.statement_labels) pred.predicted_label = std::max(pred.predicted_label, y);
  pred.ranked_rows = rank_statements(scores);
  return pred;
}

ConfusionStats confusion_and_prf(const std::vector<int>& predicted,
                                 const std::vector<int>& actual) {
  if (predicted.empty()) throw std::invalid_argument("confusion_and_prf: empty input");
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("confusion_and_prf: length mismatch");
  }

  ConfusionStats st;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0, a = actual[i] != 0;
    if (p && a) ++st.tp;
    else if (p && !a) ++st.fp;
    else if (!p && a) ++st.fn;
    else ++st.tn;
  }

  const long total = st.tp + st.fp + st.fn + st.tn;
  st.acc = static_cast<double>(st.tp + st.tn) / static_cast<double>(total);
  if (st.tp + st.fp > 0) {
    st.precision = static_cast<double>(st.tp) / static_cast<double>(st.tp + st.fp);
  } else {
    st.degenerate_precision = true;
  }
  if (st.tp + st.fn > 0) {
    st.recall = static_cast<double>(st.tp) / static_cast<double>(st.tp + st.fn);
  } else {
    st.degenerate_recall = true;
  }
  if (st.precision + st.recall > 0.0) {
    st.f1 = 2.0 * st.precision * st.recall / (st.precision + st.recall);
  } else {
    st.degenerate_f1 = true;
  }
  return st;
}

RankingMetrics ranking_metrics(const std::vector<LocalizationCase>& cases) {
  if (cases.empty()) {
    throw std::invalid_argument("ranking_metrics: no vulnerable functions to rank");
  }

  RankingMetrics rm;
  rm.functions = static_cast<long>(cases.size());
  long top1 = 0, top3 = 0, top5 = 0;
  double frank_sum = 0.0, avg_rank_sum = 0.0;
  for (const auto& c : cases) {
    long first_rank = 0;
    long hit_count = 0;
    long rank_sum = 0;
    for (std::size_t pos = 0; pos < c.ranked_lines.size(); ++pos) {
      if (c.vulnerable_lines.count(c.ranked_lines[pos])) {
        const long rank = static_cast<long>(pos) + 1;
        if (first_rank == 0) first_rank = rank;
        ++hit_count;
        rank_sum += rank;
      }
    }
    if (first_rank == 0) {
      throw std::invalid_argument(
          "ranking_metrics: a case has no vulnerable line in its ranking");
    }
    if (first_rank <= 1) ++top1;
    if (first_rank <= 3) ++top3;
    if (first_rank <= 5) ++top5;
    frank_sum += static_cast<double>(first_rank);
    avg_rank_sum += static_cast<double>(rank_sum) / static_cast<double>(hit_count);
  }

  const double n = static_cast<double>(rm.functions);
  rm.top1 = static_cast<double>(top1) / n;
  rm.top3 = static_cast<double>(top3) / n;
  rm.top5 = static_cast<double>(top5) / n;
  rm.mfr = frank_sum / n;
  rm.mar = avg_rank_sum / n;
  rm.ifa = rm.mfr - 1.0;
  return rm;
}

StatementScores score_function(const ModelParams& model, const EncoderConfig& config,
                               const TokenizedFunction& tokens) {
  NoGradGuard guard;
  Tensor hidden = encode(tokens, model.encoder, config, RunMode::eval);
  return classify_statements(hidden, tokens, model.head);
}

EvalReport evaluate(const ModelParams& model, const EncoderConfig& config,
                    const std::vector<const FunctionSample*>& test_samples,
                    const std::vector<const TokenizedFunction*>& test_tokens, double threshold,
                    int threads) {
  if (test_samples.size() != test_tokens.size()) {
    throw std::invalid_argument("evaluate: samples and tokens misaligned");
  }
  if (test_samples.empty()) throw std::invalid_argument("evaluate: empty test split");

  const std::size_t n = test_samples.size();
  std::vector<StatementScores> scores(n);
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = score_function(model, config, *test_tokens[i]);
    }
  } else {
    // read-only forward passes; results land in their own slots, so the
    // reduction below is identical for any thread count
    const std::size_t worker_count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
      workers.emplace_back([&, w]() {
        for (std::size_t i = w; i < n; i += worker_count) {
          scores[i] = score_function(model, config, *test_tokens[i]);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  EvalReport report;
  report.threshold = threshold;
  report.test_functions = static_cast<long>(n);

  std::vector<int> fn_pred, fn_actual;
  std::vector<int> st_pred, st_actual;
  std::vector<LocalizationCase> cases;
  for (std::size_t i = 0; i < n; ++i) {
    const FunctionSample& sample = *test_samples[i];
    const FunctionPrediction pred = predict_function(scores[i], threshold, sample.id);
    fn_pred.push_back(pred.predicted_label);
    fn_actual.push_back(sample.label);
    report.scored_statements += static_cast<long>(pred.scores.size());

    // statement truth is known for label-0 functions and for labeled lines
    const bool truth_known = sample.label == 0 || sample.vulnerable_lines.has_value();
    if (truth_known) {
      for (std::size_t r = 0; r < pred.scores.size(); ++r) {
        const int line = pred.scores[r].line;
        const bool vulnerable =
            sample.vulnerable_lines.has_value() && sample.vulnerable_lines->count(line) > 0;
        st_pred.push_back(pred.statement_labels[r]);
        st_actual.push_back(vulnerable ? 1 : 0);
      }
    }

    if (sample.label == 1 && sample.vulnerable_lines.has_value()) {
      LocalizationCase c;
      for (int row : pred.ranked_rows) {
        c.ranked_lines.push_back(pred.scores[static_cast<std::size_t>(row)].line);
      }
      bool any_surviving = false;
      for (int line : *sample.vulnerable_lines) {
        if (std::find(c.ranked_lines.begin(), c.ranked_lines.end(), line) !=
            c.ranked_lines.end()) {
          c.vulnerable_lines.insert(line);
          any_surviving = true;
        }
      }
      if (any_surviving) cases.push_back(std::move(c));
    }
  }

  report.function_level = confusion_and_prf(fn_pred, fn_actual);

  // absolute statement metrics only make sense when some line-level truth exists
  bool any_line_truth = false;
  for (const auto* s : test_samples) {
    if (s->label == 1 && s->vulnerable_lines.has_value()) any_line_truth = true;
  }
  if (any_line_truth && !st_pred.empty()) {
    report.statement_absolute_available = true;
    report.statement_level = confusion_and_prf(st_pred, st_actual);
  }
  if (!cases.empty()) {
    report.ranking_available = true;
    report.ranking = ranking_metrics(cases);
  }
  return report;
}

namespace {

void prf_rows(std::ostream& out, const ConfusionStats& st) {
  out << std::fixed << std::setprecision(4);
  out << "  Acc " << st.acc << "  P " << st.precision << "  R " << st.recall << "  F1 " << st.f1;
  if (st.degenerate_precision || st.degenerate_recall || st.degenerate_f1) {
    out << "  (degenerate denominators reported as 0)";
  }
  out << "\n  TP " << st.tp << "  FP " << st.fp << "  FN " << st.fn << "  TN " << st.tn << "\n";
}

nlohmann::json prf_json(const ConfusionStats& st) {
  return {{"acc", st.acc},
          {"precision", st.precision},
          {"recall", st.recall},
          {"f1", st.f1},
          {"tp", st.tp},
          {"fp", st.fp},
          {"fn", st.fn},
          {"tn", st.tn},
          {"degenerate_precision", st.degenerate_precision},
          {"degenerate_recall", st.degenerate_recall},
          {"degenerate_f1", st.degenerate_f1}};
}

}  // namespace

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << "== evaluation (" << test_functions << " functions, threshold "
      << std::setprecision(3) << threshold << ") ==\n";
  out << "function-level:\n";
  prf_rows(out, function_level);
  out << "statement-level (absolute):\n";
  if (statement_absolute_available) {
    prf_rows(out, statement_level);
  } else {
    out << "  unavailable: dataset has no line-level ground truth\n";
  }
  out << "statement-level (ranking over " << (ranking_available ? ranking.functions : 0)
      << " vulnerable functions):\n";
  if (ranking_available) {
    out << std::fixed << std::setprecision(4);
    out << "  Top-1 " << ranking.top1 << "  Top-3 " << ranking.top3 << "  Top-5 " << ranking.top5
        << "\n  MFR " << ranking.mfr << "  MAR " << ranking.mar << "  IFA " << ranking.ifa << "\n";
  } else {
    out << "  unavailable: no vulnerable function with surviving labeled lines\n";
  }
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["test_functions"] = test_functions;
  j["scored_statements"] = scored_statements;
  j["threshold"] = threshold;
  j["function_level"] = prf_json(function_level);
  if (statement_absolute_available) {
    j["statement_level"] = prf_json(statement_level);
  } else {
    j["statement_level"] = nullptr;
  }
  if (ranking_available) {
    j["ranking"] = {{"top1", ranking.top1}, {"top3", ranking.top3}, {"top5", ranking.top5},
                    {"mfr", ranking.mfr},   {"mar", ranking.mar},   {"ifa", ranking.ifa},
                    {"functions", ranking.functions}};
  } else {
    j["ranking"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace vulnloc
