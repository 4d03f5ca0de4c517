#include "vulnloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "vulnloc/metrics.hpp"

#include <json.hpp>

namespace vulnloc {

void TrainConfig::validate() const {
  if (k < 1) throw std::invalid_argument("train config: k must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
  if (lr < 0.0) throw std::invalid_argument("train config: lr must be >= 0");
}

PseudoLabelAssignment select_topk_pseudo_labels(const StatementScores& scores, int function_label,
                                                int k) {
  if (scores.m_eff() < 1) {
    throw std::invalid_argument("select_topk_pseudo_labels: no surviving statements");
  }
  if (k < 1) throw std::invalid_argument("select_topk_pseudo_labels: k must be >= 1");

  std::vector<int> order(scores.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ra = scores.rows[static_cast<std::size_t>(a)];
    const auto& rb = scores.rows[static_cast<std::size_t>(b)];
    if (ra.p != rb.p) return ra.p > rb.p;
    return ra.statement < rb.statement;
  });

  PseudoLabelAssignment assignment;
  assignment.label = function_label;
  const int take = std::min(k, scores.m_eff());
  assignment.selected_statements.reserve(static_cast<std::size_t>(take));
  for (int i = 0; i < take; ++i) {
    assignment.selected_statements.push_back(
        scores.rows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].statement);
  }
  return assignment;
}

Tensor mil_loss(
    const std::vector<std::pair<const StatementScores*, const PseudoLabelAssignment*>>& batch) {
  if (batch.empty()) throw std::invalid_argument("mil_loss: empty batch");

  Tensor total;
  for (const auto& [scores, assignment] : batch) {
    std::vector<int> rows;
    rows.reserve(assignment->selected_statements.size());
    for (int statement : assignment->selected_statements) {
      const int row = scores->row_for_statement(statement);
      if (row < 0) {
        throw std::invalid_argument("mil_loss: selected statement has no score row");
      }
      rows.push_back(row);
    }
    Tensor per_function = cross_entropy(gather_rows(scores->fused, rows), assignment->label);
    total = total.defined() ? add(total, per_function) : per_function;
  }
  return scale(total, 1.0 / static_cast<double>(batch.size()));
}

TrainSummary train(const std::vector<const FunctionSample*>& train_samples,
                   const std::vector<const TokenizedFunction*>& train_tokens,
                   const std::vector<const FunctionSample*>& valid_samples,
                   const std::vector<const TokenizedFunction*>& valid_tokens, ModelParams& model,
                   const EncoderConfig& encoder_config, const TrainConfig& config,
                   std::ostream* log) {
  config.validate();
  encoder_config.validate();
  if (train_samples.empty()) throw std::invalid_argument("train: empty train split");
  if (train_samples.size() != train_tokens.size() ||
      valid_samples.size() != valid_tokens.size()) {
    throw std::invalid_argument("train: samples and tokens misaligned");
  }

  Rng rng(config.seed);
  Rng shuffle_rng = rng.fork(1);
  Rng dropout_rng = rng.fork(2);

  AdamWConfig opt_config;
  opt_config.lr = config.lr;
  opt_config.beta1 = config.beta1;
  opt_config.beta2 = config.beta2;
  opt_config.eps = config.adam_eps;
  opt_config.weight_decay = config.weight_decay;
  AdamW optimizer(model.all(), opt_config);

  auto validation_metrics = [&]() -> std::pair<double, double> {
    if (valid_samples.empty()) return {0.0, 0.0};
    std::vector<int> pred, actual;
    pred.reserve(valid_samples.size());
    for (std::size_t i = 0; i < valid_samples.size(); ++i) {
      const StatementScores scores = score_function(model, encoder_config, *valid_tokens[i]);
      pred.push_back(predict_function(scores, config.threshold).predicted_label);
      actual.push_back(valid_samples[i]->label);
    }
    const ConfusionStats st = confusion_and_prf(pred, actual);
    return {st.f1, st.acc};
  };

  TrainSummary summary;
  ModelParams best = model.clone();
  double best_f1 = -1.0;
  int best_epoch = 0;
  int epochs_without_improvement = 0;

  std::vector<std::size_t> order(train_samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    long loss_functions = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));

      std::vector<StatementScores> scores;
      std::vector<PseudoLabelAssignment> assignments;
      scores.reserve(end - start);
      assignments.reserve(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        Tensor hidden = encode(*train_tokens[idx], model.encoder, encoder_config, RunMode::train,
                               &dropout_rng);
        scores.push_back(classify_statements(hidden, *train_tokens[idx], model.head));
        // selection is re-derived from this same forward pass and is not
        // differentiated through
        assignments.push_back(
            select_topk_pseudo_labels(scores.back(), train_samples[idx]->label, config.k));
      }

      std::vector<std::pair<const StatementScores*, const PseudoLabelAssignment*>> batch;
      batch.reserve(scores.size());
      for (std::size_t b = 0; b < scores.size(); ++b) {
        batch.emplace_back(&scores[b], &assignments[b]);
      }

      Tensor loss = mil_loss(batch);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(start / config.batch_size));
      }
      loss_sum += loss_value * static_cast<double>(end - start);
      loss_functions += static_cast<long>(end - start);

      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
    }

    const auto [val_f1, val_acc] = validation_metrics();
    const bool improved = val_f1 > best_f1;
    if (improved) {
      best_f1 = val_f1;
      best_epoch = epoch;
      best = model.clone();
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(loss_functions);
    entry.val_f1 = val_f1;
    entry.val_acc = val_acc;
    entry.best_so_far = improved;
    summary.history.push_back(entry);
    summary.epochs_run = epoch;
    if (log) {
      nlohmann::json line = {{"epoch", entry.epoch},
                             {"train_loss", entry.train_loss},
                             {"val_f1", entry.val_f1},
                             {"val_acc", entry.val_acc},
                             {"best_so_far", entry.best_so_far}};
      *log << line.dump() << '\n';
    }

    if (epochs_without_improvement >= config.patience) break;
  }

  summary.best_epoch = best_epoch;
  summary.best_val_f1 = best_f1;

  if (!config.keep_final) {
    // hand the best-validation weights back to the caller
    const auto best_named = best.named();
    auto model_named = model.named();
    for (std::size_t i = 0; i < model_named.size(); ++i) {
      model_named[i].second.data() = best_named[i].second.data();
    }
  }
  return summary;
}

}  // namespace vulnloc
