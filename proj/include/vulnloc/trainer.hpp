#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "vulnloc/model.hpp"
#include "vulnloc/optim.hpp"

namespace vulnloc {

struct TrainConfig {
  int k = 3;            // pseudo-labeled statements per function
  int batch_size = 16;
  double lr = 1e-3;
  int max_epochs = 50;
  int patience = 10;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double threshold = 0.5;  // decision threshold for validation metrics
  bool learnable_fusion = false;
  // return the final-epoch parameters instead of the best-validation
  // checkpoint (fixed-schedule comparisons)
  bool keep_final = false;

  void validate() const;
};

// Top-k statements by fused score, each assigned the function label — for
// vulnerable and non-vulnerable functions alike.
struct PseudoLabelAssignment {
  std::vector<int> selected_statements;  // statement indices, best score first
  int label = 0;
};

PseudoLabelAssignment select_topk_pseudo_labels(const StatementScores& scores, int function_label,
                                                int k);

// Batch MIL objective: each function's selected statements contribute their
// mean cross-entropy against the function label, averaged over the batch.
// Equals the plain 1/(N*k) double sum whenever every function has >= k
// surviving statements.
Tensor mil_loss(const std::vector<std::pair<const StatementScores*, const PseudoLabelAssignment*>>&
                    batch);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double val_acc = 0.0;
  bool best_so_far = false;
};

struct TrainSummary {
  std::vector<EpochLog> history;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  int epochs_run = 0;
};

// Seeded training loop with per-epoch shuffling, same-pass top-k pseudo-label
// selection, AdamW updates, and early stopping on validation function-level
// F1. On return `model` holds the best-validation parameters. When `log` is
// given, one structured JSON line is written per epoch.
TrainSummary train(const std::vector<const FunctionSample*>& train_samples,
                   const std::vector<const TokenizedFunction*>& train_tokens,
                   const std::vector<const FunctionSample*>& valid_samples,
                   const std::vector<const TokenizedFunction*>& valid_tokens, ModelParams& model,
                   const EncoderConfig& encoder_config, const TrainConfig& config,
                   std::ostream* log = nullptr);

}  // namespace vulnloc
