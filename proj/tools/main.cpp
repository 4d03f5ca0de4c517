#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include "vulnloc/pipeline.hpp"

#include <CLI11.hpp>

namespace {

struct FlagState {
  std::string config_path;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, vulnloc::RunConfig& config, FlagState& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (flags override it)");
  cmd->add_option("--seed", flags.seed, "seed for all randomness")
      ->each([&flags](const std::string&) { flags.has_seed = true; });
  cmd->add_option("--dataset", config.dataset_path, "dataset JSONL path");
  cmd->add_option("--vocab", config.vocab_path, "BPE merges file");
  cmd->add_option("--checkpoint", config.checkpoint_path, "model checkpoint path");
  cmd->add_option("--out", config.out_path, "output path");
  cmd->add_option("--split", config.split, "dataset split (train/valid/test/all)");
  cmd->add_option("--k", config.train.k, "top-k statements");
  cmd->add_option("--max-len", config.encoder.max_len, "token window length");
  cmd->add_option("--threshold", config.threshold, "decision threshold");
  cmd->add_option("--threads", config.threads, "scoring threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised function-level vulnerability detection and "
               "statement-level localization"};
  app.require_subcommand(1);

  vulnloc::RunConfig config;
  if (const char* env_threads = std::getenv("VULNLOC_THREADS")) {
    config.threads = std::max(1, std::atoi(env_threads));
  }
  FlagState flags;

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic labeled corpus");
  add_common(gen, config, flags);
  gen->add_option("--train-count", config.synthetic.train_count, "train split size");
  gen->add_option("--valid-count", config.synthetic.valid_count, "valid split size");
  gen->add_option("--test-count", config.synthetic.test_count, "test split size");
  gen->add_option("--vulnerable-fraction", config.synthetic.vulnerable_fraction,
                  "fraction of vulnerable functions");
  gen->add_option("--min-statements", config.synthetic.min_statements, "min statements");
  gen->add_option("--max-statements", config.synthetic.max_statements, "max statements");
  gen->add_option("--min-vulnerable-lines", config.synthetic.min_vulnerable_lines,
                  "min planted lines per vulnerable function");
  gen->add_option("--max-vulnerable-lines", config.synthetic.max_vulnerable_lines,
                  "max planted lines per vulnerable function");

  auto* vocab_cmd = app.add_subcommand("train-vocab", "learn BPE merges from the train split");
  add_common(vocab_cmd, config, flags);
  vocab_cmd->add_option("--vocab-size", config.vocab_size, "target vocabulary size");

  auto* train_cmd = app.add_subcommand("train", "train the detector");
  add_common(train_cmd, config, flags);
  train_cmd->add_option("--lr", config.train.lr, "learning rate");
  train_cmd->add_option("--batch-size", config.train.batch_size, "batch size");
  train_cmd->add_option("--max-epochs", config.train.max_epochs, "epoch cap");
  train_cmd->add_option("--patience", config.train.patience, "early-stopping patience");
  train_cmd->add_option("--layers", config.encoder.layers, "encoder layers");
  train_cmd->add_option("--heads", config.encoder.heads, "attention heads");
  train_cmd->add_option("--hidden", config.encoder.hidden, "hidden size");
  train_cmd->add_option("--ffn-dim", config.encoder.ffn_dim, "feed-forward width");
  train_cmd->add_option("--dropout", config.encoder.dropout_rate, "dropout rate");
  train_cmd->add_flag("--learnable-fusion", config.train.learnable_fusion,
                      "learn the channel fusion weights");
  train_cmd->add_flag("--keep-final", config.train.keep_final,
                      "keep the final-epoch model instead of the best checkpoint");

  auto* predict_cmd = app.add_subcommand("predict", "dump per-statement scores");
  add_common(predict_cmd, config, flags);

  auto* eval_cmd = app.add_subcommand("evaluate", "compute the metric suite");
  add_common(eval_cmd, config, flags);

  auto* report_cmd = app.add_subcommand("report", "render annotated sources with top-k marks");
  add_common(report_cmd, config, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    // config file fills fields, then a clean re-parse lets explicit flags win
    if (!flags.config_path.empty()) {
      config.load_json_file(flags.config_path);
      app.clear();
      CLI11_PARSE(app, argc, argv);
    }
    if (flags.has_seed) config.set_seed(flags.seed);

    if (gen->parsed()) vulnloc::cmd_gen_corpus(config, std::cout);
    if (vocab_cmd->parsed()) vulnloc::cmd_train_vocab(config, std::cout);
    if (train_cmd->parsed()) vulnloc::cmd_train(config, std::cout);
    if (predict_cmd->parsed()) vulnloc::cmd_predict(config, std::cout);
    if (eval_cmd->parsed()) vulnloc::cmd_evaluate(config, std::cout);
    if (report_cmd->parsed()) vulnloc::cmd_report(config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
