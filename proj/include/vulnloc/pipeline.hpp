#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "vulnloc/dataset.hpp"
#include "vulnloc/encoder.hpp"
#include "vulnloc/trainer.hpp"

namespace vulnloc {

// Everything a command needs: encoder and trainer settings, the synthetic
// corpus spec, and the file paths wired in from flags. A JSON config file
// fills fields first; explicit flags override it.
struct RunConfig {
  EncoderConfig encoder;
  TrainConfig train;
  SyntheticSpec synthetic;
  int vocab_size = 4096;
  double threshold = 0.5;
  int threads = 1;

  std::string dataset_path;
  std::string vocab_path;
  std::string checkpoint_path;
  std::string out_path;
  std::string split = "test";

  void load_json_file(const std::string& path);
  void set_seed(std::uint64_t seed);  // single source for all randomness
};

// Subcommand bodies. Each writes its artifacts, reports progress on `out`,
// and throws on any invalid input; the CLI maps exceptions to exit code 1.
void cmd_gen_corpus(const RunConfig& config, std::ostream& out);
void cmd_train_vocab(const RunConfig& config, std::ostream& out);
void cmd_train(const RunConfig& config, std::ostream& out);
void cmd_predict(const RunConfig& config, std::ostream& out);
void cmd_evaluate(const RunConfig& config, std::ostream& out);
void cmd_report(const RunConfig& config, std::ostream& out);

}  // namespace vulnloc
