#include "vulnloc/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vulnloc/metrics.hpp"
#include "vulnloc/text.hpp"

#include <json.hpp>

namespace vulnloc {

namespace {

using nlohmann::json;

template <class T>
void read_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::vector<const FunctionSample*> pick_split(const Dataset& dataset, const std::string& name) {
  if (name == "all") {
    std::vector<const FunctionSample*> out;
    for (const auto& s : dataset.samples) out.push_back(&s);
    return out;
  }
  auto out = dataset.split(name);
  if (out.empty()) {
    throw std::runtime_error("dataset has no samples in split '" + name + "'");
  }
  return out;
}

struct PreparedSplit {
  std::vector<const FunctionSample*> samples;
  std::vector<TokenizedFunction> tokens_storage;
  std::vector<const TokenizedFunction*> tokens;
};

PreparedSplit prepare_split(const Dataset& dataset, const std::string& name,
                            const BpeVocab& vocab, int max_len) {
  PreparedSplit prepared;
  prepared.samples = pick_split(dataset, name);
  prepared.tokens_storage.reserve(prepared.samples.size());
  for (const auto* s : prepared.samples) {
    prepared.tokens_storage.push_back(tokenize_function(*s, vocab, max_len));
  }
  for (const auto& t : prepared.tokens_storage) prepared.tokens.push_back(&t);
  return prepared;
}

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw std::runtime_error(std::string("missing required path: ") + flag);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void RunConfig::load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }

  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    read_if(e, "layers", encoder.layers);
    read_if(e, "heads", encoder.heads);
    read_if(e, "hidden", encoder.hidden);
    read_if(e, "ffn_dim", encoder.ffn_dim);
    read_if(e, "max_len", encoder.max_len);
    read_if(e, "dropout_rate", encoder.dropout_rate);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    read_if(t, "k", train.k);
    read_if(t, "batch_size", train.batch_size);
    read_if(t, "lr", train.lr);
    read_if(t, "max_epochs", train.max_epochs);
    read_if(t, "patience", train.patience);
    read_if(t, "seed", train.seed);
    read_if(t, "weight_decay", train.weight_decay);
    read_if(t, "learnable_fusion", train.learnable_fusion);
    read_if(t, "keep_final", train.keep_final);
  }
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    read_if(s, "train_count", synthetic.train_count);
    read_if(s, "valid_count", synthetic.valid_count);
    read_if(s, "test_count", synthetic.test_count);
    read_if(s, "vulnerable_fraction", synthetic.vulnerable_fraction);
    read_if(s, "min_statements", synthetic.min_statements);
    read_if(s, "max_statements", synthetic.max_statements);
    read_if(s, "min_vulnerable_lines", synthetic.min_vulnerable_lines);
    read_if(s, "max_vulnerable_lines", synthetic.max_vulnerable_lines);
  }
  read_if(j, "vocab_size", vocab_size);
  read_if(j, "threshold", threshold);
  read_if(j, "threads", threads);
}

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  synthetic.seed = seed;
}

void cmd_gen_corpus(const RunConfig& config, std::ostream& out) {
  require_path(config.out_path, "--out");
  const Dataset dataset = generate_synthetic(config.synthetic);
  save_dataset(dataset, config.out_path);
  out << "wrote " << dataset.samples.size() << " functions to " << config.out_path << "\n";
  out << dataset_stats(dataset).to_table();
}

void cmd_train_vocab(const RunConfig& config, std::ostream& out) {
  require_path(config.dataset_path, "--dataset");
  require_path(config.out_path, "--out");
  const Dataset dataset = load_dataset(config.dataset_path);

  std::vector<std::string> corpus;
  for (const auto* s : pick_split(dataset, "train")) {
    corpus.push_back(strip_comments(s->source));
  }
  std::string warning;
  const BpeVocab vocab = train_bpe(corpus, config.vocab_size, &warning);
  vocab.save(config.out_path);
  out << "trained " << vocab.merges().size() << " merges (" << vocab.size() << " tokens) -> "
      << config.out_path << "\n";
  if (!warning.empty()) out << "warning: " << warning << "\n";
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  require_path(config.dataset_path, "--dataset");
  require_path(config.vocab_path, "--vocab");
  require_path(config.checkpoint_path, "--checkpoint");

  Dataset dataset = load_dataset(config.dataset_path);
  const BpeVocab vocab = BpeVocab::load(config.vocab_path);

  EncoderConfig encoder_config = config.encoder;
  encoder_config.vocab_size = vocab.size();
  encoder_config.validate();

  const int removed = filter_truncation_conflicts(dataset, vocab, encoder_config.max_len);
  out << "truncation-conflict filter removed " << removed << " sample(s)\n";

  const PreparedSplit train_split = prepare_split(dataset, "train", vocab, encoder_config.max_len);
  PreparedSplit valid_split;
  if (!dataset.split("valid").empty()) {
    valid_split = prepare_split(dataset, "valid", vocab, encoder_config.max_len);
  }

  Rng master(config.train.seed);
  Rng init_rng = master.fork(0);
  ModelParams model = ModelParams::init(encoder_config, config.train.learnable_fusion, init_rng);

  std::ofstream log_file;
  std::ostream* log = &out;
  if (!config.out_path.empty()) {
    log_file = open_out(config.out_path);
    log = &log_file;
  }

  const TrainSummary summary =
      train(train_split.samples, train_split.tokens, valid_split.samples, valid_split.tokens,
            model, encoder_config, config.train, log);

  save_model(model, encoder_config, config.checkpoint_path);
  out << "trained " << summary.epochs_run << " epoch(s); best val F1 " << std::fixed
      << std::setprecision(4) << summary.best_val_f1 << " at epoch " << summary.best_epoch
      << "; checkpoint -> " << config.checkpoint_path << "\n";
}

void cmd_predict(const RunConfig& config, std::ostream& out) {
  require_path(config.dataset_path, "--dataset");
  require_path(config.vocab_path, "--vocab");
  require_path(config.checkpoint_path, "--checkpoint");
  require_path(config.out_path, "--out");

  const auto [model, encoder_config] = load_model(config.checkpoint_path);
  const BpeVocab vocab = BpeVocab::load(config.vocab_path);
  const Dataset dataset = load_dataset(config.dataset_path);
  const PreparedSplit split = prepare_split(dataset, config.split, vocab, encoder_config.max_len);

  std::ofstream dump = open_out(config.out_path);
  long statements = 0;
  for (std::size_t i = 0; i < split.samples.size(); ++i) {
    const StatementScores scores = score_function(model, encoder_config, *split.tokens[i]);
    for (const auto& row : scores.rows) {
      json record = {{"id", split.samples[i]->id},
                     {"line", row.line},
                     {"p", row.p},
                     {"p_max", row.p_max},
                     {"p_mean", row.p_mean}};
      dump << record.dump() << '\n';
      ++statements;
    }
  }
  out << "scored " << statements << " statements from " << split.samples.size()
      << " function(s) -> " << config.out_path << "\n";
}

void cmd_evaluate(const RunConfig& config, std::ostream& out) {
  require_path(config.dataset_path, "--dataset");
  require_path(config.vocab_path, "--vocab");
  require_path(config.checkpoint_path, "--checkpoint");

  const auto [model, encoder_config] = load_model(config.checkpoint_path);
  const BpeVocab vocab = BpeVocab::load(config.vocab_path);
  const Dataset dataset = load_dataset(config.dataset_path);
  const PreparedSplit split = prepare_split(dataset, config.split, vocab, encoder_config.max_len);

  const EvalReport report = evaluate(model, encoder_config, split.samples, split.tokens,
                                     config.threshold, config.threads);
  out << report.to_table();
  if (!config.out_path.empty()) {
    std::ofstream json_out = open_out(config.out_path);
    json_out << report.to_json() << '\n';
  }
}

void cmd_report(const RunConfig& config, std::ostream& out) {
  require_path(config.dataset_path, "--dataset");
  require_path(config.vocab_path, "--vocab");
  require_path(config.checkpoint_path, "--checkpoint");

  const auto [model, encoder_config] = load_model(config.checkpoint_path);
  const BpeVocab vocab = BpeVocab::load(config.vocab_path);
  const Dataset dataset = load_dataset(config.dataset_path);
  const PreparedSplit split = prepare_split(dataset, config.split, vocab, encoder_config.max_len);

  std::ofstream file_out;
  std::ostream* dest = &out;
  if (!config.out_path.empty()) {
    file_out = open_out(config.out_path);
    dest = &file_out;
  }

  for (std::size_t i = 0; i < split.samples.size(); ++i) {
    const FunctionSample& sample = *split.samples[i];
    const StatementScores scores = score_function(model, encoder_config, *split.tokens[i]);
    const FunctionPrediction pred = predict_function(scores, config.threshold, sample.id);

    std::set<int> top_lines;
    for (std::size_t r = 0; r < pred.ranked_rows.size() &&
                            r < static_cast<std::size_t>(config.train.k);
         ++r) {
      top_lines.insert(pred.scores[static_cast<std::size_t>(pred.ranked_rows[r])].line);
    }
    std::map<int, double> line_scores;
    for (const auto& row : scores.rows) line_scores[row.line] = row.p;

    *dest << "== " << sample.id << " label=" << sample.label
          << " predicted=" << pred.predicted_label << " ==\n";
    const auto lines = split_lines(strip_comments(sample.source));
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const int line_no = static_cast<int>(l);
      const auto it = line_scores.find(line_no);
      if (it != line_scores.end()) {
        *dest << (top_lines.count(line_no) ? '*' : ' ') << ' ' << std::fixed
              << std::setprecision(4) << it->second << ' ';
      } else {
        *dest << "         ";
      }
      *dest << lines[l] << '\n';
    }
    *dest << '\n';
  }
  if (!config.out_path.empty()) {
    out << "wrote annotated report for " << split.samples.size() << " function(s) -> "
        << config.out_path << "\n";
  }
}

}  // namespace vulnloc
