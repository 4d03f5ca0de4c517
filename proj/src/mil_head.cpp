#include "vulnloc/mil_head.hpp"

#include <cmath>
#include <stdexcept>

namespace vulnloc {

namespace {
constexpr double kInitStd = 0.02;

std::vector<int> members_of(const TokenizedFunction& tokens, int statement) {
  if (statement < 0 || statement >= tokens.statement_count) {
    throw std::invalid_argument("pooling: statement index out of range");
  }
  std::vector<int> members;
  for (std::size_t i = 0; i < tokens.statement_of_token.size(); ++i) {
    if (tokens.statement_of_token[i] == statement) members.push_back(static_cast<int>(i));
  }
  if (members.empty()) {
    throw std::invalid_argument("pooling: statement " + std::to_string(statement) +
                                " has no surviving tokens");
  }
  return members;
}

}  // namespace

HeadParams HeadParams::init(int hidden, bool learnable, Rng& rng) {
  HeadParams head;
  head.w_max = Tensor::randn({hidden, 2}, rng, kInitStd, true);
  head.b_max = Tensor::zeros({1, 2}, true);
  head.w_mean = Tensor::randn({hidden, 2}, rng, kInitStd, true);
  head.b_mean = Tensor::zeros({1, 2}, true);
  head.learnable_fusion = learnable;
  if (learnable) head.fusion_logits = Tensor::zeros({1, 2}, true);
  return head;
}

std::pair<double, double> HeadParams::fusion_weights() const {
  if (!learnable_fusion) return {fusion_max, fusion_mean};
  const double a = fusion_logits[0], b = fusion_logits[1];
  const double mx = std::max(a, b);
  const double ea = std::exp(a - mx), eb = std::exp(b - mx);
  return {ea / (ea + eb), eb / (ea + eb)};
}

void HeadParams::set_fixed_fusion(double wmax, double wmean) {
  if (wmax < 0.0 || wmean < 0.0 || std::abs(wmax + wmean - 1.0) > 1e-9) {
    throw std::invalid_argument("fusion weights must be non-negative and sum to 1");
  }
  learnable_fusion = false;
  fusion_max = wmax;
  fusion_mean = wmean;
}

std::vector<std::pair<std::string, Tensor>> HeadParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("head.w_max", w_max);
  out.emplace_back("head.b_max", b_max);
  out.emplace_back("head.w_mean", w_mean);
  out.emplace_back("head.b_mean", b_mean);
  if (learnable_fusion) out.emplace_back("head.fusion_logits", fusion_logits);
  return out;
}

std::vector<Tensor> HeadParams::all() const {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named()) out.push_back(tensor);
  return out;
}

int StatementScores::row_for_statement(int statement) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].statement == statement) return static_cast<int>(r);
  }
  return -1;
}

Tensor max_pool_statement(const Tensor& hidden, const TokenizedFunction& tokens, int statement) {
  return pool_rows_max(hidden, {members_of(tokens, statement)});
}

Tensor mean_pool_statement(const Tensor& hidden, const TokenizedFunction& tokens, int statement) {
  return pool_rows_mean(hidden, {members_of(tokens, statement)});
}

StatementScores classify_statements(const Tensor& hidden, const TokenizedFunction& tokens,
                                    const HeadParams& head) {
  const auto groups = tokens.statement_groups();
  const auto statements = tokens.surviving_statement_indices();
  if (groups.empty()) {
    throw std::invalid_argument("classify_statements: function has no surviving statements");
  }

  Tensor p_max = slice_col(
      softmax(add_rowvec(matmul(pool_rows_max(hidden, groups), head.w_max), head.b_max), 1), 1);
  Tensor p_mean = slice_col(
      softmax(add_rowvec(matmul(pool_rows_mean(hidden, groups), head.w_mean), head.b_mean), 1), 1);

  Tensor fused;
  if (head.learnable_fusion) {
    Tensor weights = softmax(head.fusion_logits, 1);
    fused = add(scalar_mul(slice_col(weights, 0), p_max),
                scalar_mul(slice_col(weights, 1), p_mean));
  } else {
    fused = add(scale(p_max, head.fusion_max), scale(p_mean, head.fusion_mean));
  }

  StatementScores scores;
  scores.fused = fused;
  scores.rows.reserve(groups.size());
  for (std::size_t r = 0; r < groups.size(); ++r) {
    StatementScores::Row row;
    row.statement = statements[r];
    row.line = tokens.statement_lines[static_cast<std::size_t>(statements[r])];
    row.p_max = p_max[r];
    row.p_mean = p_mean[r];
    row.p = fused[r];
    scores.rows.push_back(row);
  }
  return scores;
}

}  // namespace vulnloc
