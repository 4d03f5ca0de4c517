#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vulnloc/tensor.hpp"

namespace vulnloc {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

bool track_grad(const Tensor& t) {
  return NoGradGuard::grad_enabled() && t.requires_grad();
}

Tensor make_result(Shape shape, std::vector<double> data) {
  return Tensor::from_data(std::move(shape), std::move(data), false);
}

// Wires the result into the graph: marks it as requiring grad, records the
// parents, and installs the pull-back closure.
void attach(Tensor& out, std::vector<Tensor> parents,
            std::function<void(TensorNode&)> backward_fn) {
  bool any = false;
  for (const auto& p : parents) any = any || track_grad(p);
  if (!any) return;
  auto node = out.node();
  node->requires_grad = true;
  node->ensure_grad();
  for (auto& p : parents) {
    node->parents.push_back(p.node());
    if (p.requires_grad()) p.node()->ensure_grad();
  }
  node->backward_fn = std::move(backward_fn);
}

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a 2-D tensor");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw std::invalid_argument("matmul: inner extents do not match");

  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const auto& av = a.data();
  const auto& bv = b.data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[static_cast<std::size_t>(i) * k + p];
      const std::size_t brow = static_cast<std::size_t>(p) * n;
      const std::size_t crow = static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) out[crow + j] += aip * bv[brow + j];
    }
  }

  Tensor result = make_result({m, n}, std::move(out));
  auto an = a.node(), bn = b.node();
  attach(result, {a, b}, [an, bn, m, k, n](TensorNode& node) {
    const auto& gc = node.grad;
    if (an->requires_grad) {
      // dA[i,p] = sum_j dC[i,j] * B[p,j]
      for (int i = 0; i < m; ++i) {
        const std::size_t crow = static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const std::size_t brow = static_cast<std::size_t>(p) * n;
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += gc[crow + j] * bn->data[brow + j];
          an->grad[static_cast<std::size_t>(i) * k + p] += s;
        }
      }
    }
    if (bn->requires_grad) {
      // dB[p,j] = sum_i A[i,p] * dC[i,j]
      for (int i = 0; i < m; ++i) {
        const std::size_t crow = static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const double aip = an->data[static_cast<std::size_t>(i) * k + p];
          const std::size_t brow = static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) bn->grad[brow + j] += aip * gc[crow + j];
        }
      }
    }
  });
  return result;
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(j) * m + i] = a.at(i, j);

  Tensor result = make_result({n, m}, std::move(out));
  auto an = a.node();
  attach(result, {a}, [an, m, n](TensorNode& node) {
    if (!an->requires_grad) return;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i)
        an->grad[static_cast<std::size_t>(i) * n + j] +=
            node.grad[static_cast<std::size_t>(j) * m + i];
  });
  return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("add: shape mismatch");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];

  Tensor result = make_result(a.shape(), std::move(out));
  auto an = a.node(), bn = b.node();
  attach(result, {a, b}, [an, bn](TensorNode& node) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i];
    if (bn->requires_grad)
      for (std::size_t i = 0; i < node.grad.size(); ++i) bn->grad[i] += node.grad[i];
  });
  return result;
}

Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
  require_2d(a, "add_rowvec");
  require_2d(bias, "add_rowvec");
  const int m = a.rows(), n = a.cols();
  if (bias.rows() != 1 || bias.cols() != n) {
    throw std::invalid_argument("add_rowvec: bias must be [1 x cols]");
  }
  std::vector<double> out(a.numel());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] = a.at(i, j) + bias[static_cast<std::size_t>(j)];

  Tensor result = make_result({m, n}, std::move(out));
  auto an = a.node(), bn = bias.node();
  attach(result, {a, bias}, [an, bn, m, n](TensorNode& node) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i];
    if (bn->requires_grad) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          bn->grad[static_cast<std::size_t>(j)] += node.grad[static_cast<std::size_t>(i) * n + j];
    }
  });
  return result;
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;

  Tensor result = make_result(a.shape(), std::move(out));
  auto an = a.node();
  attach(result, {a}, [an, s](TensorNode& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i] * s;
  });
  return result;
}

Tensor scalar_mul(const Tensor& s, const Tensor& a) {
  if (s.numel() != 1) throw std::invalid_argument("scalar_mul: scalar must have one element");
  const double sv = s[0];
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * sv;

  Tensor result = make_result(a.shape(), std::move(out));
  auto sn = s.node(), an = a.node();
  attach(result, {s, a}, [sn, an, sv](TensorNode& node) {
    if (sn->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < node.grad.size(); ++i) acc += node.grad[i] * an->data[i];
      sn->grad[0] += acc;
    }
    if (an->requires_grad)
      for (std::size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i] * sv;
  });
  return result;
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;

  Tensor result = make_result(a.shape(), std::move(out));
  auto an = a.node();
  attach(result, {a}, [an](TensorNode& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < node.grad.size(); ++i)
      if (an->data[i] > 0.0) an->grad[i] += node.grad[i];
  });
  return result;
}

Tensor softmax(const Tensor& a, int axis) {
  require_2d(a, "softmax");
  if (axis != 0 && axis != 1) throw std::invalid_argument("softmax: axis must be 0 or 1");
  const int m = a.rows(), n = a.cols();
  const int slices = axis == 1 ? m : n;
  const int len = axis == 1 ? n : m;

  auto index = [axis, n](int slice, int i) -> std::size_t {
    return axis == 1 ? static_cast<std::size_t>(slice) * n + i
                     : static_cast<std::size_t>(i) * n + slice;
  };

  std::vector<double> out(a.numel());
  for (int s = 0; s < slices; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < len; ++i) mx = std::max(mx, a[index(s, i)]);
    if (!(mx > -std::numeric_limits<double>::infinity())) {
      throw std::domain_error("softmax: slice is fully masked (all -inf)");
    }
    double denom = 0.0;
    for (int i = 0; i < len; ++i) {
      double e = std::exp(a[index(s, i)] - mx);
      out[index(s, i)] = e;
      denom += e;
    }
    for (int i = 0; i < len; ++i) out[index(s, i)] /= denom;
  }

  Tensor result = make_result({m, n}, std::move(out));
  auto an = a.node();
  attach(result, {a}, [an, slices, len, index](TensorNode& node) {
    if (!an->requires_grad) return;
    // dx_i = y_i * (g_i - sum_j g_j y_j) per slice; node.data holds y
    for (int s = 0; s < slices; ++s) {
      double dot = 0.0;
      for (int i = 0; i < len; ++i) dot += node.grad[index(s, i)] * node.data[index(s, i)];
      for (int i = 0; i < len; ++i) {
        an->grad[index(s, i)] += node.data[index(s, i)] * (node.grad[index(s, i)] - dot);
      }
    }
  });
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  require_2d(x, "layer_norm");
  const int m = x.rows(), n = x.cols();
  if (gamma.ndim() != 2 || gamma.rows() != 1 || gamma.cols() != n ||
      beta.ndim() != 2 || beta.rows() != 1 || beta.cols() != n) {
    throw std::invalid_argument("layer_norm: gamma/beta must be [1 x cols]");
  }

  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * n;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x[row + j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x[row + j] - mean;
      var += d * d;
    }
    var /= n;
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = istd;
    for (int j = 0; j < n; ++j) {
      double h = (x[row + j] - mean) * istd;
      xhat[row + j] = h;
      out[row + j] = gamma[static_cast<std::size_t>(j)] * h + beta[static_cast<std::size_t>(j)];
    }
  }

  Tensor result = make_result({m, n}, std::move(out));
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  auto xhat_ptr = std::make_shared<std::vector<double>>(std::move(xhat));
  auto istd_ptr = std::make_shared<std::vector<double>>(std::move(inv_std));
  attach(result, {x, gamma, beta},
         [xn, gn, bn, xhat_ptr, istd_ptr, m, n](TensorNode& node) {
           const auto& h = *xhat_ptr;
           for (int i = 0; i < m; ++i) {
             const std::size_t row = static_cast<std::size_t>(i) * n;
             // g = dL/dy * gamma; dx = (g - mean(g) - xhat*mean(g*xhat)) * istd
             double g_mean = 0.0, gh_mean = 0.0;
             for (int j = 0; j < n; ++j) {
               double g = node.grad[row + j] * gn->data[static_cast<std::size_t>(j)];
               g_mean += g;
               gh_mean += g * h[row + j];
             }
             g_mean /= n;
             gh_mean /= n;
             const double istd = (*istd_ptr)[static_cast<std::size_t>(i)];
             for (int j = 0; j < n; ++j) {
               double g = node.grad[row + j] * gn->data[static_cast<std::size_t>(j)];
               if (xn->requires_grad)
                 xn->grad[row + j] += (g - g_mean - h[row + j] * gh_mean) * istd;
               if (gn->requires_grad)
                 gn->grad[static_cast<std::size_t>(j)] += node.grad[row + j] * h[row + j];
               if (bn->requires_grad)
                 bn->grad[static_cast<std::size_t>(j)] += node.grad[row + j];
             }
           }
         });
  return result;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  require_2d(table, "embedding_lookup");
  const int vocab = table.rows(), d = table.cols();
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw std::invalid_argument("embedding_lookup: empty id sequence");
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw std::out_of_range("embedding_lookup: id " + std::to_string(id) +
                              " outside vocabulary of size " + std::to_string(vocab));
    }
  }

  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    const std::size_t src = static_cast<std::size_t>(ids[static_cast<std::size_t>(i)]) * d;
    const std::size_t dst = static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) out[dst + j] = table[src + j];
  }

  Tensor result = make_result({n, d}, std::move(out));
  auto tn = table.node();
  auto ids_copy = std::make_shared<std::vector<int>>(ids);
  attach(result, {table}, [tn, ids_copy, d](TensorNode& node) {
    if (!tn->requires_grad) return;
    for (std::size_t i = 0; i < ids_copy->size(); ++i) {
      const std::size_t dst = static_cast<std::size_t>((*ids_copy)[i]) * d;
      const std::size_t src = i * d;
      for (int j = 0; j < d; ++j) tn->grad[dst + j] += node.grad[src + j];
    }
  });
  return result;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int m = parts.front().rows();
  int total = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    if (p.rows() != m) throw std::invalid_argument("concat_cols: row mismatch");
    total += p.cols();
  }

  std::vector<double> out(static_cast<std::size_t>(m) * total);
  int offset = 0;
  for (const auto& p : parts) {
    const int w = p.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j)
        out[static_cast<std::size_t>(i) * total + offset + j] = p.at(i, j);
    offset += w;
  }

  Tensor result = make_result({m, total}, std::move(out));
  std::vector<NodePtr> nodes;
  std::vector<int> widths;
  for (const auto& p : parts) {
    nodes.push_back(p.node());
    widths.push_back(p.cols());
  }
  attach(result, parts, [nodes, widths, m, total](TensorNode& node) {
    int offset2 = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const int w = widths[k];
      if (nodes[k]->requires_grad) {
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < w; ++j)
            nodes[k]->grad[static_cast<std::size_t>(i) * w + j] +=
                node.grad[static_cast<std::size_t>(i) * total + offset2 + j];
      }
      offset2 += w;
    }
  });
  return result;
}

Tensor slice_col(const Tensor& a, int col) {
  require_2d(a, "slice_col");
  const int m = a.rows(), n = a.cols();
  if (col < 0 || col >= n) throw std::invalid_argument("slice_col: column out of range");

  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = a.at(i, col);

  Tensor result = make_result({m, 1}, std::move(out));
  auto an = a.node();
  attach(result, {a}, [an, col, m, n](TensorNode& node) {
    if (!an->requires_grad) return;
    for (int i = 0; i < m; ++i)
      an->grad[static_cast<std::size_t>(i) * n + col] += node.grad[static_cast<std::size_t>(i)];
  });
  return result;
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& rows) {
  require_2d(a, "gather_rows");
  const int m = a.rows(), n = a.cols();
  if (rows.empty()) throw std::invalid_argument("gather_rows: empty row list");
  for (int r : rows) {
    if (r < 0 || r >= m) throw std::out_of_range("gather_rows: row out of range");
  }

  const int k = static_cast<int>(rows.size());
  std::vector<double> out(static_cast<std::size_t>(k) * n);
  for (int i = 0; i < k; ++i) {
    const std::size_t src = static_cast<std::size_t>(rows[static_cast<std::size_t>(i)]) * n;
    const std::size_t dst = static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) out[dst + j] = a[src + j];
  }

  Tensor result = make_result({k, n}, std::move(out));
  auto an = a.node();
  auto rows_copy = std::make_shared<std::vector<int>>(rows);
  attach(result, {a}, [an, rows_copy, n](TensorNode& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < rows_copy->size(); ++i) {
      const std::size_t dst = static_cast<std::size_t>((*rows_copy)[i]) * n;
      const std::size_t src = i * n;
      for (int j = 0; j < n; ++j) an->grad[dst + j] += node.grad[src + j];
    }
  });
  return result;
}

Tensor pool_rows_max(const Tensor& h, const std::vector<std::vector<int>>& groups) {
  require_2d(h, "pool_rows_max");
  const int m = h.rows(), d = h.cols();
  const int g = static_cast<int>(groups.size());
  if (g == 0) throw std::invalid_argument("pool_rows_max: no groups");

  std::vector<double> out(static_cast<std::size_t>(g) * d);
  // winning member row per output coordinate, for the backward routing
  auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(g) * d);
  for (int gi = 0; gi < g; ++gi) {
    const auto& members = groups[static_cast<std::size_t>(gi)];
    if (members.empty()) {
      throw std::invalid_argument("pool_rows_max: group " + std::to_string(gi) + " is empty");
    }
    for (int r : members) {
      if (r < 0 || r >= m) throw std::out_of_range("pool_rows_max: row out of range");
    }
    for (int j = 0; j < d; ++j) {
      int best_row = members.front();
      double best = h.at(best_row, j);
      for (std::size_t t = 1; t < members.size(); ++t) {
        const double v = h.at(members[t], j);
        if (v > best) {  // strict: ties keep the lowest row index
          best = v;
          best_row = members[t];
        }
      }
      out[static_cast<std::size_t>(gi) * d + j] = best;
      (*argmax)[static_cast<std::size_t>(gi) * d + j] = best_row;
    }
  }

  Tensor result = make_result({g, d}, std::move(out));
  auto hn = h.node();
  attach(result, {h}, [hn, argmax, g, d](TensorNode& node) {
    if (!hn->requires_grad) return;
    for (int gi = 0; gi < g; ++gi) {
      for (int j = 0; j < d; ++j) {
        const std::size_t idx = static_cast<std::size_t>(gi) * d + j;
        hn->grad[static_cast<std::size_t>((*argmax)[idx]) * d + j] += node.grad[idx];
      }
    }
  });
  return result;
}

Tensor pool_rows_mean(const Tensor& h, const std::vector<std::vector<int>>& groups) {
  require_2d(h, "pool_rows_mean");
  const int m = h.rows(), d = h.cols();
  const int g = static_cast<int>(groups.size());
  if (g == 0) throw std::invalid_argument("pool_rows_mean: no groups");

  std::vector<double> out(static_cast<std::size_t>(g) * d, 0.0);
  for (int gi = 0; gi < g; ++gi) {
    const auto& members = groups[static_cast<std::size_t>(gi)];
    if (members.empty()) {
      throw std::invalid_argument("pool_rows_mean: group " + std::to_string(gi) + " is empty");
    }
    for (int r : members) {
      if (r < 0 || r >= m) throw std::out_of_range("pool_rows_mean: row out of range");
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (int r : members)
      for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(gi) * d + j] += h.at(r, j) * inv;
  }

  Tensor result = make_result({g, d}, std::move(out));
  auto hn = h.node();
  auto groups_copy = std::make_shared<std::vector<std::vector<int>>>(groups);
  attach(result, {h}, [hn, groups_copy, d](TensorNode& node) {
    if (!hn->requires_grad) return;
    for (std::size_t gi = 0; gi < groups_copy->size(); ++gi) {
      const auto& members = (*groups_copy)[gi];
      const double inv = 1.0 / static_cast<double>(members.size());
      for (int r : members)
        for (int j = 0; j < d; ++j)
          hn->grad[static_cast<std::size_t>(r) * d + j] +=
              node.grad[gi * d + j] * inv;
    }
  });
  return result;
}

Tensor cross_entropy(const Tensor& p, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("cross_entropy: label must be 0 or 1");
  const std::size_t n = p.numel();
  if (n == 0) throw std::invalid_argument("cross_entropy: empty input");

  const double y = static_cast<double>(label);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = std::clamp(p[i], kProbEps, 1.0 - kProbEps);
    acc += -(y * std::log(pi) + (1.0 - y) * std::log(1.0 - pi));
  }
  acc /= static_cast<double>(n);

  Tensor result = Tensor::scalar(acc);
  auto pn = p.node();
  attach(result, {p}, [pn, y, n](TensorNode& node) {
    if (!pn->requires_grad) return;
    const double g = node.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double pi = pn->data[i];
      if (pi <= kProbEps || pi >= 1.0 - kProbEps) continue;  // clamped: flat
      pn->grad[i] += g * (-(y / pi) + (1.0 - y) / (1.0 - pi));
    }
  });
  return result;
}

Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a[i];
  Tensor result = Tensor::scalar(acc);
  auto an = a.node();
  attach(result, {a}, [an](TensorNode& node) {
    if (!an->requires_grad) return;
    for (auto& g : an->grad) g += node.grad[0];
  });
  return result;
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a[i];
  Tensor result = Tensor::scalar(acc * inv);
  auto an = a.node();
  attach(result, {a}, [an, inv](TensorNode& node) {
    if (!an->requires_grad) return;
    for (auto& g : an->grad) g += node.grad[0] * inv;
  });
  return result;
}

Tensor dropout(const Tensor& a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return a;

  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(a.numel());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < a.numel(); ++i) {
    (*mask)[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    out[i] = a[i] * (*mask)[i];
  }

  Tensor result = make_result(a.shape(), std::move(out));
  auto an = a.node();
  attach(result, {a}, [an, mask](TensorNode& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < node.grad.size(); ++i)
      an->grad[i] += node.grad[i] * (*mask)[i];
  });
  return result;
}

}  // namespace vulnloc
