#include "adt/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace adt {

namespace {

thread_local bool g_grad_enabled = true;

void check_same_shape(const char* op, const Var& a, const Var& b) {
  if (a->value.shape != b->value.shape)
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a->value.shape_str() +
                                " vs " + b->value.shape_str());
}

Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    bool rg = false;
    for (const auto& in : inputs) rg = rg || in->requires_grad;
    if (rg) {
      n->requires_grad = true;
      n->inputs = std::move(inputs);
      n->backprop = std::move(backprop);
    }
  }
  return n;
}

// Elementwise binary op with per-element partial derivatives.
template <class F, class Da, class Db>
Var ew_binary(const char* name, const Var& a, const Var& b, F f, Da da, Db db) {
  check_same_shape(name, a, b);
  Tensor out = Tensor::zeros(a->value.shape);
  size_t n = out.numel();
  for (size_t i = 0; i < n; ++i) out.data[i] = f(a->value.data[i], b->value.data[i]);
  return make_node(std::move(out), {a, b}, [n, da, db](Node& node) {
    const Var& a = node.inputs[0];
    const Var& b = node.inputs[1];
    if (a->requires_grad) {
      a->ensure_grad();
      for (size_t i = 0; i < n; ++i)
        a->grad[i] += node.grad[i] * da(a->value.data[i], b->value.data[i]);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (size_t i = 0; i < n; ++i)
        b->grad[i] += node.grad[i] * db(a->value.data[i], b->value.data[i]);
    }
  });
}

template <class F, class D>
Var ew_unary(const Var& a, F f, D d) {
  Tensor out = Tensor::zeros(a->value.shape);
  size_t n = out.numel();
  for (size_t i = 0; i < n; ++i) out.data[i] = f(a->value.data[i]);
  return make_node(std::move(out), {a}, [n, d](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (size_t i = 0; i < n; ++i) a->grad[i] += node.grad[i] * d(a->value.data[i]);
  });
}

}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

Var constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  return n;
}

Var leaf(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = true;
  return n;
}

Var add(const Var& a, const Var& b) {
  return ew_binary("add", a, b, [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return ew_binary("sub", a, b, [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return ew_binary("mul", a, b, [](double x, double y) { return x * y; },
                   [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return ew_binary("div", a, b, [](double x, double y) { return x / y; },
                   [](double, double y) { return 1.0 / y; },
                   [](double x, double y) { return -x / (y * y); });
}

Var maximum(const Var& a, const Var& b) {
  return ew_binary("maximum", a, b, [](double x, double y) { return x > y ? x : y; },
                   [](double x, double y) { return x > y ? 1.0 : 0.0; },
                   [](double x, double y) { return x > y ? 0.0 : 1.0; });
}

Var minimum(const Var& a, const Var& b) {
  return ew_binary("minimum", a, b, [](double x, double y) { return x < y ? x : y; },
                   [](double x, double y) { return x < y ? 1.0 : 0.0; },
                   [](double x, double y) { return x < y ? 0.0 : 1.0; });
}

Var abs(const Var& a) {
  return ew_unary(a, [](double x) { return std::fabs(x); },
                  [](double x) { return x >= 0.0 ? 1.0 : -1.0; });
}

Var log(const Var& a) {
  return ew_unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var relu(const Var& a) {
  return ew_unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(const Var& a) {
  constexpr double inv_sqrt2 = 0.7071067811865476;
  constexpr double inv_sqrt2pi = 0.3989422804014327;
  return ew_unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x) {
        double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        return cdf + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
      });
}

Var scale(const Var& a, double s) {
  return ew_unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var add_scalar(const Var& a, double c) {
  return ew_unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.shape.size() != 2 || b->value.shape.size() != 2)
    throw std::invalid_argument("matmul: inputs must be 2-D, got " + a->value.shape_str() +
                                " and " + b->value.shape_str());
  int m = a->value.shape[0], k = a->value.shape[1];
  int k2 = b->value.shape[0], n = b->value.shape[1];
  if (k != k2)
    throw std::invalid_argument("matmul: inner dims disagree " + a->value.shape_str() + " x " +
                                b->value.shape_str());
  Tensor out = Tensor::zeros({m, n});
  const double* A = a->value.data.data();
  const double* B = b->value.data.data();
  double* C = out.data.data();
  // i-k-j loop order keeps B accesses sequential
  for (int i = 0; i < m; ++i) {
    const double* Ai = A + static_cast<size_t>(i) * k;
    double* Ci = C + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      double av = Ai[kk];
      const double* Bk = B + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) Ci[j] += av * Bk[j];
    }
  }
  return make_node(std::move(out), {a, b}, [m, k, n](Node& node) {
    const Var& a = node.inputs[0];
    const Var& b = node.inputs[1];
    const double* G = node.grad.data();
    if (a->requires_grad) {
      a->ensure_grad();
      // dA = G * B^T
      const double* B = b->value.data.data();
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          double s = 0.0;
          const double* Gi = G + static_cast<size_t>(i) * n;
          const double* Bk = B + static_cast<size_t>(kk) * n;
          for (int j = 0; j < n; ++j) s += Gi[j] * Bk[j];
          a->grad[static_cast<size_t>(i) * k + kk] += s;
        }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      // dB = A^T * G
      const double* A = a->value.data.data();
      for (int i = 0; i < m; ++i) {
        const double* Ai = A + static_cast<size_t>(i) * k;
        const double* Gi = G + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
          double av = Ai[kk];
          double* Bg = b->grad.data() + static_cast<size_t>(kk) * n;
          for (int j = 0; j < n; ++j) Bg[j] += av * Gi[j];
        }
      }
    }
  });
}

Var transpose(const Var& a) {
  if (a->value.shape.size() != 2)
    throw std::invalid_argument("transpose: input must be 2-D, got " + a->value.shape_str());
  int m = a->value.shape[0], n = a->value.shape[1];
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a->value.at(i, j);
  return make_node(std::move(out), {a}, [m, n](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        a->grad[static_cast<size_t>(i) * n + j] += node.grad[static_cast<size_t>(j) * m + i];
  });
}

Var reshape(const Var& a, std::vector<int> shape) {
  if (Tensor::numel_of(shape) != a->value.numel())
    throw std::invalid_argument("reshape: element count mismatch " + a->value.shape_str());
  Tensor out(std::move(shape), a->value.data);
  size_t n = out.numel();
  return make_node(std::move(out), {a}, [n](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (size_t i = 0; i < n; ++i) a->grad[i] += node.grad[i];
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: empty input list");
  int cols = parts[0]->value.cols();
  int rows = 0;
  for (const auto& p : parts) {
    if (p->value.shape.size() != 2 || p->value.cols() != cols)
      throw std::invalid_argument("concat: incompatible part shape " + p->value.shape_str());
    rows += p->value.shape[0];
  }
  Tensor out = Tensor::zeros({rows, cols});
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data.begin(), p->value.data.end(), out.data.begin() + off);
    off += p->value.numel();
  }
  return make_node(std::move(out), parts, [](Node& node) {
    size_t off = 0;
    for (const auto& p : node.inputs) {
      size_t n = p->value.numel();
      if (p->requires_grad) {
        p->ensure_grad();
        for (size_t i = 0; i < n; ++i) p->grad[i] += node.grad[off + i];
      }
      off += n;
    }
  });
}

Var slice_rows(const Var& a, int r0, int r1) {
  if (a->value.shape.size() != 2)
    throw std::invalid_argument("slice_rows: input must be 2-D");
  int rows = a->value.shape[0], cols = a->value.shape[1];
  if (r0 < 0 || r1 > rows || r0 >= r1)
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(r0) + "," +
                                std::to_string(r1) + ") of " + a->value.shape_str());
  Tensor out = Tensor::zeros({r1 - r0, cols});
  std::copy(a->value.data.begin() + static_cast<size_t>(r0) * cols,
            a->value.data.begin() + static_cast<size_t>(r1) * cols, out.data.begin());
  return make_node(std::move(out), {a}, [r0, cols](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    size_t base = static_cast<size_t>(r0) * cols;
    for (size_t i = 0; i < node.value.numel(); ++i) a->grad[base + i] += node.grad[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input list");
  int rows = parts[0]->value.rows();
  int cols = 0;
  for (const auto& p : parts) {
    if (p->value.shape.size() != 2 || p->value.rows() != rows)
      throw std::invalid_argument("concat_cols: incompatible part shape " + p->value.shape_str());
    cols += p->value.cols();
  }
  Tensor out = Tensor::zeros({rows, cols});
  int coff = 0;
  for (const auto& p : parts) {
    int pc = p->value.cols();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pc; ++j) out.at(i, coff + j) = p->value.at(i, j);
    coff += pc;
  }
  return make_node(std::move(out), parts, [rows, cols](Node& node) {
    int coff = 0;
    for (const auto& p : node.inputs) {
      int pc = p->value.cols();
      if (p->requires_grad) {
        p->ensure_grad();
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < pc; ++j)
            p->grad[static_cast<size_t>(i) * pc + j] +=
                node.grad[static_cast<size_t>(i) * cols + coff + j];
      }
      coff += pc;
    }
  });
}

Var slice_cols(const Var& a, int c0, int c1) {
  if (a->value.shape.size() != 2)
    throw std::invalid_argument("slice_cols: input must be 2-D");
  int rows = a->value.shape[0], cols = a->value.shape[1];
  if (c0 < 0 || c1 > cols || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") of " + a->value.shape_str());
  int w = c1 - c0;
  Tensor out = Tensor::zeros({rows, w});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < w; ++j) out.at(i, j) = a->value.at(i, c0 + j);
  return make_node(std::move(out), {a}, [rows, cols, c0, w](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < w; ++j)
        a->grad[static_cast<size_t>(i) * cols + c0 + j] +=
            node.grad[static_cast<size_t>(i) * w + j];
  });
}

Var row_scale(const Var& x, const Var& v) {
  int rows = x->value.rows(), cols = x->value.cols();
  if (static_cast<int>(v->value.numel()) != rows)
    throw std::invalid_argument("row_scale: scale length " + std::to_string(v->value.numel()) +
                                " != rows of " + x->value.shape_str());
  Tensor out = Tensor::zeros(x->value.shape);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out.data[static_cast<size_t>(i) * cols + j] =
          x->value.data[static_cast<size_t>(i) * cols + j] * v->value.data[i];
  return make_node(std::move(out), {x, v}, [rows, cols](Node& node) {
    const Var& x = node.inputs[0];
    const Var& v = node.inputs[1];
    if (x->requires_grad) {
      x->ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          x->grad[static_cast<size_t>(i) * cols + j] +=
              node.grad[static_cast<size_t>(i) * cols + j] * v->value.data[i];
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j)
          s += node.grad[static_cast<size_t>(i) * cols + j] *
               x->value.data[static_cast<size_t>(i) * cols + j];
        v->grad[i] += s;
      }
    }
  });
}

Var mul_bcast_row(const Var& x, const Var& v) {
  int rows = x->value.rows(), cols = x->value.cols();
  if (static_cast<int>(v->value.numel()) != cols)
    throw std::invalid_argument("mul_bcast_row: vector length " +
                                std::to_string(v->value.numel()) + " != cols of " +
                                x->value.shape_str());
  Tensor out = Tensor::zeros(x->value.shape);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out.data[static_cast<size_t>(i) * cols + j] =
          x->value.data[static_cast<size_t>(i) * cols + j] * v->value.data[j];
  return make_node(std::move(out), {x, v}, [rows, cols](Node& node) {
    const Var& x = node.inputs[0];
    const Var& v = node.inputs[1];
    if (x->requires_grad) {
      x->ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          x->grad[static_cast<size_t>(i) * cols + j] +=
              node.grad[static_cast<size_t>(i) * cols + j] * v->value.data[j];
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i)
          s += node.grad[static_cast<size_t>(i) * cols + j] *
               x->value.data[static_cast<size_t>(i) * cols + j];
        v->grad[j] += s;
      }
    }
  });
}

Var add_bcast_row(const Var& x, const Var& v) {
  int rows = x->value.rows(), cols = x->value.cols();
  if (static_cast<int>(v->value.numel()) != cols)
    throw std::invalid_argument("add_bcast_row: vector length " +
                                std::to_string(v->value.numel()) + " != cols of " +
                                x->value.shape_str());
  Tensor out = x->value;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.data[static_cast<size_t>(i) * cols + j] += v->value.data[j];
  return make_node(std::move(out), {x, v}, [rows, cols](Node& node) {
    const Var& x = node.inputs[0];
    const Var& v = node.inputs[1];
    if (x->requires_grad) {
      x->ensure_grad();
      for (size_t i = 0; i < node.value.numel(); ++i) x->grad[i] += node.grad[i];
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) s += node.grad[static_cast<size_t>(i) * cols + j];
        v->grad[j] += s;
      }
    }
  });
}

Var softmax_last(const Var& a) {
  if (a->value.numel() == 0 || a->value.cols() == 0)
    throw std::invalid_argument("softmax: empty input");
  int cols = a->value.cols();
  int rows = static_cast<int>(a->value.numel()) / cols;
  Tensor out = Tensor::zeros(a->value.shape);
  for (int i = 0; i < rows; ++i) {
    const double* xi = a->value.data.data() + static_cast<size_t>(i) * cols;
    double* yi = out.data.data() + static_cast<size_t>(i) * cols;
    double mx = xi[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xi[j]);
    double z = 0.0;
    for (int j = 0; j < cols; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    for (int j = 0; j < cols; ++j) yi[j] /= z;
  }
  return make_node(std::move(out), {a}, [rows, cols](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const double* y = node.value.data.data() + static_cast<size_t>(i) * cols;
      const double* g = node.grad.data() + static_cast<size_t>(i) * cols;
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += y[j] * g[j];
      double* ga = a->grad.data() + static_cast<size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) ga[j] += y[j] * (g[j] - dot);
    }
  });
}

Var layer_norm_last(const Var& a, double eps) {
  if (a->value.cols() == 0) throw std::invalid_argument("layer_norm: empty input");
  int cols = a->value.cols();
  int rows = static_cast<int>(a->value.numel()) / cols;
  Tensor out = Tensor::zeros(a->value.shape);
  std::vector<double> inv_std(rows);
  for (int i = 0; i < rows; ++i) {
    const double* xi = a->value.data.data() + static_cast<size_t>(i) * cols;
    double mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += xi[j];
    mean /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= cols;
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    double* yi = out.data.data() + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) yi[j] = (xi[j] - mean) * is;
  }
  return make_node(std::move(out), {a}, [rows, cols, inv_std](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const double* y = node.value.data.data() + static_cast<size_t>(i) * cols;
      const double* g = node.grad.data() + static_cast<size_t>(i) * cols;
      double gsum = 0.0, gysum = 0.0;
      for (int j = 0; j < cols; ++j) {
        gsum += g[j];
        gysum += g[j] * y[j];
      }
      double* ga = a->grad.data() + static_cast<size_t>(i) * cols;
      double is = inv_std[i];
      for (int j = 0; j < cols; ++j)
        ga[j] += is * (g[j] - gsum / cols - y[j] * gysum / cols);
    }
  });
}

Var sum_all(const Var& a) {
  double s = std::accumulate(a->value.data.begin(), a->value.data.end(), 0.0);
  size_t n = a->value.numel();
  return make_node(Tensor::scalar(s), {a}, [n](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (size_t i = 0; i < n; ++i) a->grad[i] += node.grad[0];
  });
}

Var mean_all(const Var& a) {
  size_t n = a->value.numel();
  double s = std::accumulate(a->value.data.begin(), a->value.data.end(), 0.0) / n;
  return make_node(Tensor::scalar(s), {a}, [n](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (size_t i = 0; i < n; ++i) a->grad[i] += node.grad[0] / n;
  });
}

Var topk_values(const Var& a, int k) {
  size_t n = a->value.numel();
  if (k < 1 || static_cast<size_t>(k) > n)
    throw std::invalid_argument("topk_values: k=" + std::to_string(k) + " out of range for " +
                                a->value.shape_str());
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  // descending by value, ties by row-major index
  std::stable_sort(idx.begin(), idx.end(), [&](size_t i, size_t j) {
    return a->value.data[i] > a->value.data[j];
  });
  idx.resize(k);
  Tensor out = Tensor::zeros({k});
  for (int i = 0; i < k; ++i) out.data[i] = a->value.data[idx[i]];
  return make_node(std::move(out), {a}, [idx](Node& node) {
    const Var& a = node.inputs[0];
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (size_t i = 0; i < idx.size(); ++i) a->grad[idx[i]] += node.grad[i];
  });
}

void backward(const Var& loss) {
  if (loss->value.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + loss->value.shape_str());
  if (!loss->requires_grad) return;
  if (!loss->grad.empty())
    throw std::runtime_error("backward: called twice without clearing gradients");

  // iterative post-order DFS over requires_grad nodes
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.push_back({loss.get(), 0});
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
}

void sgd_step(const std::vector<Var>& params, double learning_rate) {
  for (const auto& p : params)
    if (p->grad.empty())
      throw std::runtime_error("sgd_step: parameter missing gradient");
  for (const auto& p : params) {
    for (size_t i = 0; i < p->value.numel(); ++i) p->value.data[i] -= learning_rate * p->grad[i];
    p->grad.clear();
  }
}

void clear_grads(const std::vector<Var>& params) {
  for (const auto& p : params) p->grad.clear();
}

}  // namespace adt
