#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "adt/tensor.hpp"

namespace adt {

class Node;
using Var = std::shared_ptr<Node>;

// One node of the (implicit) compute graph. Holds the forward value, the
// gradient accumulator, and a closure that pushes this node's gradient into
// its inputs.
class Node {
 public:
  Tensor value;
  std::vector<double> grad;  // empty until backward reaches this node
  bool requires_grad = false;
  std::vector<Var> inputs;
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.numel(), 0.0);
  }
};

// Gradient tracking is disabled inside a NoGradGuard scope. Nodes created
// there are detached: they keep no input links and receive no gradient.
// Used for the teacher forward pass.
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// Leaf constructors.
Var constant(Tensor t);
Var leaf(Tensor t);  // requires_grad = true (parameter)

// Elementwise / structural ops.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var maximum(const Var& a, const Var& b);
Var minimum(const Var& a, const Var& b);
Var abs(const Var& a);
Var log(const Var& a);
Var gelu(const Var& a);
Var relu(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double c);

// Linear algebra / shape ops (2-D unless noted).
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var reshape(const Var& a, std::vector<int> shape);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int r0, int r1);  // rows [r0, r1)
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, int c0, int c1);  // cols [c0, c1)

// Broadcast helpers: x is (N,C).
Var row_scale(const Var& x, const Var& v);     // v has N entries; out_ij = x_ij * v_i
Var mul_bcast_row(const Var& x, const Var& v); // v has C entries; out_ij = x_ij * v_j
Var add_bcast_row(const Var& x, const Var& v); // v has C entries; out_ij = x_ij + v_j

// Row-wise ops over the last axis.
Var softmax_last(const Var& a);                    // max-subtracted, rows sum to 1
Var layer_norm_last(const Var& a, double eps = 1e-5);  // normalize only, no affine

// Reductions.
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// The k largest values of the flattened tensor, descending; ties broken by
// row-major index. Gradient scatters back to the selected positions.
Var topk_values(const Var& a, int k);

// Reverse-mode sweep from a scalar loss. Throws on non-scalar loss and on a
// second call without clearing gradients first.
void backward(const Var& loss);

// p <- p - lr * grad(p) for every param; grads cleared. Throws if any param
// is missing its gradient.
void sgd_step(const std::vector<Var>& params, double learning_rate);

void clear_grads(const std::vector<Var>& params);

}  // namespace adt
