#pragma once

// Central finite-difference gradient oracle shared by the unit and acceptance
// suites. Stays independent of the reverse-mode path it checks: it only calls
// the forward builder.

#include <cmath>
#include <functional>
#include <vector>

#include "adt/autograd.hpp"

namespace adt::test {

// Rebuilds the scalar loss from the given leaves, perturbing one element at a
// time, and compares the analytic gradient against central differences.
// Returns the max relative error over all checked elements.
inline double fd_max_rel_error(const std::vector<Var>& leaves,
                               const std::function<Var()>& build_loss, double eps = 1e-5) {
  Var loss = build_loss();
  clear_grads(leaves);
  // rebuild so the "backward twice" guard never trips across calls
  loss = build_loss();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (const auto& l : leaves) {
    l->ensure_grad();
    analytic.push_back(l->grad);
  }
  double max_rel = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    for (size_t i = 0; i < leaves[li]->value.numel(); ++i) {
      double saved = leaves[li]->value.data[i];
      leaves[li]->value.data[i] = saved + eps;
      double fp = build_loss()->value.data[0];
      leaves[li]->value.data[i] = saved - eps;
      double fm = build_loss()->value.data[0];
      leaves[li]->value.data[i] = saved;
      double numeric = (fp - fm) / (2.0 * eps);
      double denom = std::max({std::fabs(numeric), std::fabs(analytic[li][i]), 1e-4});
      max_rel = std::max(max_rel, std::fabs(numeric - analytic[li][i]) / denom);
    }
  }
  clear_grads(leaves);
  return max_rel;
}

}  // namespace adt::test
