// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checker. A stencil whose ReLU sign
// pattern differs from the base point straddles a kink; such entries are
// retried with smaller steps and finally with a one-sided second-order
// stencil on a side that keeps the base pattern.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "partialformer/ops.hpp"
#include "partialformer/tensor.hpp"

namespace gradcheck {

struct Param {
  std::string name;
  pf::Tensor tensor;  // leaf with requires_grad
};

struct Result {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
  std::size_t kink_fallbacks = 0;
  std::size_t unresolved = 0;  // no smooth stencil found; still compared
};

// Below `floor` the comparison is absolute.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// loss() must rebuild the graph from the current parameter values.
inline Result check(const std::function<pf::Tensor()>& loss, std::vector<Param> params, double h = 1e-5,
                    std::size_t max_entries_per_param = 0) {
  for (auto& p : params) p.tensor.zero_grad();
  pf::backward(loss());

  auto evaluate = [&](std::uint64_t* pattern) {
    pf::NoGradGuard guard;
    pf::ActivationPatternRecorder recorder;
    const double v = loss().item();
    if (pattern) *pattern = recorder.hash();
    return v;
  };

  std::uint64_t base_pattern = 0;
  const double f0 = evaluate(&base_pattern);
  Result result;
  for (auto& p : params) {
    const std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    auto data = p.tensor.mutable_data();
    std::size_t n = data.size();
    std::size_t stride = 1;
    if (max_entries_per_param && n > max_entries_per_param) stride = (n + max_entries_per_param - 1) / max_entries_per_param;
    for (std::size_t i = 0; i < n; i += stride) {
      const double x0 = data[i];
      auto at = [&](double delta, std::uint64_t* pattern) {
        data[i] = x0 + delta;
        const double v = evaluate(pattern);
        data[i] = x0;
        return v;
      };
      double fd = 0.0;
      bool smooth = false;
      for (double step : {h, h * 0.1, h * 0.01}) {
        std::uint64_t pp = 0, pm = 0;
        const double fp = at(step, &pp), fm = at(-step, &pm);
        fd = (fp - fm) / (2 * step);
        if (pp == base_pattern && pm == base_pattern) {
          smooth = true;
          break;
        }
      }
      if (!smooth) {
        ++result.kink_fallbacks;
        for (double side : {1.0, -1.0}) {
          std::uint64_t p1 = 0, p2 = 0;
          const double f1 = at(side * h, &p1), f2 = at(side * 2 * h, &p2);
          if (p1 == base_pattern && p2 == base_pattern) {
            fd = side * (-3 * f0 + 4 * f1 - f2) / (2 * h);
            smooth = true;
            break;
          }
        }
        if (!smooth) ++result.unresolved;
      }
      const double err = rel_error(analytic[i], fd, 1e-6 * std::max(1.0, std::fabs(f0)));
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

// Fixed random projection so that every output element reaches the loss.
inline pf::Tensor project(const pf::Tensor& out, const pf::Tensor& weights) {
  return pf::sum(pf::mul(out, weights));
}

}  // namespace gradcheck
