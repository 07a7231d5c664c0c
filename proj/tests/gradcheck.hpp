#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "readmit/neuro.hpp"

namespace testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

// Central differences of a scalar loss against the tape gradients of
// `params`. Relative error uses max(|analytic|, |numeric|, floor).
inline GradCheck grad_check(const std::vector<readmit::neuro::Parameter*>& params,
                            const std::function<readmit::neuro::Tape::Var(readmit::neuro::Tape&)>& loss,
                            double eps = 1e-5, double floor = 1e-5) {
  using readmit::neuro::Tape;
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    Tape tape;
    return tape.value(loss(tape))(0, 0);
  };
  GradCheck out;
  for (auto* p : params) {
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double saved = p->value.data[k];
      p->value.data[k] = saved + eps;
      const double up = eval();
      p->value.data[k] = saved - eps;
      const double down = eval();
      p->value.data[k] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p->grad.data[k];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(numeric - analytic) / scale);
      ++out.entries;
    }
  }
  return out;
}

}  // namespace testing
