#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mbcnn/tape.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Builds a scalar loss from tracked leaves. The leaves passed in are already
// registered on the tape in the same order as the inputs given to grad_check.
using GradCheckFn =
    std::function<TensorD(TapeD&, const std::vector<TensorD>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int worst_input = -1;      // index into the inputs list
  std::size_t worst_index = 0;  // flat element index within that input
  double analytic = 0.0;     // gradient pair at the worst element
  double numeric = 0.0;

  bool ok(double tol) const { return max_rel_err <= tol; }
  std::string str() const;
};

// Central-difference check of the tape gradient of f at the given inputs,
// run entirely in double. Relative error per element is
// |a - n| / max(1e-6, |a| + |n|). eps must lie in [1e-6, 1e-3].
GradCheckResult grad_check(const GradCheckFn& f,
                           const std::vector<TensorD>& inputs,
                           double eps = 1e-5);

}  // namespace mbcnn
