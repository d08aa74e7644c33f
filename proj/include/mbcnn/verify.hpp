#pragma once

#include <string>
#include <vector>

namespace mbcnn {

// Finite-difference audit of every differentiable op, block and loss on
// small random instances. Used by the gradcheck CLI verb and the
// acceptance suite.
inline constexpr double kVerifyTol = 1e-4;

struct VerifyResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

std::vector<VerifyResult> run_verification();
bool all_passed(const std::vector<VerifyResult>& results);

}  // namespace mbcnn
