#include "mbcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mbcnn {
namespace {

double eval_loss(const GradCheckFn& f, const std::vector<TensorD>& inputs) {
  TapeD tape;
  std::vector<TensorD> leaves;
  leaves.reserve(inputs.size());
  for (const TensorD& t : inputs) leaves.push_back(tape.leaf(t));
  TensorD loss = f(tape, leaves);
  if (!(loss.shape() == Shape{1, 1, 1, 1})) {
    throw std::invalid_argument("grad_check: f must return a scalar");
  }
  return loss.data()[0];
}

}  // namespace

std::string GradCheckResult::str() const {
  std::ostringstream os;
  os << "max_rel_err=" << max_rel_err << " max_abs_err=" << max_abs_err
     << " at input " << worst_input << "[" << worst_index << "]"
     << " analytic=" << analytic << " numeric=" << numeric;
  return os.str();
}

GradCheckResult grad_check(const GradCheckFn& f,
                           const std::vector<TensorD>& inputs, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: eps must be in [1e-6, 1e-3]");
  }

  // Analytic pass.
  TapeD tape;
  std::vector<TensorD> leaves;
  leaves.reserve(inputs.size());
  for (const TensorD& t : inputs) leaves.push_back(tape.leaf(t));
  TensorD loss = f(tape, leaves);
  if (!(loss.shape() == Shape{1, 1, 1, 1})) {
    throw std::invalid_argument("grad_check: f must return a scalar");
  }
  auto grads = tape.backward(loss);

  GradCheckResult res;
  std::vector<TensorD> work = inputs;  // shared buffers; perturb via COW
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const TensorD& analytic_grad = grads.at(leaves[i].node());
    const double* ag = analytic_grad.data();
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double orig = inputs[i].data()[j];
      work[i].mutable_data()[j] = orig + eps;
      const double fp = eval_loss(f, work);
      work[i].mutable_data()[j] = orig - eps;
      const double fm = eval_loss(f, work);
      work[i].mutable_data()[j] = orig;

      const double n = (fp - fm) / (2.0 * eps);
      const double a = ag[j];
      const double abs_err = std::abs(a - n);
      // the floor keeps finite-difference noise on true-zero gradients from
      // registering as relative error
      const double rel = abs_err / std::max(1e-6, std::abs(a) + std::abs(n));
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_input = static_cast<int>(i);
        res.worst_index = j;
        res.analytic = a;
        res.numeric = n;
      }
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
    }
  }
  return res;
}

}  // namespace mbcnn
