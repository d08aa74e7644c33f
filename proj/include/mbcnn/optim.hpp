#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mbcnn/model.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

template <typename T>
struct AdamStateT {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, TensorT<T>> m, v;  // lazily allocated moments
};

using AdamState = AdamStateT<float>;
using AdamStateD = AdamStateT<double>;

// Bias-corrected Adam update over an explicit parameter list. Names in
// `frozen` are skipped entirely. Every parameter whose name ends in
// "/passband" is clamped to [0, inf) after its update. A missing gradient for
// a non-frozen parameter is an error.
template <typename T>
void adam_step_params(
    const std::vector<std::pair<std::string, TensorT<T>*>>& params,
    const std::map<std::string, TensorT<T>>& grads,
    const std::set<std::string>& frozen, AdamStateT<T>& st);

template <typename T>
void adam_step(ModelT<T>& model, const std::map<std::string, TensorT<T>>& grads,
               AdamStateT<T>& st);

// Gradients of a tracked model's parameters keyed by name, taken from a
// tape backward() result. Untracked parameters are skipped.
template <typename T>
std::map<std::string, TensorT<T>> collect_grads(
    ModelT<T>& tracked, const std::map<int, TensorT<T>>& node_grads);

inline constexpr double kMinImprovementDb = 0.001;
inline constexpr int kPlateauPatience = 4;
inline constexpr double kMinLr = 1e-6;

// Validation-PSNR plateau schedule: four consecutive epochs improving by
// less than 0.001 dB halve the rate; once the rate sits below 1e-6 the next
// update raises the stop flag.
struct ScheduleState {
  double initial_lr = 1e-4;
  double lr = 1e-4;
  double best_psnr;  // -inf until the first update
  int low_count = 0;
  int halvings = 0;
  bool stop = false;
};

ScheduleState make_schedule(double lr0);

// Feeds one epoch's validation PSNR; returns the learning rate to use next.
double schedule_update(ScheduleState& st, double val_psnr);

}  // namespace mbcnn
