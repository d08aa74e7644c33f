#include "mbcnn/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbcnn {

template <typename T>
void adam_step_params(
    const std::vector<std::pair<std::string, TensorT<T>*>>& params,
    const std::map<std::string, TensorT<T>>& grads,
    const std::set<std::string>& frozen, AdamStateT<T>& st) {
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (const auto& [name, param] : params) {
    if (frozen.count(name)) continue;
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw std::invalid_argument("adam: missing gradient for " + name);
    }
    const TensorT<T>& g = git->second;
    if (!(g.shape() == param->shape())) {
      throw std::invalid_argument("adam: gradient shape mismatch for " + name);
    }
    auto mit = st.m.find(name);
    if (mit == st.m.end()) {
      mit = st.m.emplace(name, TensorT<T>::zeros(param->shape())).first;
      st.v.emplace(name, TensorT<T>::zeros(param->shape()));
    }
    TensorT<T>& m = mit->second;
    TensorT<T>& v = st.v.at(name);
    T* pm = m.mutable_data();
    T* pv = v.mutable_data();
    T* pp = param->mutable_data();
    const T* pg = g.data();
    const bool clamp = name.ends_with("/passband");
    for (std::size_t i = 0; i < param->size(); ++i) {
      const double gi = pg[i];
      const double mi = st.beta1 * double(pm[i]) + (1.0 - st.beta1) * gi;
      const double vi = st.beta2 * double(pv[i]) + (1.0 - st.beta2) * gi * gi;
      pm[i] = static_cast<T>(mi);
      pv[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      double next = double(pp[i]) - st.lr * mhat / (std::sqrt(vhat) + st.eps);
      if (clamp && next < 0.0) next = 0.0;
      pp[i] = static_cast<T>(next);
    }
  }
}

template <typename T>
void adam_step(ModelT<T>& model,
               const std::map<std::string, TensorT<T>>& grads,
               AdamStateT<T>& st) {
  std::vector<std::pair<std::string, TensorT<T>*>> params;
  visit_params(model, "", [&params](const std::string& n, TensorT<T>& t) {
    params.emplace_back(n, &t);
  });
  adam_step_params(params, grads, model.frozen, st);
}

template <typename T>
std::map<std::string, TensorT<T>> collect_grads(
    ModelT<T>& tracked, const std::map<int, TensorT<T>>& node_grads) {
  std::map<std::string, TensorT<T>> out;
  visit_params(tracked, "",
               [&out, &node_grads](const std::string& n, TensorT<T>& t) {
                 if (t.node() == kNoNode) return;
                 auto it = node_grads.find(t.node());
                 out.emplace(n, it != node_grads.end()
                                    ? it->second
                                    : TensorT<T>::zeros(t.shape()));
               });
  return out;
}

ScheduleState make_schedule(double lr0) {
  if (lr0 <= 0.0) throw std::invalid_argument("schedule: lr must be positive");
  ScheduleState st;
  st.initial_lr = lr0;
  st.lr = lr0;
  st.best_psnr = -std::numeric_limits<double>::infinity();
  return st;
}

double schedule_update(ScheduleState& st, double val_psnr) {
  if (st.lr < kMinLr) {
    st.stop = true;
    return st.lr;
  }
  double improvement = 0.0;
  if (val_psnr > st.best_psnr) {
    improvement = val_psnr - st.best_psnr;  // inf on the first update
    st.best_psnr = val_psnr;
  }
  if (improvement < kMinImprovementDb) {
    if (++st.low_count >= kPlateauPatience) {
      st.lr /= 2.0;
      ++st.halvings;
      st.low_count = 0;
    }
  } else {
    st.low_count = 0;
  }
  return st.lr;
}

#define MBCNN_INSTANTIATE_OPTIM(T)                                          \
  template void adam_step_params<T>(                                        \
      const std::vector<std::pair<std::string, TensorT<T>*>>&,              \
      const std::map<std::string, TensorT<T>>&, const std::set<std::string>&, \
      AdamStateT<T>&);                                                      \
  template void adam_step<T>(ModelT<T>&,                                    \
                             const std::map<std::string, TensorT<T>>&,      \
                             AdamStateT<T>&);                               \
  template std::map<std::string, TensorT<T>> collect_grads<T>(              \
      ModelT<T>&, const std::map<int, TensorT<T>>&);

MBCNN_INSTANTIATE_OPTIM(float)
MBCNN_INSTANTIATE_OPTIM(double)

}  // namespace mbcnn
