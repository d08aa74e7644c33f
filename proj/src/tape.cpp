#include "mbcnn/tape.hpp"

#include <stdexcept>
#include <utility>

namespace mbcnn {

template <typename T>
void GradSinkT<T>::add(int node, TensorT<T>&& g) {
  TensorT<T>& slot = grads_[node];
  if (slot.empty()) {
    slot = std::move(g);
  } else {
    accumulate(slot, g);
  }
}

template <typename T>
TensorT<T> TapeT<T>::leaf(const TensorT<T>& t) {
  if (t.empty()) throw std::invalid_argument("tape: cannot watch empty tensor");
  TensorT<T> tracked = t.detached();
  tracked.tape_ = this;
  tracked.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{{}, t.shape(), true});
  return tracked;
}

template <typename T>
TensorT<T> TapeT<T>::emit(TensorT<T> value, BackwardFn backward) {
  value.tape_ = this;
  value.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{std::move(backward), value.shape(), false});
  return value;
}

template <typename T>
std::map<int, TensorT<T>> TapeT<T>::backward(const TensorT<T>& loss) {
  if (!loss.tracked() || loss.tape() != this) {
    throw std::invalid_argument("backward: loss is not recorded on this tape");
  }
  if (!(loss.shape() == Shape{1, 1, 1, 1})) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                loss.shape().str());
  }

  GradSinkT<T> sink(nodes_.size());
  sink.add(loss.node(), TensorT<T>::scalar(T(1)));

  for (int id = loss.node(); id >= 0; --id) {
    const TensorT<T>* g = sink.get(id);
    if (g == nullptr) continue;
    const Node& node = nodes_[id];
    if (node.backward) node.backward(*g, sink);
  }

  std::map<int, TensorT<T>> result;
  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
    if (!nodes_[id].is_leaf) continue;
    const TensorT<T>* g = sink.get(id);
    result.emplace(id, g ? g->detached() : TensorT<T>::zeros(nodes_[id].shape));
  }
  return result;
}

template class GradSinkT<float>;
template class GradSinkT<double>;
template class TapeT<float>;
template class TapeT<double>;

}  // namespace mbcnn
