#pragma once

#include <functional>
#include <map>
#include <vector>

#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Gradient accumulator used while walking a tape backwards. Contributions
// to the same node are summed in the (fixed) visit order of the consumers.
template <typename T>
class GradSinkT {
 public:
  explicit GradSinkT(std::size_t node_count) : grads_(node_count) {}

  void add(int node, TensorT<T>&& g);
  void add(int node, const TensorT<T>& g) { add(node, g.detached()); }
  const TensorT<T>* get(int node) const {
    return grads_[node].empty() ? nullptr : &grads_[node];
  }

 private:
  template <typename>
  friend class TapeT;
  std::vector<TensorT<T>> grads_;
};

// Dynamically recorded computation graph. Node ids are assigned in recording
// order, so the record sequence is already a topological order; backward()
// walks it once in strictly decreasing id order.
//
// Instantiated for float (training) and double (the verification mode used
// by finite-difference checks). A tape is single-writer: record and run
// backward from one logical thread only.
template <typename T>
class TapeT {
 public:
  using BackwardFn =
      std::function<void(const TensorT<T>& upstream, GradSinkT<T>& sink)>;

  TapeT() = default;
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  // Registers a learnable input. The returned tensor shares the buffer and
  // carries the new node id; the argument itself is left untouched.
  TensorT<T> leaf(const TensorT<T>& t);

  // Tags an op result with a new node. `backward` receives the upstream
  // gradient of the node and accumulates input gradients into the sink.
  TensorT<T> emit(TensorT<T> value, BackwardFn backward);

  // Reverse sweep from a scalar loss. Returns dLoss/dX for every leaf,
  // zero-filled for leaves the loss does not reach.
  std::map<int, TensorT<T>> backward(const TensorT<T>& loss);

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    BackwardFn backward;  // empty for leaves
    Shape shape;
    bool is_leaf = false;
  };
  std::vector<Node> nodes_;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

}  // namespace mbcnn
