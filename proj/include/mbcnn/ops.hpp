#pragma once

#include <vector>

#include "mbcnn/tape.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Elementary differentiable tensor operations. Each op records itself on the
// tape of its tracked inputs (if any); constants pass through untracked.

// Elementwise sum; shapes must match.
template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);

// y = s * x with a (1,1,1,1) scalar s. Gradient of s is sum(upstream * x).
template <typename T>
TensorT<T> scale(const TensorT<T>& x, const TensorT<T>& s);

// y = c * x with a plain constant.
template <typename T>
TensorT<T> scale_by(const TensorT<T>& x, T c);

template <typename T>
TensorT<T> relu(const TensorT<T>& x);

// Elementwise product. b either matches a's shape or broadcasts a per-channel
// vector of shape (batch,1,1,C) over the spatial grid.
template <typename T>
TensorT<T> mul_elementwise(const TensorT<T>& a, const TensorT<T>& b);

// Channel concatenation in argument order; batch/height/width must agree.
template <typename T>
TensorT<T> concat_channels(const std::vector<TensorT<T>>& xs);

// Scalar sum of all elements.
template <typename T>
TensorT<T> sum(const TensorT<T>& x);

}  // namespace mbcnn
