#pragma once

#include <array>
#include <string>

#include "mbcnn/model.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Four fixed 3x3 directional derivative filters: horizontal, vertical
// (classic Sobel), and the pair rotated 45 degrees. All rows sum to zero so
// constant images produce zero response.
struct SobelBank {
  std::array<std::array<std::array<double, 3>, 3>, 4> kernels;
};

const SobelBank& sobel_bank();

// Depthwise filter bank as a conv kernel: input channel ci feeds output
// channel f*channels+ci with filter f. nfilters = 2 uses the classic pair
// only, 4 the full bank.
template <typename T>
TensorT<T> bank_kernel(const SobelBank& bank, int channels, int nfilters);

enum class LossVariant { kL1, kL1Sobel, kL1Asl };

LossVariant loss_variant_from_string(const std::string& s);
std::string loss_variant_name(LossVariant v);

struct LossConfig {
  LossVariant variant = LossVariant::kL1Asl;
  double lambda = 0.25;
};

// The per-variant default weight: 0 for plain l1, 0.5 for sobel, 0.25 for asl.
LossConfig default_loss_config(LossVariant v);

// Mean absolute difference over all elements. Scalar output, differentiable.
template <typename T>
TensorT<T> l1_loss(const TensorT<T>& zhat, const TensorT<T>& z);

// Mean absolute difference of depthwise filter responses, evaluated on the
// valid region only (no padding). N counts every response element.
template <typename T>
TensorT<T> sobel_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                      const SobelBank& bank = sobel_bank());

template <typename T>
TensorT<T> asl_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                    const SobelBank& bank = sobel_bank());

// l1 + lambda * variant term.
template <typename T>
TensorT<T> combined_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                         const LossConfig& cfg);

// Sum of combined losses of the three scale outputs against gt and its 2x2
// and 4x4 average-pooled pyramid.
template <typename T>
TensorT<T> multiscale_loss(const ScalePyramidT<T>& outs, const TensorT<T>& gt,
                           const LossConfig& cfg);

}  // namespace mbcnn
