#pragma once

#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Quality metrics, computed in double no matter the tensor type. Callers are
// expected to clamp images to [0,1] first; nothing here clamps.

template <typename T>
double mse(const TensorT<T>& a, const TensorT<T>& b);

// 10*log10(1/mse); +inf when mse == 0.
double psnr_from_mse(double m);

template <typename T>
double psnr(const TensorT<T>& a, const TensorT<T>& b);

// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, L=1, valid windows only, averaged over batch and channels.
// Requires h,w >= 11.
template <typename T>
double ssim(const TensorT<T>& a, const TensorT<T>& b);

}  // namespace mbcnn
