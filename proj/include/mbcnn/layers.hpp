#pragma once

#include "mbcnn/rng.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

enum class Padding { kSame, kNone };

struct Conv2dSpec {
  int stride_y = 1, stride_x = 1;
  int dil_y = 1, dil_x = 1;
  Padding pad = Padding::kSame;
};

// Cross-correlation over NHWC input with a (kh, kw, in_ch, out_ch) kernel.
// kSame zero-pads so out = ceil(in / stride) with the smaller half of the
// padding in front; kNone computes only fully covered positions. Pass an
// empty tensor to skip the bias.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& kernel,
                  const TensorT<T>& bias, const Conv2dSpec& spec = {});

// (N,1,1,Cin) x (1,1,Cin,Cout) + bias.
template <typename T>
TensorT<T> fully_connected(const TensorT<T>& x, const TensorT<T>& weight,
                           const TensorT<T>& bias);

// (N,H,W,C) -> (N,1,1,C) spatial mean.
template <typename T>
TensorT<T> global_avg_pool(const TensorT<T>& x);

// (N,H,W,C) -> (N,H*r,W*r,C/r^2):
//   out(n,y,x,c) = in(n, y/r, x/r, c*r^2 + (y%r)*r + (x%r))
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int r);

// Exact inverse of pixel_shuffle: (N,H,W,C) -> (N,H/r,W/r,C*r^2).
template <typename T>
TensorT<T> pixel_unshuffle(const TensorT<T>& x, int r);

// U(-b, b) with b = sqrt(6 / fan_in), fan_in = kh*kw*in_ch, drawn in flat
// element order.
template <typename T>
TensorT<T> he_uniform(Shape kernel_shape, Rng& rng);

int conv_out_dim(int in, int k, int stride, int dil, Padding pad);
int conv_pad_begin(int in, int k, int stride, int dil, Padding pad);

}  // namespace mbcnn
