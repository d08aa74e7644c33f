#include "mbcnn/blocks.hpp"

#include <stdexcept>

#include "mbcnn/ops.hpp"

namespace mbcnn {

template <typename T>
TensorT<T> apply_layer(const ConvLayerT<T>& l, const TensorT<T>& x) {
  TensorT<T> y = conv2d(x, l.kernel, l.bias, l.spec);
  return l.relu ? relu(y) : y;
}

template <typename T>
TensorT<T> dense_block(const TensorT<T>& x, const DenseBlockParamsT<T>& p) {
  if (x.shape().c != p.width) {
    throw std::invalid_argument("dense_block: expected width " +
                                std::to_string(p.width) + ", got " +
                                std::to_string(x.shape().c));
  }
  TensorT<T> f = x;
  for (const ConvLayerT<T>& layer : p.layers) {
    f = concat_channels<T>({f, apply_layer(layer, f)});
  }
  return f;
}

template <typename T>
TensorT<T> mtrb_forward(const TensorT<T>& x, const MtrbParamsT<T>& p) {
  TensorT<T> xi = apply_layer(p.c_m1, dense_block(x, p.dense));
  TensorT<T> folded = fold_passband(p.passband, *p.basis);
  TensorT<T> block_vals = conv2d(xi, folded, TensorT<T>());
  return add(x, scale(apply_layer(p.c_m2, block_vals), p.fsl));
}

template <typename T>
TensorT<T> gtmb_gamma(const TensorT<T>& x, const GtmbParamsT<T>& p) {
  const Shape xs = x.shape();
  if (xs.h < 2 || xs.w < 2) {
    throw std::invalid_argument("gtmb: spatial dims must be >= 2");
  }
  TensorT<T> pooled = global_avg_pool(apply_layer(p.cr_g1, x));
  return apply_layer(p.fc, apply_layer(p.fr2, apply_layer(p.fr1, pooled)));
}

template <typename T>
TensorT<T> gtmb_forward(const TensorT<T>& x, const GtmbParamsT<T>& p) {
  TensorT<T> gamma = gtmb_gamma(x, p);
  TensorT<T> f_local = apply_layer(p.cr_g2, x);
  return apply_layer(p.cr_g3, mul_elementwise(f_local, gamma));
}

template <typename T>
TensorT<T> ltmb_forward(const TensorT<T>& x, const LtmbParamsT<T>& p) {
  return apply_layer(p.cr_l, dense_block(x, p.dense));
}

template <typename T>
TensorT<T> upsample_decode(const TensorT<T>& x, const DecoderParamsT<T>& p) {
  return pixel_shuffle(apply_layer(p.conv, x), 2);
}

template <typename T>
ConvLayerT<T> make_conv(int kh, int kw, int ci, int co, const Conv2dSpec& spec,
                        bool with_relu, Rng& rng) {
  ConvLayerT<T> l;
  l.kernel = he_uniform<T>(Shape{kh, kw, ci, co}, rng);
  l.bias = TensorT<T>::zeros({1, 1, 1, co});
  l.spec = spec;
  l.relu = with_relu;
  return l;
}

template <typename T>
DenseBlockParamsT<T> make_dense_block(int width, int growth,
                                      const std::vector<int>& dilations,
                                      Rng& rng) {
  DenseBlockParamsT<T> p;
  p.width = width;
  p.growth = growth;
  int in_ch = width;
  for (int d : dilations) {
    Conv2dSpec sp;
    sp.dil_y = sp.dil_x = d;
    p.layers.push_back(make_conv<T>(3, 3, in_ch, growth, sp, true, rng));
    in_ch += growth;
  }
  return p;
}

template <typename T>
MtrbParamsT<T> make_mtrb(int width, int growth,
                         const std::vector<int>& dilations,
                         std::shared_ptr<const DctBasis> basis, Rng& rng) {
  MtrbParamsT<T> p;
  p.dense = make_dense_block<T>(width, growth, dilations, rng);
  const int deep = width + growth * static_cast<int>(dilations.size());
  const int pp = basis->p * basis->p;
  p.c_m1 = make_conv<T>(3, 3, deep, pp, Conv2dSpec{}, false, rng);
  p.passband = make_passband<T>(basis->p);
  p.basis = std::move(basis);
  p.c_m2 = make_conv<T>(3, 3, pp, width, Conv2dSpec{}, false, rng);
  p.fsl = TensorT<T>::scalar(static_cast<T>(0.1));
  return p;
}

template <typename T>
GtmbParamsT<T> make_gtmb(int in_width, int n_g, Rng& rng) {
  GtmbParamsT<T> p;
  Conv2dSpec stride2;
  stride2.stride_y = stride2.stride_x = 2;
  p.cr_g1 = make_conv<T>(3, 3, in_width, 2 * n_g, stride2, true, rng);
  Conv2dSpec fc_spec;
  fc_spec.pad = Padding::kNone;
  p.fr1 = make_conv<T>(1, 1, 2 * n_g, 8 * n_g, fc_spec, true, rng);
  p.fr2 = make_conv<T>(1, 1, 8 * n_g, 4 * n_g, fc_spec, true, rng);
  p.fc = make_conv<T>(1, 1, 4 * n_g, 2 * n_g, fc_spec, false, rng);
  p.cr_g2 = make_conv<T>(1, 1, in_width, 2 * n_g, Conv2dSpec{}, true, rng);
  p.cr_g3 = make_conv<T>(1, 1, 2 * n_g, n_g, Conv2dSpec{}, true, rng);
  return p;
}

template <typename T>
LtmbParamsT<T> make_ltmb(int width, int growth,
                         const std::vector<int>& dilations, Rng& rng) {
  LtmbParamsT<T> p;
  p.dense = make_dense_block<T>(width, growth, dilations, rng);
  const int deep = width + growth * static_cast<int>(dilations.size());
  p.cr_l = make_conv<T>(1, 1, deep, width, Conv2dSpec{}, true, rng);
  return p;
}

template <typename T>
DecoderParamsT<T> make_decoder(int in_width, int channels, Rng& rng) {
  DecoderParamsT<T> p;
  p.conv = make_conv<T>(3, 3, in_width, 4 * channels, Conv2dSpec{}, false, rng);
  return p;
}

#define MBCNN_INSTANTIATE_BLOCKS(T)                                           \
  template TensorT<T> apply_layer(const ConvLayerT<T>&, const TensorT<T>&);   \
  template TensorT<T> dense_block(const TensorT<T>&,                          \
                                  const DenseBlockParamsT<T>&);               \
  template TensorT<T> mtrb_forward(const TensorT<T>&, const MtrbParamsT<T>&); \
  template TensorT<T> gtmb_gamma(const TensorT<T>&, const GtmbParamsT<T>&);   \
  template TensorT<T> gtmb_forward(const TensorT<T>&, const GtmbParamsT<T>&); \
  template TensorT<T> ltmb_forward(const TensorT<T>&, const LtmbParamsT<T>&); \
  template TensorT<T> upsample_decode(const TensorT<T>&,                      \
                                      const DecoderParamsT<T>&);              \
  template ConvLayerT<T> make_conv<T>(int, int, int, int, const Conv2dSpec&,  \
                                      bool, Rng&);                            \
  template DenseBlockParamsT<T> make_dense_block<T>(                          \
      int, int, const std::vector<int>&, Rng&);                               \
  template MtrbParamsT<T> make_mtrb<T>(int, int, const std::vector<int>&,     \
                                       std::shared_ptr<const DctBasis>,       \
                                       Rng&);                                 \
  template GtmbParamsT<T> make_gtmb<T>(int, int, Rng&);                       \
  template LtmbParamsT<T> make_ltmb<T>(int, int, const std::vector<int>&,     \
                                       Rng&);                                 \
  template DecoderParamsT<T> make_decoder<T>(int, int, Rng&);

MBCNN_INSTANTIATE_BLOCKS(float)
MBCNN_INSTANTIATE_BLOCKS(double)

}  // namespace mbcnn
