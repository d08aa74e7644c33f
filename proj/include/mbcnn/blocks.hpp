#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mbcnn/dct.hpp"
#include "mbcnn/layers.hpp"
#include "mbcnn/rng.hpp"
#include "mbcnn/tape.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

template <typename T>
struct ConvLayerT {
  TensorT<T> kernel;  // (kh, kw, in_ch, out_ch)
  TensorT<T> bias;    // (1,1,1,out_ch), empty = none
  Conv2dSpec spec;
  bool relu = false;
};

// K conv-relu layers, each consuming the running concatenation:
//   F_j = concat(F_{j-1}, ConvReLU_j(F_{j-1})), F_0 = x
template <typename T>
struct DenseBlockParamsT {
  std::vector<ConvLayerT<T>> layers;
  int width = 0;   // W, input channels
  int growth = 0;  // n_D per layer
};

template <typename T>
struct MtrbParamsT {
  DenseBlockParamsT<T> dense;
  ConvLayerT<T> c_m1;   // 3x3 -> p^2, linear
  TensorT<T> passband;  // (1,1,1,p^2), non-negative
  std::shared_ptr<const DctBasis> basis;
  ConvLayerT<T> c_m2;  // 3x3 -> W, linear
  TensorT<T> fsl;      // scalar feature-scaling factor
};

template <typename T>
struct GtmbParamsT {
  ConvLayerT<T> cr_g1;  // 3x3 stride 2 -> 2n_G, relu
  ConvLayerT<T> fr1;    // fc 2n_G -> 8n_G, relu
  ConvLayerT<T> fr2;    // fc 8n_G -> 4n_G, relu
  ConvLayerT<T> fc;     // fc 4n_G -> 2n_G, linear
  ConvLayerT<T> cr_g2;  // 1x1 -> 2n_G, relu
  ConvLayerT<T> cr_g3;  // 1x1 -> n_G, relu
};

template <typename T>
struct LtmbParamsT {
  DenseBlockParamsT<T> dense;
  ConvLayerT<T> cr_l;  // 1x1 -> W, relu
};

template <typename T>
struct DecoderParamsT {
  ConvLayerT<T> conv;  // 3x3 -> 4c, linear
};

template <typename T>
TensorT<T> apply_layer(const ConvLayerT<T>& l, const TensorT<T>& x);

template <typename T>
TensorT<T> dense_block(const TensorT<T>& x, const DenseBlockParamsT<T>& p);

// x + fsl * c_m2(IDCT(theta . c_m1(dense(x))))
template <typename T>
TensorT<T> mtrb_forward(const TensorT<T>& x, const MtrbParamsT<T>& p);

// cr_g3(gamma (.) cr_g2(x)) with gamma = fc(fr2(fr1(GAP(cr_g1(x)))))
template <typename T>
TensorT<T> gtmb_forward(const TensorT<T>& x, const GtmbParamsT<T>& p);

template <typename T>
TensorT<T> gtmb_gamma(const TensorT<T>& x, const GtmbParamsT<T>& p);

template <typename T>
TensorT<T> ltmb_forward(const TensorT<T>& x, const LtmbParamsT<T>& p);

// 3x3 conv to 4c channels, then x2 pixel shuffle; output stays unclamped.
template <typename T>
TensorT<T> upsample_decode(const TensorT<T>& x, const DecoderParamsT<T>& p);

// builders draw kernels He-uniform in construction order, biases start at 0
template <typename T>
ConvLayerT<T> make_conv(int kh, int kw, int ci, int co, const Conv2dSpec& spec,
                        bool relu, Rng& rng);
template <typename T>
DenseBlockParamsT<T> make_dense_block(int width, int growth,
                                      const std::vector<int>& dilations,
                                      Rng& rng);
template <typename T>
MtrbParamsT<T> make_mtrb(int width, int growth,
                         const std::vector<int>& dilations,
                         std::shared_ptr<const DctBasis> basis, Rng& rng);
template <typename T>
GtmbParamsT<T> make_gtmb(int in_width, int n_g, Rng& rng);
template <typename T>
LtmbParamsT<T> make_ltmb(int width, int growth,
                         const std::vector<int>& dilations, Rng& rng);
template <typename T>
DecoderParamsT<T> make_decoder(int in_width, int channels, Rng& rng);

// Enumerates every parameter tensor as (name, tensor&) in a fixed order.
template <typename T, typename F>
void visit_params(ConvLayerT<T>& l, const std::string& name, F&& f) {
  f(name + "/kernel", l.kernel);
  if (!l.bias.empty()) f(name + "/bias", l.bias);
}

template <typename T, typename F>
void visit_params(DenseBlockParamsT<T>& p, const std::string& name, F&& f) {
  for (std::size_t j = 0; j < p.layers.size(); ++j) {
    visit_params(p.layers[j], name + "/conv" + std::to_string(j + 1), f);
  }
}

template <typename T, typename F>
void visit_params(MtrbParamsT<T>& p, const std::string& name, F&& f) {
  visit_params(p.dense, name + "/dense", f);
  visit_params(p.c_m1, name + "/c_m1", f);
  f(name + "/passband", p.passband);
  visit_params(p.c_m2, name + "/c_m2", f);
  f(name + "/fsl", p.fsl);
}

template <typename T, typename F>
void visit_params(GtmbParamsT<T>& p, const std::string& name, F&& f) {
  visit_params(p.cr_g1, name + "/cr_g1", f);
  visit_params(p.fr1, name + "/fr1", f);
  visit_params(p.fr2, name + "/fr2", f);
  visit_params(p.fc, name + "/fc", f);
  visit_params(p.cr_g2, name + "/cr_g2", f);
  visit_params(p.cr_g3, name + "/cr_g3", f);
}

template <typename T, typename F>
void visit_params(LtmbParamsT<T>& p, const std::string& name, F&& f) {
  visit_params(p.dense, name + "/dense", f);
  visit_params(p.cr_l, name + "/cr_l", f);
}

template <typename T, typename F>
void visit_params(DecoderParamsT<T>& p, const std::string& name, F&& f) {
  visit_params(p.conv, name + "/conv", f);
}

template <typename P>
std::size_t param_count(P params) {  // by value: visit wants mutability
  std::size_t n = 0;
  visit_params(params, "", [&n](const std::string&, auto& t) { n += t.size(); });
  return n;
}

// Copy of the params with every tensor registered as a tape leaf.
template <typename T, typename P>
P track_params(const P& params, TapeT<T>& tape) {
  P copy = params;
  visit_params(copy, "",
               [&tape](const std::string&, TensorT<T>& t) { t = tape.leaf(t); });
  return copy;
}

}  // namespace mbcnn
