#include "mbcnn/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mbcnn/layers.hpp"
#include "mbcnn/ops.hpp"

namespace mbcnn {
namespace {

template <typename T>
TapeT<T>* pair_tape(const TensorT<T>& a, const TensorT<T>& b) {
  TapeT<T>* tape = nullptr;
  for (const TensorT<T>* t : {&a, &b}) {
    if (!t->tracked()) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw std::invalid_argument("loss inputs recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

template <typename T>
T sign_of(T v) {
  if (v > T(0)) return T(1);
  if (v < T(0)) return T(-1);
  return T(0);
}

}  // namespace

const SobelBank& sobel_bank() {
  static const SobelBank bank{{{
      {{{{-1, 0, 1}}, {{-2, 0, 2}}, {{-1, 0, 1}}}},
      {{{{-1, -2, -1}}, {{0, 0, 0}}, {{1, 2, 1}}}},
      {{{{0, 1, 2}}, {{-1, 0, 1}}, {{-2, -1, 0}}}},
      {{{{-2, -1, 0}}, {{-1, 0, 1}}, {{0, 1, 2}}}},
  }}};
  return bank;
}

template <typename T>
TensorT<T> bank_kernel(const SobelBank& bank, int channels, int nfilters) {
  if (channels < 1 || nfilters < 1 || nfilters > 4) {
    throw std::invalid_argument("bank_kernel: bad channel or filter count");
  }
  TensorT<T> k(Shape{3, 3, channels, nfilters * channels});
  T* p = k.mutable_data();
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (int ci = 0; ci < channels; ++ci) {
        for (int f = 0; f < nfilters; ++f) {
          p[k.offset(ky, kx, ci, f * channels + ci)] =
              static_cast<T>(bank.kernels[f][ky][kx]);
        }
      }
    }
  }
  return k;
}

LossVariant loss_variant_from_string(const std::string& s) {
  if (s == "l1") return LossVariant::kL1;
  if (s == "l1+sobel") return LossVariant::kL1Sobel;
  if (s == "l1+asl") return LossVariant::kL1Asl;
  throw std::invalid_argument("unknown loss variant: " + s);
}

std::string loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::kL1: return "l1";
    case LossVariant::kL1Sobel: return "l1+sobel";
    case LossVariant::kL1Asl: return "l1+asl";
  }
  throw std::logic_error("bad loss variant");
}

LossConfig default_loss_config(LossVariant v) {
  switch (v) {
    case LossVariant::kL1: return {v, 0.0};
    case LossVariant::kL1Sobel: return {v, 0.5};
    case LossVariant::kL1Asl: return {v, 0.25};
  }
  throw std::logic_error("bad loss variant");
}

template <typename T>
TensorT<T> l1_loss(const TensorT<T>& zhat, const TensorT<T>& z) {
  if (!(zhat.shape() == z.shape())) {
    throw std::invalid_argument("l1_loss: shape mismatch " +
                                zhat.shape().str() + " vs " + z.shape().str());
  }
  const std::size_t n = zhat.size();
  const T* pa = zhat.data();
  const T* pb = z.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::abs(static_cast<double>(pa[i]) - static_cast<double>(pb[i]));
  }
  TensorT<T> out = TensorT<T>::scalar(static_cast<T>(acc / double(n)));

  TapeT<T>* tape = pair_tape(zhat, z);
  if (!tape) return out;
  const int na = zhat.node(), nb = z.node();
  TensorT<T> ac = zhat.detached();
  TensorT<T> bc = z.detached();
  return tape->emit(
      std::move(out),
      [na, nb, ac, bc](const TensorT<T>& up, GradSinkT<T>& sink) {
        const T u = up.data()[0] / static_cast<T>(ac.size());
        const T* pa = ac.data();
        const T* pb = bc.data();
        if (na != kNoNode) {
          TensorT<T> g(ac.shape());
          T* pg = g.mutable_data();
          for (std::size_t i = 0; i < ac.size(); ++i) {
            pg[i] = u * sign_of(pa[i] - pb[i]);
          }
          sink.add(na, std::move(g));
        }
        if (nb != kNoNode) {
          TensorT<T> g(bc.shape());
          T* pg = g.mutable_data();
          for (std::size_t i = 0; i < bc.size(); ++i) {
            pg[i] = -u * sign_of(pa[i] - pb[i]);
          }
          sink.add(nb, std::move(g));
        }
      });
}

namespace {

template <typename T>
TensorT<T> bank_response_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                              const SobelBank& bank, int nfilters) {
  if (!(zhat.shape() == z.shape())) {
    throw std::invalid_argument("filter loss: shape mismatch " +
                                zhat.shape().str() + " vs " + z.shape().str());
  }
  if (zhat.shape().h < 3 || zhat.shape().w < 3) {
    throw std::invalid_argument("filter loss: image smaller than the kernels");
  }
  TensorT<T> k = bank_kernel<T>(bank, zhat.shape().c, nfilters);
  Conv2dSpec spec;
  spec.pad = Padding::kNone;
  TensorT<T> ra = conv2d(zhat, k, TensorT<T>(), spec);
  TensorT<T> rb = conv2d(z, k, TensorT<T>(), spec);
  return l1_loss(ra, rb);
}

}  // namespace

template <typename T>
TensorT<T> sobel_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                      const SobelBank& bank) {
  return bank_response_loss(zhat, z, bank, 2);
}

template <typename T>
TensorT<T> asl_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                    const SobelBank& bank) {
  return bank_response_loss(zhat, z, bank, 4);
}

template <typename T>
TensorT<T> combined_loss(const TensorT<T>& zhat, const TensorT<T>& z,
                         const LossConfig& cfg) {
  if (cfg.lambda < 0.0) {
    throw std::invalid_argument("combined_loss: lambda must be >= 0");
  }
  TensorT<T> base = l1_loss(zhat, z);
  if (cfg.variant == LossVariant::kL1 || cfg.lambda == 0.0) return base;
  TensorT<T> term = cfg.variant == LossVariant::kL1Sobel ? sobel_loss(zhat, z)
                                                         : asl_loss(zhat, z);
  return add(base, scale_by(term, static_cast<T>(cfg.lambda)));
}

template <typename T>
TensorT<T> multiscale_loss(const ScalePyramidT<T>& outs, const TensorT<T>& gt,
                           const LossConfig& cfg) {
  TensorT<T> g1 = gt.detached();
  TensorT<T> g2 = avg_pool(g1, 2);
  TensorT<T> g3 = avg_pool(g1, 4);
  TensorT<T> loss = combined_loss(outs.z1, g1, cfg);
  loss = add(loss, combined_loss(outs.z2, g2, cfg));
  return add(loss, combined_loss(outs.z3, g3, cfg));
}

#define MBCNN_INSTANTIATE_LOSSES(T)                                          \
  template TensorT<T> bank_kernel<T>(const SobelBank&, int, int);            \
  template TensorT<T> l1_loss<T>(const TensorT<T>&, const TensorT<T>&);      \
  template TensorT<T> sobel_loss<T>(const TensorT<T>&, const TensorT<T>&,    \
                                    const SobelBank&);                       \
  template TensorT<T> asl_loss<T>(const TensorT<T>&, const TensorT<T>&,      \
                                  const SobelBank&);                         \
  template TensorT<T> combined_loss<T>(const TensorT<T>&, const TensorT<T>&, \
                                       const LossConfig&);                   \
  template TensorT<T> multiscale_loss<T>(const ScalePyramidT<T>&,            \
                                         const TensorT<T>&, const LossConfig&);

MBCNN_INSTANTIATE_LOSSES(float)
MBCNN_INSTANTIATE_LOSSES(double)

}  // namespace mbcnn
