#include "mbcnn/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbcnn {
namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& gauss_window() {
  static const std::array<double, kWin> w = [] {
    std::array<double, kWin> g{};
    const double sigma = 1.5;
    double total = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      total += g[i];
    }
    for (double& v : g) v /= total;
    return g;
  }();
  return w;
}

template <typename T>
void check_same(const TensorT<T>& a, const TensorT<T>& b, const char* who) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                a.shape().str() + " vs " + b.shape().str());
  }
}

}  // namespace

template <typename T>
double mse(const TensorT<T>& a, const TensorT<T>& b) {
  check_same(a, b, "mse");
  const T* pa = a.data();
  const T* pb = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double m) {
  if (m < 0.0) throw std::invalid_argument("psnr: negative mse");
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

template <typename T>
double psnr(const TensorT<T>& a, const TensorT<T>& b) {
  return psnr_from_mse(mse(a, b));
}

template <typename T>
double ssim(const TensorT<T>& a, const TensorT<T>& b) {
  check_same(a, b, "ssim");
  const Shape s = a.shape();
  if (s.h < kWin || s.w < kWin) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  const auto& g = gauss_window();
  const T* pa = a.data();
  const T* pb = b.data();
  double total = 0.0;
  std::size_t windows = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y0 = 0; y0 + kWin <= s.h; ++y0) {
        for (int x0 = 0; x0 + kWin <= s.w; ++x0) {
          double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
          for (int i = 0; i < kWin; ++i) {
            for (int j = 0; j < kWin; ++j) {
              const double w = g[i] * g[j];
              const double va =
                  pa[a.offset(n, y0 + i, x0 + j, c)];
              const double vb =
                  pb[b.offset(n, y0 + i, x0 + j, c)];
              sa += w * va;
              sb += w * vb;
              // product grouped (va*vb) so the result is symmetric bitwise
              saa += w * (va * va);
              sbb += w * (vb * vb);
              sab += w * (va * vb);
            }
          }
          const double var_a = saa - sa * sa;
          const double var_b = sbb - sb * sb;
          const double cov = sab - sa * sb;
          const double num = (2.0 * sa * sb + kC1) * (2.0 * cov + kC2);
          const double den =
              (sa * sa + sb * sb + kC1) * (var_a + var_b + kC2);
          total += num / den;
          ++windows;
        }
      }
    }
  }
  return total / static_cast<double>(windows);
}

#define MBCNN_INSTANTIATE_METRICS(T)                                \
  template double mse<T>(const TensorT<T>&, const TensorT<T>&);     \
  template double psnr<T>(const TensorT<T>&, const TensorT<T>&);    \
  template double ssim<T>(const TensorT<T>&, const TensorT<T>&);

MBCNN_INSTANTIATE_METRICS(float)
MBCNN_INSTANTIATE_METRICS(double)

}  // namespace mbcnn
