#include "mbcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mbcnn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(h) + "," +
         std::to_string(w) + "," + std::to_string(c) + ")";
}

template <typename T>
TensorT<T>::TensorT(Shape s, std::vector<T> values) : shape_(s) {
  if (values.size() != s.count()) {
    throw std::invalid_argument("tensor: value count " +
                                std::to_string(values.size()) +
                                " does not match shape " + s.str());
  }
  data_ = std::make_shared<std::vector<T>>(std::move(values));
}

template <typename T>
TensorT<T> TensorT<T>::full(Shape s, T value) {
  TensorT t(s);
  std::fill(t.data_->begin(), t.data_->end(), value);
  return t;
}

template <typename T>
TensorT<T> TensorT<T>::vec(std::initializer_list<T> values) {
  return TensorT(Shape{1, 1, 1, static_cast<int>(values.size())},
                 std::vector<T>(values));
}

template <typename T>
T* TensorT<T>::mutable_data() {
  if (!data_) throw std::logic_error("tensor: mutable access to empty tensor");
  if (data_.use_count() != 1) {
    data_ = std::make_shared<std::vector<T>>(*data_);
  }
  return data_->data();
}

template <typename T>
TensorT<T> TensorT<T>::detached() const {
  TensorT t;
  t.shape_ = shape_;
  t.data_ = data_;
  return t;
}

template <typename T>
template <typename U>
TensorT<U> TensorT<T>::cast() const {
  TensorT<U> out(shape_);
  U* o = out.mutable_data();
  const T* s = data();
  for (std::size_t i = 0; i < size(); ++i) o[i] = static_cast<U>(s[i]);
  return out;
}

template <typename T>
void accumulate(TensorT<T>& dst, const TensorT<T>& src) {
  if (!(dst.shape() == src.shape())) {
    throw std::invalid_argument("accumulate: shape mismatch " +
                                dst.shape().str() + " vs " +
                                src.shape().str());
  }
  T* d = dst.mutable_data();
  const T* s = src.data();
  const std::size_t count = dst.size();
  for (std::size_t i = 0; i < count; ++i) d[i] += s[i];
}

template <typename T>
TensorT<T> clamp01(const TensorT<T>& t) {
  TensorT<T> out(t.shape());
  T* o = out.mutable_data();
  const T* s = t.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    o[i] = std::min(T(1), std::max(T(0), s[i]));
  }
  return out;
}

template <typename T>
TensorT<T> rot90(const TensorT<T>& t, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return t.detached();
  const Shape s = t.shape();
  const bool swap = (k % 2) == 1;
  Shape os{s.n, swap ? s.w : s.h, swap ? s.h : s.w, s.c};
  TensorT<T> out(os);
  T* o = out.mutable_data();
  const T* src = t.data();
  for (int b = 0; b < s.n; ++b) {
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        // Counterclockwise: out(y,x) = in(x, W-1-y) for one quarter turn.
        int sy = 0, sx = 0;
        switch (k) {
          case 1: sy = x; sx = s.w - 1 - y; break;
          case 2: sy = s.h - 1 - y; sx = s.w - 1 - x; break;
          default: sy = s.h - 1 - x; sx = y; break;
        }
        const T* in_px = src + t.offset(b, sy, sx, 0);
        T* out_px = o + out.offset(b, y, x, 0);
        for (int ch = 0; ch < s.c; ++ch) out_px[ch] = in_px[ch];
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> crop(const TensorT<T>& t, int y0, int x0, int h, int w) {
  const Shape s = t.shape();
  if (y0 < 0 || x0 < 0 || y0 + h > s.h || x0 + w > s.w) {
    throw std::invalid_argument("crop: window out of bounds");
  }
  TensorT<T> out(Shape{s.n, h, w, s.c});
  T* o = out.mutable_data();
  const T* src = t.data();
  const std::size_t row = static_cast<std::size_t>(w) * s.c;
  for (int b = 0; b < s.n; ++b) {
    for (int y = 0; y < h; ++y) {
      std::copy_n(src + t.offset(b, y0 + y, x0, 0), row,
                  o + out.offset(b, y, 0, 0));
    }
  }
  return out;
}

template <typename T>
TensorT<T> pad_reflect_to(const TensorT<T>& t, int h, int w) {
  const Shape s = t.shape();
  if (h < s.h || w < s.w) throw std::invalid_argument("pad_reflect_to: target smaller than input");
  if (h >= 2 * s.h || w >= 2 * s.w) {
    throw std::invalid_argument("pad_reflect_to: padding must be smaller than the image");
  }
  if (h == s.h && w == s.w) return t.detached();
  TensorT<T> out(Shape{s.n, h, w, s.c});
  T* o = out.mutable_data();
  const T* src = t.data();
  for (int b = 0; b < s.n; ++b) {
    for (int y = 0; y < h; ++y) {
      const int sy = y < s.h ? y : 2 * (s.h - 1) - y;
      for (int x = 0; x < w; ++x) {
        const int sx = x < s.w ? x : 2 * (s.w - 1) - x;
        const T* in_px = src + t.offset(b, sy, sx, 0);
        T* out_px = o + out.offset(b, y, x, 0);
        for (int ch = 0; ch < s.c; ++ch) out_px[ch] = in_px[ch];
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> avg_pool(const TensorT<T>& t, int factor) {
  const Shape s = t.shape();
  if (factor < 1 || s.h % factor != 0 || s.w % factor != 0) {
    throw std::invalid_argument("avg_pool: spatial dims must divide by factor");
  }
  const Shape os{s.n, s.h / factor, s.w / factor, s.c};
  TensorT<T> out(os);
  T* o = out.mutable_data();
  const T* src = t.data();
  const T inv = T(1) / static_cast<T>(factor * factor);
  for (int b = 0; b < s.n; ++b) {
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        T* out_px = o + out.offset(b, y, x, 0);
        for (int ch = 0; ch < s.c; ++ch) {
          T acc = 0;
          for (int dy = 0; dy < factor; ++dy) {
            for (int dx = 0; dx < factor; ++dx) {
              acc += src[t.offset(b, y * factor + dy, x * factor + dx, ch)];
            }
          }
          out_px[ch] = acc * inv;
        }
      }
    }
  }
  return out;
}

template <typename T>
bool bitwise_equal(const TensorT<T>& a, const TensorT<T>& b) {
  if (!(a.shape() == b.shape())) return false;
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(&pa[i], &pb[i], sizeof(T)) != 0) return false;
  }
  return true;
}

template <typename T>
double max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  }
  double m = 0;
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(pa[i]) - pb[i]));
  }
  return m;
}

#define MBCNN_INSTANTIATE_TENSOR(T)                                    \
  template class TensorT<T>;                                           \
  template void accumulate(TensorT<T>&, const TensorT<T>&);            \
  template TensorT<T> clamp01(const TensorT<T>&);                      \
  template TensorT<T> rot90(const TensorT<T>&, int);                   \
  template TensorT<T> crop(const TensorT<T>&, int, int, int, int);     \
  template TensorT<T> pad_reflect_to(const TensorT<T>&, int, int);        \
  template TensorT<T> avg_pool(const TensorT<T>&, int);                \
  template bool bitwise_equal(const TensorT<T>&, const TensorT<T>&);   \
  template double max_abs_diff(const TensorT<T>&, const TensorT<T>&);

MBCNN_INSTANTIATE_TENSOR(float)
MBCNN_INSTANTIATE_TENSOR(double)

template TensorT<double> TensorT<float>::cast<double>() const;
template TensorT<float> TensorT<double>::cast<float>() const;
template TensorT<float> TensorT<float>::cast<float>() const;
template TensorT<double> TensorT<double>::cast<double>() const;

}  // namespace mbcnn
