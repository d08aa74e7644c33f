#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace mbcnn {

// Dense 4-D shape: batch, height, width, channels.
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

template <typename T>
class TapeT;

inline constexpr int kNoNode = -1;

// Dense 4-D tensor in row-major (batch-major, channel-minor) order.
// Copies share the underlying buffer; mutable_data() copies on write when
// the buffer is shared. A tensor with node() == kNoNode is a constant and
// takes no part in gradient computation.
template <typename T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(Shape s)
      : shape_(s),
        data_(std::make_shared<std::vector<T>>(s.count(), T(0))) {}
  TensorT(Shape s, std::vector<T> values);

  static TensorT zeros(Shape s) { return TensorT(s); }
  static TensorT full(Shape s, T value);
  static TensorT ones(Shape s) { return full(s, T(1)); }
  static TensorT scalar(T value) { return full(Shape{1, 1, 1, 1}, value); }
  // Flat 1xN channel vector (1,1,1,n) from a list; handy in tests.
  static TensorT vec(std::initializer_list<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return shape_.count(); }
  bool empty() const { return data_ == nullptr; }

  const T* data() const { return data_->data(); }
  T* mutable_data();

  std::size_t offset(int b, int y, int x, int ch) const {
    return ((static_cast<std::size_t>(b) * shape_.h + y) * shape_.w + x) *
               shape_.c +
           ch;
  }
  T at(int b, int y, int x, int ch) const {
    return (*data_)[offset(b, y, x, ch)];
  }

  int node() const { return node_; }
  TapeT<T>* tape() const { return tape_; }
  bool tracked() const { return node_ != kNoNode; }
  // Same buffer, no tape linkage.
  TensorT detached() const;

  template <typename U>
  TensorT<U> cast() const;

 private:
  friend class TapeT<T>;
  Shape shape_{};
  std::shared_ptr<std::vector<T>> data_;
  TapeT<T>* tape_ = nullptr;
  int node_ = kNoNode;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// ---- plain (non-differentiable) tensor utilities ----

// dst += src, elementwise. Shapes must match.
template <typename T>
void accumulate(TensorT<T>& dst, const TensorT<T>& src);

template <typename T>
TensorT<T> clamp01(const TensorT<T>& t);

// Quarter-turn counterclockwise rotations of the spatial grid, k in [0,4).
template <typename T>
TensorT<T> rot90(const TensorT<T>& t, int k);

template <typename T>
TensorT<T> crop(const TensorT<T>& t, int y0, int x0, int h, int w);

// Reflect-pad (edge not repeated) on the bottom/right to reach (h, w).
template <typename T>
TensorT<T> pad_reflect_to(const TensorT<T>& t, int h, int w);

// Box average pooling by an integer factor; spatial dims must divide.
template <typename T>
TensorT<T> avg_pool(const TensorT<T>& t, int factor);

template <typename T>
bool bitwise_equal(const TensorT<T>& a, const TensorT<T>& b);

template <typename T>
double max_abs_diff(const TensorT<T>& a, const TensorT<T>& b);

}  // namespace mbcnn
