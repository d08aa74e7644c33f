#include "mbcnn/ops.hpp"

#include <stdexcept>

namespace mbcnn {
namespace {

// Tape shared by the tracked inputs, nullptr when all are constants.
template <typename T>
TapeT<T>* common_tape(std::initializer_list<const TensorT<T>*> ts) {
  TapeT<T>* tape = nullptr;
  for (const TensorT<T>* t : ts) {
    if (!t->tracked()) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw std::invalid_argument("op inputs recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

}  // namespace

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument("add: shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
  }
  TensorT<T> out(a.shape());
  T* o = out.mutable_data();
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = pa[i] + pb[i];

  TapeT<T>* tape = common_tape<T>({&a, &b});
  if (!tape) return out;
  const int na = a.node(), nb = b.node();
  return tape->emit(std::move(out),
                    [na, nb](const TensorT<T>& up, GradSinkT<T>& sink) {
                      if (na != kNoNode) sink.add(na, up);
                      if (nb != kNoNode) sink.add(nb, up);
                    });
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, const TensorT<T>& s) {
  if (!(s.shape() == Shape{1, 1, 1, 1})) {
    throw std::invalid_argument("scale: s must be a (1,1,1,1) scalar");
  }
  const T sv = s.data()[0];
  TensorT<T> out(x.shape());
  T* o = out.mutable_data();
  const T* px = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = sv * px[i];

  TapeT<T>* tape = common_tape<T>({&x, &s});
  if (!tape) return out;
  const int nx = x.node(), ns = s.node();
  TensorT<T> xc = x.detached();
  return tape->emit(
      std::move(out),
      [nx, ns, sv, xc](const TensorT<T>& up, GradSinkT<T>& sink) {
        if (nx != kNoNode) {
          TensorT<T> gx(xc.shape());
          T* g = gx.mutable_data();
          const T* pu = up.data();
          for (std::size_t i = 0; i < gx.size(); ++i) g[i] = sv * pu[i];
          sink.add(nx, std::move(gx));
        }
        if (ns != kNoNode) {
          T acc = 0;
          const T* pu = up.data();
          const T* px = xc.data();
          for (std::size_t i = 0; i < xc.size(); ++i) acc += pu[i] * px[i];
          sink.add(ns, TensorT<T>::scalar(acc));
        }
      });
}

template <typename T>
TensorT<T> scale_by(const TensorT<T>& x, T c) {
  return scale(x, TensorT<T>::scalar(c));
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> out(x.shape());
  T* o = out.mutable_data();
  const T* px = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = px[i] > T(0) ? px[i] : T(0);

  TapeT<T>* tape = common_tape<T>({&x});
  if (!tape) return out;
  const int nx = x.node();
  TensorT<T> xc = x.detached();
  return tape->emit(std::move(out),
                    [nx, xc](const TensorT<T>& up, GradSinkT<T>& sink) {
                      TensorT<T> gx(xc.shape());
                      T* g = gx.mutable_data();
                      const T* pu = up.data();
                      const T* px = xc.data();
                      // Subgradient 0 at exactly 0.
                      for (std::size_t i = 0; i < gx.size(); ++i) {
                        g[i] = px[i] > T(0) ? pu[i] : T(0);
                      }
                      sink.add(nx, std::move(gx));
                    });
}

template <typename T>
TensorT<T> mul_elementwise(const TensorT<T>& a, const TensorT<T>& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  const bool same = sa == sb;
  const bool channel_vec =
      sb.n == sa.n && sb.h == 1 && sb.w == 1 && sb.c == sa.c;
  if (!same && !channel_vec) {
    throw std::invalid_argument("mul_elementwise: incompatible shapes " +
                                sa.str() + " vs " + sb.str());
  }

  TensorT<T> out(sa);
  T* o = out.mutable_data();
  const T* pa = a.data();
  const T* pb = b.data();
  const std::size_t spatial = static_cast<std::size_t>(sa.h) * sa.w;
  if (same) {
    for (std::size_t i = 0; i < out.size(); ++i) o[i] = pa[i] * pb[i];
  } else {
    for (int n = 0; n < sa.n; ++n) {
      const T* bvec = pb + static_cast<std::size_t>(n) * sa.c;
      const T* arow = pa + static_cast<std::size_t>(n) * spatial * sa.c;
      T* orow = o + static_cast<std::size_t>(n) * spatial * sa.c;
      for (std::size_t p = 0; p < spatial; ++p) {
        for (int ch = 0; ch < sa.c; ++ch) {
          orow[p * sa.c + ch] = arow[p * sa.c + ch] * bvec[ch];
        }
      }
    }
  }

  TapeT<T>* tape = common_tape<T>({&a, &b});
  if (!tape) return out;
  const int na = a.node(), nb = b.node();
  TensorT<T> ac = a.detached();
  TensorT<T> bc = b.detached();
  return tape->emit(
      std::move(out),
      [na, nb, ac, bc, same](const TensorT<T>& up, GradSinkT<T>& sink) {
        const Shape sa = ac.shape();
        const std::size_t spatial = static_cast<std::size_t>(sa.h) * sa.w;
        const T* pu = up.data();
        if (na != kNoNode) {
          TensorT<T> ga(sa);
          T* g = ga.mutable_data();
          const T* pb = bc.data();
          if (same) {
            for (std::size_t i = 0; i < ga.size(); ++i) g[i] = pu[i] * pb[i];
          } else {
            for (int n = 0; n < sa.n; ++n) {
              const T* bvec = pb + static_cast<std::size_t>(n) * sa.c;
              const std::size_t base = static_cast<std::size_t>(n) * spatial * sa.c;
              for (std::size_t p = 0; p < spatial; ++p) {
                for (int ch = 0; ch < sa.c; ++ch) {
                  g[base + p * sa.c + ch] = pu[base + p * sa.c + ch] * bvec[ch];
                }
              }
            }
          }
          sink.add(na, std::move(ga));
        }
        if (nb != kNoNode) {
          TensorT<T> gb(bc.shape());
          T* g = gb.mutable_data();
          const T* pa = ac.data();
          if (same) {
            for (std::size_t i = 0; i < gb.size(); ++i) g[i] = pu[i] * pa[i];
          } else {
            for (int n = 0; n < sa.n; ++n) {
              const std::size_t base = static_cast<std::size_t>(n) * spatial * sa.c;
              T* gvec = g + static_cast<std::size_t>(n) * sa.c;
              for (std::size_t p = 0; p < spatial; ++p) {
                for (int ch = 0; ch < sa.c; ++ch) {
                  gvec[ch] += pu[base + p * sa.c + ch] * pa[base + p * sa.c + ch];
                }
              }
            }
          }
          sink.add(nb, std::move(gb));
        }
      });
}

template <typename T>
TensorT<T> concat_channels(const std::vector<TensorT<T>>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
  const Shape s0 = xs[0].shape();
  int total_c = 0;
  for (const TensorT<T>& x : xs) {
    const Shape s = x.shape();
    if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
      throw std::invalid_argument("concat_channels: spatial mismatch " +
                                  s.str() + " vs " + s0.str());
    }
    total_c += s.c;
  }

  TensorT<T> out(Shape{s0.n, s0.h, s0.w, total_c});
  T* o = out.mutable_data();
  const std::size_t pixels = static_cast<std::size_t>(s0.n) * s0.h * s0.w;
  int c_off = 0;
  for (const TensorT<T>& x : xs) {
    const int c = x.shape().c;
    const T* px = x.data();
    for (std::size_t p = 0; p < pixels; ++p) {
      T* dst = o + p * total_c + c_off;
      const T* src = px + p * c;
      for (int ch = 0; ch < c; ++ch) dst[ch] = src[ch];
    }
    c_off += c;
  }

  std::vector<const TensorT<T>*> ptrs;
  for (const TensorT<T>& x : xs) ptrs.push_back(&x);
  TapeT<T>* tape = nullptr;
  for (const TensorT<T>* t : ptrs) {
    if (t->tracked()) {
      if (tape && tape != t->tape()) {
        throw std::invalid_argument("op inputs recorded on different tapes");
      }
      tape = t->tape();
    }
  }
  if (!tape) return out;

  std::vector<int> nodes;
  std::vector<Shape> shapes;
  for (const TensorT<T>& x : xs) {
    nodes.push_back(x.node());
    shapes.push_back(x.shape());
  }
  return tape->emit(
      std::move(out),
      [nodes, shapes, total_c, pixels](const TensorT<T>& up, GradSinkT<T>& sink) {
        const T* pu = up.data();
        int c_off = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          const int c = shapes[i].c;
          if (nodes[i] != kNoNode) {
            TensorT<T> g(shapes[i]);
            T* pg = g.mutable_data();
            for (std::size_t p = 0; p < pixels; ++p) {
              const T* src = pu + p * total_c + c_off;
              T* dst = pg + p * c;
              for (int ch = 0; ch < c; ++ch) dst[ch] = src[ch];
            }
            sink.add(nodes[i], std::move(g));
          }
          c_off += c;
        }
      });
}

template <typename T>
TensorT<T> sum(const TensorT<T>& x) {
  T acc = 0;
  const T* px = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += px[i];
  TensorT<T> out = TensorT<T>::scalar(acc);

  TapeT<T>* tape = common_tape<T>({&x});
  if (!tape) return out;
  const int nx = x.node();
  const Shape sx = x.shape();
  return tape->emit(std::move(out),
                    [nx, sx](const TensorT<T>& up, GradSinkT<T>& sink) {
                      sink.add(nx, TensorT<T>::full(sx, up.data()[0]));
                    });
}

#define MBCNN_INSTANTIATE_OPS(T)                                         \
  template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);         \
  template TensorT<T> scale(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> scale_by(const TensorT<T>&, T);                    \
  template TensorT<T> relu(const TensorT<T>&);                           \
  template TensorT<T> mul_elementwise(const TensorT<T>&, const TensorT<T>&); \
  template TensorT<T> concat_channels(const std::vector<TensorT<T>>&);   \
  template TensorT<T> sum(const TensorT<T>&);

MBCNN_INSTANTIATE_OPS(float)
MBCNN_INSTANTIATE_OPS(double)

}  // namespace mbcnn
