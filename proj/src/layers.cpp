#include "mbcnn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "mbcnn/tape.hpp"

namespace mbcnn {

int conv_out_dim(int in, int k, int stride, int dil, Padding pad) {
  const int eff = (k - 1) * dil + 1;
  if (pad == Padding::kSame) return (in + stride - 1) / stride;
  if (in < eff) throw std::invalid_argument("conv2d: input smaller than kernel");
  return (in - eff) / stride + 1;
}

int conv_pad_begin(int in, int k, int stride, int dil, Padding pad) {
  if (pad == Padding::kNone) return 0;
  const int eff = (k - 1) * dil + 1;
  const int out = (in + stride - 1) / stride;
  const int total = std::max(0, (out - 1) * stride + eff - in);
  return total / 2;
}

namespace {

template <typename T>
void conv2d_forward(const TensorT<T>& x, const TensorT<T>& kernel,
                    const TensorT<T>& bias, const Conv2dSpec& sp,
                    TensorT<T>& out) {
  const Shape xs = x.shape();
  const Shape ks = kernel.shape();
  const Shape os = out.shape();
  const int kh = ks.n, kw = ks.h, ci_n = ks.w, co_n = ks.c;
  const int pby = conv_pad_begin(xs.h, kh, sp.stride_y, sp.dil_y, sp.pad);
  const int pbx = conv_pad_begin(xs.w, kw, sp.stride_x, sp.dil_x, sp.pad);
  const T* px = x.data();
  const T* pk = kernel.data();
  const T* pb = bias.empty() ? nullptr : bias.data();
  T* po = out.mutable_data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < os.n; ++n) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        T* out_px = po + out.offset(n, oy, ox, 0);
        if (pb) {
          for (int co = 0; co < co_n; ++co) out_px[co] = pb[co];
        } else {
          for (int co = 0; co < co_n; ++co) out_px[co] = T(0);
        }
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * sp.stride_y - pby + ky * sp.dil_y;
          if (iy < 0 || iy >= xs.h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = ox * sp.stride_x - pbx + kx * sp.dil_x;
            if (ix < 0 || ix >= xs.w) continue;
            const T* in_px = px + x.offset(n, iy, ix, 0);
            const T* krow = pk + kernel.offset(ky, kx, 0, 0);
            for (int ci = 0; ci < ci_n; ++ci) {
              const T v = in_px[ci];
              const T* kr = krow + static_cast<std::size_t>(ci) * co_n;
              for (int co = 0; co < co_n; ++co) out_px[co] += v * kr[co];
            }
          }
        }
      }
    }
  }
}

// Gather form: every input element is produced by exactly one thread with a
// fixed summation order, so results do not depend on the thread count.
template <typename T>
void conv2d_backward_input(const TensorT<T>& up, const TensorT<T>& kernel,
                           const Conv2dSpec& sp, int pby, int pbx,
                           TensorT<T>& gin) {
  const Shape xs = gin.shape();
  const Shape ks = kernel.shape();
  const Shape os = up.shape();
  const int kh = ks.n, kw = ks.h, ci_n = ks.w, co_n = ks.c;
  const T* pu = up.data();
  const T* pk = kernel.data();
  T* pg = gin.mutable_data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int y = 0; y < xs.h; ++y) {
      for (int x = 0; x < xs.w; ++x) {
        T* g_px = pg + gin.offset(n, y, x, 0);
        for (int ci = 0; ci < ci_n; ++ci) g_px[ci] = T(0);
        for (int ky = 0; ky < kh; ++ky) {
          const int ty = y + pby - ky * sp.dil_y;
          if (ty < 0 || ty % sp.stride_y != 0) continue;
          const int oy = ty / sp.stride_y;
          if (oy >= os.h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int tx = x + pbx - kx * sp.dil_x;
            if (tx < 0 || tx % sp.stride_x != 0) continue;
            const int ox = tx / sp.stride_x;
            if (ox >= os.w) continue;
            const T* up_px = pu + up.offset(n, oy, ox, 0);
            const T* krow = pk + kernel.offset(ky, kx, 0, 0);
            for (int ci = 0; ci < ci_n; ++ci) {
              const T* kr = krow + static_cast<std::size_t>(ci) * co_n;
              T acc = T(0);
              for (int co = 0; co < co_n; ++co) acc += up_px[co] * kr[co];
              g_px[ci] += acc;
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_kernel(const TensorT<T>& x, const TensorT<T>& up,
                            const Conv2dSpec& sp, int pby, int pbx,
                            TensorT<T>& gk) {
  const Shape xs = x.shape();
  const Shape ks = gk.shape();
  const Shape os = up.shape();
  const int kh = ks.n, kw = ks.h, ci_n = ks.w, co_n = ks.c;
  const T* px = x.data();
  const T* pu = up.data();
  T* pg = gk.mutable_data();
  const int slices = kh * kw * ci_n;

#pragma omp parallel for schedule(static)
  for (int s = 0; s < slices; ++s) {
    const int ky = s / (kw * ci_n);
    const int kx = (s / ci_n) % kw;
    const int ci = s % ci_n;
    T* gk_row = pg + gk.offset(ky, kx, ci, 0);
    for (int co = 0; co < co_n; ++co) gk_row[co] = T(0);
    for (int n = 0; n < os.n; ++n) {
      for (int oy = 0; oy < os.h; ++oy) {
        const int iy = oy * sp.stride_y - pby + ky * sp.dil_y;
        if (iy < 0 || iy >= xs.h) continue;
        for (int ox = 0; ox < os.w; ++ox) {
          const int ix = ox * sp.stride_x - pbx + kx * sp.dil_x;
          if (ix < 0 || ix >= xs.w) continue;
          const T v = px[x.offset(n, iy, ix, ci)];
          const T* up_px = pu + up.offset(n, oy, ox, 0);
          for (int co = 0; co < co_n; ++co) gk_row[co] += v * up_px[co];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& kernel,
                  const TensorT<T>& bias, const Conv2dSpec& sp) {
  const Shape xs = x.shape();
  const Shape ks = kernel.shape();
  if (ks.w != xs.c) {
    throw std::invalid_argument("conv2d: kernel expects " +
                                std::to_string(ks.w) + " input channels, got " +
                                std::to_string(xs.c));
  }
  if (!bias.empty() && !(bias.shape() == Shape{1, 1, 1, ks.c})) {
    throw std::invalid_argument("conv2d: bias must be (1,1,1," +
                                std::to_string(ks.c) + ")");
  }
  if (sp.stride_y < 1 || sp.stride_x < 1 || sp.dil_y < 1 || sp.dil_x < 1) {
    throw std::invalid_argument("conv2d: stride and dilation must be >= 1");
  }

  const int oh = conv_out_dim(xs.h, ks.n, sp.stride_y, sp.dil_y, sp.pad);
  const int ow = conv_out_dim(xs.w, ks.h, sp.stride_x, sp.dil_x, sp.pad);
  TensorT<T> out(Shape{xs.n, oh, ow, ks.c});
  conv2d_forward(x, kernel, bias, sp, out);

  TapeT<T>* tape = nullptr;
  for (const TensorT<T>* t : {&x, &kernel, &bias}) {
    if (!t->tracked()) continue;
    if (tape && tape != t->tape()) {
      throw std::invalid_argument("op inputs recorded on different tapes");
    }
    tape = t->tape();
  }
  if (!tape) return out;

  const int nx = x.node(), nk = kernel.node(), nb = bias.node();
  TensorT<T> xc = x.detached();
  TensorT<T> kc = kernel.detached();
  const int pby = conv_pad_begin(xs.h, ks.n, sp.stride_y, sp.dil_y, sp.pad);
  const int pbx = conv_pad_begin(xs.w, ks.h, sp.stride_x, sp.dil_x, sp.pad);
  return tape->emit(
      std::move(out),
      [nx, nk, nb, xc, kc, sp, pby, pbx](const TensorT<T>& up,
                                         GradSinkT<T>& sink) {
        if (nx != kNoNode) {
          TensorT<T> gin(xc.shape());
          conv2d_backward_input(up, kc, sp, pby, pbx, gin);
          sink.add(nx, std::move(gin));
        }
        if (nk != kNoNode) {
          TensorT<T> gk(kc.shape());
          conv2d_backward_kernel(xc, up, sp, pby, pbx, gk);
          sink.add(nk, std::move(gk));
        }
        if (nb != kNoNode) {
          const Shape os = up.shape();
          TensorT<T> gb(Shape{1, 1, 1, os.c});
          T* pg = gb.mutable_data();
          const T* pu = up.data();
          const std::size_t pixels =
              static_cast<std::size_t>(os.n) * os.h * os.w;
          for (std::size_t p = 0; p < pixels; ++p) {
            for (int co = 0; co < os.c; ++co) pg[co] += pu[p * os.c + co];
          }
          sink.add(nb, std::move(gb));
        }
      });
}

template <typename T>
TensorT<T> fully_connected(const TensorT<T>& x, const TensorT<T>& weight,
                           const TensorT<T>& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (xs.h != 1 || xs.w != 1) {
    throw std::invalid_argument("fully_connected: input must be (N,1,1,C)");
  }
  if (ws.n != 1 || ws.h != 1) {
    throw std::invalid_argument("fully_connected: weight must be (1,1,Cin,Cout)");
  }
  Conv2dSpec sp;
  sp.pad = Padding::kNone;
  return conv2d(x, weight, bias, sp);
}

template <typename T>
TensorT<T> global_avg_pool(const TensorT<T>& x) {
  const Shape xs = x.shape();
  TensorT<T> out(Shape{xs.n, 1, 1, xs.c});
  T* po = out.mutable_data();
  const T* px = x.data();
  const std::size_t spatial = static_cast<std::size_t>(xs.h) * xs.w;
  const T inv = T(1) / static_cast<T>(spatial);
  for (int n = 0; n < xs.n; ++n) {
    T* orow = po + static_cast<std::size_t>(n) * xs.c;
    const T* base = px + static_cast<std::size_t>(n) * spatial * xs.c;
    for (int c = 0; c < xs.c; ++c) orow[c] = T(0);
    for (std::size_t p = 0; p < spatial; ++p) {
      for (int c = 0; c < xs.c; ++c) orow[c] += base[p * xs.c + c];
    }
    for (int c = 0; c < xs.c; ++c) orow[c] *= inv;
  }

  if (!x.tracked()) return out;
  const int nx = x.node();
  return x.tape()->emit(
      std::move(out), [nx, xs](const TensorT<T>& up, GradSinkT<T>& sink) {
        const std::size_t spatial = static_cast<std::size_t>(xs.h) * xs.w;
        const T inv = T(1) / static_cast<T>(spatial);
        TensorT<T> g(xs);
        T* pg = g.mutable_data();
        const T* pu = up.data();
        for (int n = 0; n < xs.n; ++n) {
          const T* urow = pu + static_cast<std::size_t>(n) * xs.c;
          T* base = pg + static_cast<std::size_t>(n) * spatial * xs.c;
          for (std::size_t p = 0; p < spatial; ++p) {
            for (int c = 0; c < xs.c; ++c) base[p * xs.c + c] = urow[c] * inv;
          }
        }
        sink.add(nx, std::move(g));
      });
}

namespace {

template <typename T>
TensorT<T> shuffle_raw(const TensorT<T>& x, int r) {
  const Shape xs = x.shape();
  const int oc = xs.c / (r * r);
  TensorT<T> out(Shape{xs.n, xs.h * r, xs.w * r, oc});
  T* po = out.mutable_data();
  const T* px = x.data();
  const Shape os = out.shape();
  for (int n = 0; n < os.n; ++n) {
    for (int y = 0; y < os.h; ++y) {
      for (int x2 = 0; x2 < os.w; ++x2) {
        const int sy = y / r, sx = x2 / r;
        const int base = (y % r) * r + (x2 % r);
        const T* in_px = px + x.offset(n, sy, sx, 0);
        T* out_px = po + out.offset(n, y, x2, 0);
        for (int c = 0; c < oc; ++c) out_px[c] = in_px[c * r * r + base];
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> unshuffle_raw(const TensorT<T>& x, int r) {
  const Shape xs = x.shape();
  TensorT<T> out(Shape{xs.n, xs.h / r, xs.w / r, xs.c * r * r});
  T* po = out.mutable_data();
  const T* px = x.data();
  const Shape os = out.shape();
  for (int n = 0; n < os.n; ++n) {
    for (int y = 0; y < os.h; ++y) {
      for (int x2 = 0; x2 < os.w; ++x2) {
        T* out_px = po + out.offset(n, y, x2, 0);
        for (int c = 0; c < xs.c; ++c) {
          for (int dy = 0; dy < r; ++dy) {
            for (int dx = 0; dx < r; ++dx) {
              out_px[c * r * r + dy * r + dx] =
                  px[x.offset(n, y * r + dy, x2 * r + dx, c)];
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x, int r) {
  const Shape xs = x.shape();
  if (r < 1 || xs.c % (r * r) != 0) {
    throw std::invalid_argument("pixel_shuffle: channels must divide by r^2");
  }
  TensorT<T> out = shuffle_raw(x, r);
  if (!x.tracked()) return out;
  const int nx = x.node();
  return x.tape()->emit(std::move(out),
                        [nx, r](const TensorT<T>& up, GradSinkT<T>& sink) {
                          sink.add(nx, unshuffle_raw(up, r));
                        });
}

template <typename T>
TensorT<T> pixel_unshuffle(const TensorT<T>& x, int r) {
  const Shape xs = x.shape();
  if (r < 1 || xs.h % r != 0 || xs.w % r != 0) {
    throw std::invalid_argument("pixel_unshuffle: spatial dims must divide by r");
  }
  TensorT<T> out = unshuffle_raw(x, r);
  if (!x.tracked()) return out;
  const int nx = x.node();
  return x.tape()->emit(std::move(out),
                        [nx, r](const TensorT<T>& up, GradSinkT<T>& sink) {
                          sink.add(nx, shuffle_raw(up, r));
                        });
}

template <typename T>
TensorT<T> he_uniform(Shape ks, Rng& rng) {
  const double fan_in = static_cast<double>(ks.n) * ks.h * ks.w;
  const double bound = std::sqrt(6.0 / fan_in);
  TensorT<T> t(ks);
  T* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    p[i] = static_cast<T>(rng.uniform(-bound, bound));
  }
  return t;
}

#define MBCNN_INSTANTIATE_LAYERS(T)                                          \
  template TensorT<T> conv2d(const TensorT<T>&, const TensorT<T>&,           \
                             const TensorT<T>&, const Conv2dSpec&);          \
  template TensorT<T> fully_connected(const TensorT<T>&, const TensorT<T>&,  \
                                      const TensorT<T>&);                    \
  template TensorT<T> global_avg_pool(const TensorT<T>&);                    \
  template TensorT<T> pixel_shuffle(const TensorT<T>&, int);                 \
  template TensorT<T> pixel_unshuffle(const TensorT<T>&, int);               \
  template TensorT<T> he_uniform<T>(Shape, Rng&);

MBCNN_INSTANTIATE_LAYERS(float)
MBCNN_INSTANTIATE_LAYERS(double)

}  // namespace mbcnn
