#include "doctest.h"
#include "mbcnn/gradcheck.hpp"
#include "mbcnn/layers.hpp"
#include "mbcnn/ops.hpp"
#include "mbcnn/rng.hpp"
#include "mbcnn/tape.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace mbcnn;

namespace {

template <typename T>
TensorT<T> random_tensor(Shape s, Rng& rng) {
  TensorT<T> t(s);
  T* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    p[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
  }
  return t;
}

// Reference convolution: build an explicitly zero-padded copy, then apply the
// definition with plain loops. Shares no code with the library kernel.
template <typename T>
TensorT<T> conv_naive(const TensorT<T>& x, const TensorT<T>& k,
                      const TensorT<T>& b, const Conv2dSpec& sp) {
  const Shape xs = x.shape();
  const Shape ks = k.shape();
  const int effh = (ks.n - 1) * sp.dil_y + 1;
  const int effw = (ks.h - 1) * sp.dil_x + 1;
  int oh, ow, pby, pbx;
  if (sp.pad == Padding::kSame) {
    oh = (xs.h + sp.stride_y - 1) / sp.stride_y;
    ow = (xs.w + sp.stride_x - 1) / sp.stride_x;
    const int ty = std::max(0, (oh - 1) * sp.stride_y + effh - xs.h);
    const int tx = std::max(0, (ow - 1) * sp.stride_x + effw - xs.w);
    pby = ty / 2;
    pbx = tx / 2;
  } else {
    oh = (xs.h - effh) / sp.stride_y + 1;
    ow = (xs.w - effw) / sp.stride_x + 1;
    pby = pbx = 0;
  }

  // generous zero frame so every tap lands inside
  const int ph = xs.h + effh * 2, pw = xs.w + effw * 2;
  TensorT<T> padded = TensorT<T>::zeros({xs.n, ph, pw, xs.c});
  for (int n = 0; n < xs.n; ++n)
    for (int y = 0; y < xs.h; ++y)
      for (int x2 = 0; x2 < xs.w; ++x2)
        for (int c = 0; c < xs.c; ++c)
          padded.mutable_data()[padded.offset(n, y + effh, x2 + effw, c)] =
              x.at(n, y, x2, c);

  TensorT<T> out(Shape{xs.n, oh, ow, ks.c});
  for (int n = 0; n < xs.n; ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int co = 0; co < ks.c; ++co) {
          T acc = b.empty() ? T(0) : b.data()[co];
          for (int ky = 0; ky < ks.n; ++ky) {
            for (int kx = 0; kx < ks.h; ++kx) {
              const int iy = oy * sp.stride_y - pby + ky * sp.dil_y + effh;
              const int ix = ox * sp.stride_x - pbx + kx * sp.dil_x + effw;
              for (int ci = 0; ci < ks.w; ++ci) {
                acc += padded.at(n, iy, ix, ci) * k.at(ky, kx, ci, co);
              }
            }
          }
          out.mutable_data()[out.offset(n, oy, ox, co)] = acc;
        }
      }
    }
  }
  return out;
}

constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("conv2d output dims") {
  // same: ceil(in/stride); none: (in - eff)/stride + 1
  CHECK(conv_out_dim(5, 3, 2, 1, Padding::kSame) == 3);
  CHECK(conv_out_dim(6, 3, 2, 1, Padding::kSame) == 3);
  CHECK(conv_out_dim(7, 3, 1, 1, Padding::kSame) == 7);
  CHECK(conv_out_dim(5, 3, 2, 1, Padding::kNone) == 2);
  CHECK(conv_out_dim(7, 3, 1, 2, Padding::kNone) == 3);
  CHECK(conv_pad_begin(5, 3, 1, 1, Padding::kSame) == 1);
  CHECK(conv_pad_begin(5, 3, 2, 1, Padding::kSame) == 1);  // total 2, split 1+1
  CHECK(conv_pad_begin(5, 3, 1, 1, Padding::kNone) == 0);
  CHECK_THROWS_AS(conv_out_dim(2, 3, 1, 1, Padding::kNone),
                  std::invalid_argument);
}

TEST_CASE("1x1 identity kernel reproduces the input") {
  Rng rng(1);
  Tensor x = random_tensor<float>({2, 4, 5, 3}, rng);
  Tensor k = Tensor::zeros({1, 1, 3, 3});
  for (int c = 0; c < 3; ++c) k.mutable_data()[k.offset(0, 0, c, c)] = 1.0f;
  Tensor y = conv2d(x, k, Tensor());
  CHECK(y.shape() == x.shape());
  CHECK(max_abs_diff(x, y) == 0.0f);
}

TEST_CASE("box kernel on a constant image") {
  Tensor x = Tensor::full({1, 5, 5, 1}, 2.0f);
  Tensor k = Tensor::full({3, 3, 1, 1}, 1.0f);
  Tensor b = Tensor::vec({0.5f});
  Tensor y = conv2d(x, k, b);
  CHECK(y.shape() == Shape{1, 5, 5, 1});
  CHECK(y.at(0, 2, 2, 0) == doctest::Approx(18.5f));  // 9 taps inside
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(8.5f));   // corner sees 4
}

TEST_CASE("conv2d matches the naive reference") {
  Rng rng(42);
  struct Case {
    Shape xs, ks;
    Conv2dSpec sp;
  };
  std::vector<Case> cases;
  cases.push_back({{2, 7, 6, 3}, {3, 3, 3, 4}, {}});
  cases.push_back({{1, 9, 9, 2}, {3, 3, 2, 2}, {2, 2, 1, 1, Padding::kSame}});
  cases.push_back({{1, 8, 5, 2}, {3, 3, 2, 3}, {1, 1, 2, 2, Padding::kSame}});
  cases.push_back({{1, 8, 5, 2}, {3, 3, 2, 3}, {1, 1, 3, 3, Padding::kSame}});
  cases.push_back({{2, 7, 7, 1}, {3, 3, 1, 2}, {1, 1, 1, 1, Padding::kNone}});
  cases.push_back({{1, 10, 9, 2}, {2, 4, 2, 2}, {3, 2, 1, 1, Padding::kSame}});
  cases.push_back({{1, 9, 9, 1}, {3, 3, 1, 1}, {2, 2, 2, 2, Padding::kNone}});
  cases.push_back({{1, 4, 4, 5}, {1, 1, 5, 7}, {}});
  for (const Case& c : cases) {
    Tensor x = random_tensor<float>(c.xs, rng);
    Tensor k = random_tensor<float>(c.ks, rng);
    Tensor b = random_tensor<float>({1, 1, 1, c.ks.c}, rng);
    Tensor got = conv2d(x, k, b, c.sp);
    Tensor want = conv_naive(x, k, b, c.sp);
    CHECK(got.shape() == want.shape());
    CHECK(max_abs_diff(got, want) < 2e-5f);
    Tensor no_bias = conv2d(x, k, Tensor(), c.sp);
    Tensor want_nb = conv_naive(x, k, Tensor(), c.sp);
    CHECK(max_abs_diff(no_bias, want_nb) < 2e-5f);
  }
}

TEST_CASE("conv2d validates shapes") {
  Tensor x = Tensor::zeros({1, 4, 4, 2});
  Tensor k = Tensor::zeros({3, 3, 3, 4});  // wrong in_ch
  CHECK_THROWS_AS(conv2d(x, k, Tensor()), std::invalid_argument);
  Tensor k2 = Tensor::zeros({3, 3, 2, 4});
  Tensor bad_bias = Tensor::zeros({1, 1, 1, 3});
  CHECK_THROWS_AS(conv2d(x, k2, bad_bias), std::invalid_argument);
}

TEST_CASE("conv2d gradients agree with finite differences") {
  Rng rng(7);
  TensorD x = random_tensor<double>({1, 5, 4, 2}, rng);
  TensorD k = random_tensor<double>({3, 3, 2, 3}, rng);
  TensorD b = random_tensor<double>({1, 1, 1, 3}, rng);

  for (Conv2dSpec sp : {Conv2dSpec{}, Conv2dSpec{2, 2, 1, 1, Padding::kSame},
                        Conv2dSpec{1, 1, 1, 1, Padding::kNone},
                        Conv2dSpec{1, 2, 2, 1, Padding::kSame}}) {
    // weight the outputs so the upstream gradient varies per position
    const Shape os{1, conv_out_dim(5, 3, sp.stride_y, sp.dil_y, sp.pad),
                   conv_out_dim(4, 3, sp.stride_x, sp.dil_x, sp.pad), 3};
    TensorD w = random_tensor<double>(os, rng);
    auto f = [&sp, &w](TapeD& t, const std::vector<TensorD>& in) {
      return sum(mul_elementwise(conv2d(in[0], in[1], in[2], sp), w));
    };
    auto res = grad_check(f, {x, k, b}, 1e-5);
    INFO(res.str());
    CHECK(res.ok(kTol));
  }
}

#ifdef _OPENMP
TEST_CASE("conv2d results do not depend on the thread count") {
  Rng rng(9);
  Tensor x = random_tensor<float>({2, 16, 16, 4}, rng);
  Tensor k = random_tensor<float>({3, 3, 4, 8}, rng);
  Tensor b = random_tensor<float>({1, 1, 1, 8}, rng);
  const int saved = omp_get_max_threads();

  omp_set_num_threads(1);
  Tensor y1 = conv2d(x, k, b);
  omp_set_num_threads(4);
  Tensor y4 = conv2d(x, k, b);
  CHECK(bitwise_equal(y1, y4));

  // and the backward pass
  auto run = [&]() {
    Tape tape;
    Tensor lx = tape.leaf(x), lk = tape.leaf(k), lb = tape.leaf(b);
    auto grads = tape.backward(sum(conv2d(lx, lk, lb)));
    return std::make_pair(grads.at(lx.node()), grads.at(lk.node()));
  };
  omp_set_num_threads(1);
  auto g1 = run();
  omp_set_num_threads(4);
  auto g4 = run();
  CHECK(bitwise_equal(g1.first, g4.first));
  CHECK(bitwise_equal(g1.second, g4.second));
  omp_set_num_threads(saved);
}
#endif

TEST_CASE("fully_connected is a matrix product per batch row") {
  TensorD x(Shape{2, 1, 1, 3});
  const double xv[] = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 6; ++i) x.mutable_data()[i] = xv[i];
  TensorD w(Shape{1, 1, 3, 2});
  const double wv[] = {1, 0, 0, 1, 1, 1};  // rows: cin, cols: cout
  for (int i = 0; i < 6; ++i) w.mutable_data()[i] = wv[i];
  TensorD b = TensorD::vec({10.0, 20.0});
  TensorD y = fully_connected(x, w, b);
  CHECK(y.shape() == Shape{2, 1, 1, 2});
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(1 + 3 + 10));
  CHECK(y.at(0, 0, 0, 1) == doctest::Approx(2 + 3 + 20));
  CHECK(y.at(1, 0, 0, 0) == doctest::Approx(4 + 6 + 10));
  CHECK(y.at(1, 0, 0, 1) == doctest::Approx(5 + 6 + 20));

  Tensor bad(Shape{1, 2, 2, 3});
  CHECK_THROWS_AS(
      fully_connected(bad, Tensor::zeros({1, 1, 3, 2}), Tensor()),
      std::invalid_argument);
}

TEST_CASE("global_avg_pool means and spreads gradient evenly") {
  TensorD x(Shape{1, 2, 2, 2});
  for (std::size_t i = 0; i < x.size(); ++i) {
    x.mutable_data()[i] = static_cast<double>(i);
  }
  TensorD y = global_avg_pool(x);
  CHECK(y.shape() == Shape{1, 1, 1, 2});
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx((0 + 2 + 4 + 6) / 4.0));
  CHECK(y.at(0, 0, 0, 1) == doctest::Approx((1 + 3 + 5 + 7) / 4.0));

  Rng rng(3);
  TensorD xr = random_tensor<double>({2, 3, 4, 3}, rng);
  TensorD w = random_tensor<double>({2, 1, 1, 3}, rng);
  auto res = grad_check(
      [&w](TapeD& t, const std::vector<TensorD>& in) {
        return sum(mul_elementwise(global_avg_pool(in[0]), w));
      },
      {xr}, 1e-5);
  INFO(res.str());
  CHECK(res.ok(kTol));
}

TEST_CASE("pixel_shuffle follows the indexing rule") {
  // one pixel, 4 channels, r=2 -> 2x2 spatial
  TensorD x(Shape{1, 1, 1, 4});
  for (int i = 0; i < 4; ++i) x.mutable_data()[i] = 10.0 * (i + 1);
  TensorD y = pixel_shuffle(x, 2);
  CHECK(y.shape() == Shape{1, 2, 2, 1});
  CHECK(y.at(0, 0, 0, 0) == 10.0);  // c*r^2 + dy*r + dx = 0
  CHECK(y.at(0, 0, 1, 0) == 20.0);
  CHECK(y.at(0, 1, 0, 0) == 30.0);
  CHECK(y.at(0, 1, 1, 0) == 40.0);

  CHECK_THROWS_AS(pixel_shuffle(TensorD::zeros({1, 2, 2, 3}), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(pixel_unshuffle(TensorD::zeros({1, 3, 4, 1}), 2),
                  std::invalid_argument);
}

TEST_CASE("pixel_unshuffle inverts pixel_shuffle") {
  Rng rng(5);
  TensorD x = random_tensor<double>({2, 4, 6, 8}, rng);
  CHECK(bitwise_equal(pixel_shuffle(pixel_unshuffle(x, 2), 2), x));
  CHECK(bitwise_equal(pixel_unshuffle(pixel_shuffle(x, 2), 2), x));

  // permutation ops: gradient also checks out numerically
  TensorD w = random_tensor<double>({2, 8, 12, 2}, rng);
  auto res = grad_check(
      [&w](TapeD& t, const std::vector<TensorD>& in) {
        return sum(mul_elementwise(pixel_shuffle(in[0], 2), w));
      },
      {x}, 1e-5);
  INFO(res.str());
  CHECK(res.ok(kTol));
  TensorD w2 = random_tensor<double>({2, 2, 3, 32}, rng);
  auto res2 = grad_check(
      [&w2](TapeD& t, const std::vector<TensorD>& in) {
        return sum(mul_elementwise(pixel_unshuffle(in[0], 2), w2));
      },
      {x}, 1e-5);
  INFO(res2.str());
  CHECK(res2.ok(kTol));
}

TEST_CASE("he_uniform bound and determinism") {
  Rng a(123), b(123);
  Tensor w1 = he_uniform<float>({3, 3, 16, 8}, a);
  Tensor w2 = he_uniform<float>({3, 3, 16, 8}, b);
  CHECK(bitwise_equal(w1, w2));
  const float bound = std::sqrt(6.0f / (3 * 3 * 16));
  float mn = 0, mx = 0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    mn = std::min(mn, w1.data()[i]);
    mx = std::max(mx, w1.data()[i]);
  }
  CHECK(mn >= -bound);
  CHECK(mx < bound);
  // with 1152 draws the extremes should come close to the bound
  CHECK(mx > 0.8f * bound);
  CHECK(mn < -0.8f * bound);
}
