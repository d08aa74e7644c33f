#include "doctest.h"
#include "mbcnn/blocks.hpp"
#include "mbcnn/gradcheck.hpp"
#include "mbcnn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace mbcnn;

namespace {

template <typename T>
TensorT<T> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorT<T> t(s);
  T* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    p[i] = static_cast<T>(rng.uniform(lo, hi));
  }
  return t;
}

template <typename P>
void zero_kernels(P& params) {
  visit_params(params, "", [](const std::string& name, auto& t) {
    if (name.ends_with("/kernel")) {
      auto* p = t.mutable_data();
      for (std::size_t i = 0; i < t.size(); ++i) p[i] = 0;
    }
  });
}

}  // namespace

TEST_CASE("dense block widths") {
  Rng rng(1);
  auto p = make_dense_block<float>(8, 64, {1, 2, 3, 2, 1}, rng);
  Tensor x = random_tensor<float>({1, 6, 6, 8}, rng);
  Tensor y = dense_block(x, p);
  CHECK(y.shape() == Shape{1, 6, 6, 328});
  CHECK_THROWS_AS(dense_block(random_tensor<float>({1, 6, 6, 9}, rng), p),
                  std::invalid_argument);
}

TEST_CASE("dense block keeps the input as its first channels") {
  Rng rng(2);
  auto p = make_dense_block<float>(4, 3, {1, 2, 1}, rng);
  Tensor x = random_tensor<float>({1, 5, 5, 4}, rng);
  Tensor y = dense_block(x, p);
  CHECK(y.shape().c == 13);
  for (int yy = 0; yy < 5; ++yy)
    for (int xx = 0; xx < 5; ++xx)
      for (int c = 0; c < 4; ++c)
        CHECK(y.at(0, yy, xx, c) == x.at(0, yy, xx, c));
}

TEST_CASE("dense block with zero kernels appends zeros") {
  Rng rng(3);
  auto p = make_dense_block<float>(2, 3, {1}, rng);
  zero_kernels(p);
  Tensor x = random_tensor<float>({1, 4, 4, 2}, rng);
  Tensor y = dense_block(x, p);
  CHECK(y.shape().c == 5);
  for (int yy = 0; yy < 4; ++yy)
    for (int xx = 0; xx < 4; ++xx)
      for (int c = 2; c < 5; ++c) CHECK(y.at(0, yy, xx, c) == 0.0f);
}

TEST_CASE("dense block receptive field matches the dilation sum") {
  // rho = (1,2,3,2,1): an impulse can reach at most 9 pixels out
  Rng rng(4);
  auto p = make_dense_block<float>(1, 3, {1, 2, 3, 2, 1}, rng);
  Tensor x = Tensor::zeros({1, 25, 25, 1});
  x.mutable_data()[x.offset(0, 12, 12, 0)] = 1.0f;
  Tensor y = dense_block(x, p);
  float beyond = 0.0f, inside = 0.0f;
  for (int yy = 0; yy < 25; ++yy) {
    for (int xx = 0; xx < 25; ++xx) {
      const int d = std::max(std::abs(yy - 12), std::abs(xx - 12));
      for (int c = 1; c < y.shape().c; ++c) {
        const float v = std::abs(y.at(0, yy, xx, c));
        if (d > 9) beyond = std::max(beyond, v);
        else inside += v;
      }
    }
  }
  CHECK(beyond == 0.0f);
  CHECK(inside > 0.0f);
}

TEST_CASE("mtrb with zero fsl is the identity") {
  Rng rng(5);
  auto basis = std::make_shared<const DctBasis>(dct_matrix(4));
  auto p = make_mtrb<float>(6, 4, {1, 2, 1}, basis, rng);
  p.fsl = Tensor::scalar(0.0f);
  Tensor x = random_tensor<float>({1, 8, 8, 6}, rng);
  Tensor y = mtrb_forward(x, p);
  CHECK(bitwise_equal(x, y));
}

TEST_CASE("mtrb folding equals explicit scale-then-idct") {
  Rng rng(6);
  auto basis = std::make_shared<const DctBasis>(dct_matrix(4));
  auto p = make_mtrb<float>(6, 4, {1, 2, 1}, basis, rng);
  float* th = p.passband.mutable_data();
  for (int i = 0; i < 16; ++i) th[i] = static_cast<float>(rng.uniform(0.0, 2.0));
  Tensor x = random_tensor<float>({1, 8, 8, 6}, rng);
  Tensor y = mtrb_forward(x, p);
  CHECK(y.shape() == x.shape());

  // spelled out: theta (.) xi, then the plain idct kernel
  Tensor xi = apply_layer(p.c_m1, dense_block(x, p.dense));
  Tensor scaled = mul_elementwise(xi, p.passband);
  Tensor blocks = conv2d(scaled, idct_as_kernel<float>(*basis), Tensor());
  Tensor want = add(x, scale(apply_layer(p.c_m2, blocks), p.fsl));
  CHECK(max_abs_diff(y, want) < 1e-6f);
}

TEST_CASE("mtrb end-to-end gradient") {
  Rng rng(7);
  auto basis = std::make_shared<const DctBasis>(dct_matrix(2));
  auto pf = make_mtrb<double>(4, 3, {1, 2}, basis, rng);
  TensorD x = random_tensor<double>({1, 6, 6, 4}, rng);
  TensorD w = random_tensor<double>({1, 6, 6, 4}, rng);
  auto res = grad_check(
      [&pf, &w](TapeD& tape, const std::vector<TensorD>& in) {
        auto tracked = track_params(pf, tape);
        tracked.c_m1.kernel = in[0];
        tracked.passband = in[1];
        tracked.fsl = in[2];
        return sum(mul_elementwise(mtrb_forward(in[3], tracked), w));
      },
      {pf.c_m1.kernel, pf.passband, pf.fsl, x}, 1e-5);
  INFO(res.str());
  CHECK(res.ok(1e-6));
}

TEST_CASE("gtmb parameter count for the published table") {
  Rng rng(8);
  auto p = make_gtmb<float>(128, 128, rng);
  CHECK(param_count(p) == 1280384);
}

TEST_CASE("gtmb with unit gamma degenerates to its local path") {
  Rng rng(9);
  auto p = make_gtmb<float>(6, 4, rng);
  zero_kernels(p);  // re-randomize only the local path below
  Rng rng2(10);
  p.cr_g2 = make_conv<float>(1, 1, 6, 8, Conv2dSpec{}, true, rng2);
  p.cr_g3 = make_conv<float>(1, 1, 8, 4, Conv2dSpec{}, true, rng2);
  float* fb = p.fc.bias.mutable_data();
  for (int i = 0; i < 8; ++i) fb[i] = 1.0f;  // gamma == ones

  Tensor x = random_tensor<float>({1, 8, 8, 6}, rng);
  Tensor y = gtmb_forward(x, p);
  Tensor want = apply_layer(p.cr_g3, apply_layer(p.cr_g2, x));
  CHECK(y.shape() == Shape{1, 8, 8, 4});
  CHECK(max_abs_diff(y, want) == 0.0f);
}

TEST_CASE("gtmb shape contract and input checks") {
  Rng rng(11);
  auto p = make_gtmb<float>(6, 4, rng);
  Tensor x = random_tensor<float>({2, 16, 16, 6}, rng);
  CHECK(gtmb_forward(x, p).shape() == Shape{2, 16, 16, 4});
  // odd sizes ride on same-padding in the strided conv
  CHECK(gtmb_forward(random_tensor<float>({1, 7, 8, 6}, rng), p).shape() ==
        Shape{1, 7, 8, 4});
  CHECK_THROWS_AS(gtmb_forward(random_tensor<float>({1, 1, 8, 6}, rng), p),
                  std::invalid_argument);
}

TEST_CASE("gamma ignores spatial shuffles once cr_g1 is pointwise") {
  Rng rng(12);
  auto p = make_gtmb<float>(3, 4, rng);
  p.cr_g1 = make_conv<float>(1, 1, 3, 8, Conv2dSpec{}, true, rng);
  Tensor x = random_tensor<float>({1, 6, 6, 3}, rng);
  Tensor g0 = gtmb_gamma(x, p);
  Tensor g1 = gtmb_gamma(rot90(x, 1), p);
  CHECK(g0.shape() == Shape{1, 1, 1, 8});
  CHECK(max_abs_diff(g0, g1) < 1e-5f);
}

TEST_CASE("gtmb end-to-end gradient") {
  Rng rng(13);
  auto pf = make_gtmb<double>(3, 2, rng);
  TensorD x = random_tensor<double>({1, 4, 4, 3}, rng);
  TensorD w = random_tensor<double>({1, 4, 4, 2}, rng);
  auto res = grad_check(
      [&pf, &w](TapeD& tape, const std::vector<TensorD>& in) {
        auto tracked = track_params(pf, tape);
        tracked.fc.kernel = in[0];
        tracked.cr_g1.kernel = in[1];
        return sum(mul_elementwise(gtmb_forward(in[2], tracked), w));
      },
      {pf.fc.kernel, pf.cr_g1.kernel, x}, 1e-5);
  INFO(res.str());
  CHECK(res.ok(1e-6));
}

TEST_CASE("ltmb preserves shape and passes gradients") {
  Rng rng(14);
  auto p = make_ltmb<float>(6, 4, {1, 2, 1}, rng);
  Tensor x = random_tensor<float>({1, 8, 8, 6}, rng);
  CHECK(ltmb_forward(x, p).shape() == x.shape());

  auto pd = make_ltmb<double>(4, 3, {1, 2}, rng);
  TensorD xd = random_tensor<double>({1, 5, 5, 4}, rng);
  TensorD w = random_tensor<double>({1, 5, 5, 4}, rng);
  auto res = grad_check(
      [&pd, &w](TapeD& tape, const std::vector<TensorD>& in) {
        auto tracked = track_params(pd, tape);
        tracked.cr_l.kernel = in[0];
        tracked.dense.layers[0].kernel = in[1];
        return sum(mul_elementwise(ltmb_forward(in[2], tracked), w));
      },
      {pd.cr_l.kernel, pd.dense.layers[0].kernel, xd}, 1e-5);
  INFO(res.str());
  CHECK(res.ok(1e-6));
}

TEST_CASE("ltmb can pass its input straight through") {
  Rng rng(15);
  auto p = make_ltmb<float>(3, 2, {1, 2}, rng);
  zero_kernels(p);
  // cr_l input is (x | layer outputs); select the x part with unit taps
  float* k = p.cr_l.kernel.mutable_data();
  const int deep = 3 + 2 * 2;
  for (int c = 0; c < 3; ++c) k[c * 3 + c] = 1.0f;  // (1,1,deep,3)
  (void)deep;
  Tensor x = random_tensor<float>({1, 5, 5, 3}, rng, 0.1, 1.0);
  Tensor y = ltmb_forward(x, p);
  CHECK(bitwise_equal(y, x));
}

TEST_CASE("decoder upscales to image channels") {
  Rng rng(16);
  auto p = make_decoder<float>(6, 3, rng);
  Tensor x = random_tensor<float>({1, 8, 8, 6}, rng);
  Tensor y = upsample_decode(x, p);
  CHECK(y.shape() == Shape{1, 16, 16, 3});

  zero_kernels(p);
  float* b = p.conv.bias.mutable_data();
  for (int i = 0; i < 12; ++i) b[i] = 0.5f;
  Tensor flat = upsample_decode(x, p);
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat.data()[i] == 0.5f);
}

TEST_CASE("decoder gradient reaches its kernel") {
  Rng rng(17);
  auto p = make_decoder<double>(4, 3, rng);
  TensorD x = random_tensor<double>({1, 4, 4, 4}, rng);
  TapeD tape;
  auto tracked = track_params(p, tape);
  auto grads = tape.backward(sum(upsample_decode(x, tracked)));
  const TensorD& gk = grads.at(tracked.conv.kernel.node());
  double mag = 0.0;
  for (std::size_t i = 0; i < gk.size(); ++i) mag += std::abs(gk.data()[i]);
  CHECK(mag > 0.0);
}

TEST_CASE("visit_params names and track_params round trip") {
  Rng rng(18);
  auto basis = std::make_shared<const DctBasis>(dct_matrix(2));
  auto p = make_mtrb<float>(4, 3, {1, 2}, basis, rng);
  std::vector<std::string> names;
  std::size_t total = 0;
  visit_params(p, "mtrb1", [&](const std::string& n, Tensor& t) {
    names.push_back(n);
    total += t.size();
  });
  CHECK(param_count(p) == total);
  CHECK(names.front() == "mtrb1/dense/conv1/kernel");
  bool has_passband = false, has_fsl = false;
  for (const auto& n : names) {
    if (n == "mtrb1/passband") has_passband = true;
    if (n == "mtrb1/fsl") has_fsl = true;
  }
  CHECK(has_passband);
  CHECK(has_fsl);

  Tape tape;
  auto tracked = track_params(p, tape);
  CHECK(tracked.passband.tracked());
  CHECK(tracked.fsl.tracked());
  CHECK_FALSE(p.passband.tracked());
  Tensor x = random_tensor<float>({1, 4, 4, 4}, rng);
  CHECK(bitwise_equal(mtrb_forward(x, p), mtrb_forward(x, tracked)));
}
