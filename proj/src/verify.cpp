#include "mbcnn/verify.hpp"

#include <memory>

#include "mbcnn/blocks.hpp"
#include "mbcnn/dct.hpp"
#include "mbcnn/gradcheck.hpp"
#include "mbcnn/layers.hpp"
#include "mbcnn/losses.hpp"
#include "mbcnn/ops.hpp"
#include "mbcnn/rng.hpp"

namespace mbcnn {
namespace {

TensorD rand_t(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(s);
  double* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i)
    p[i] = lo + (hi - lo) * rng.uniform();
  return t;
}

// zhat staying a fixed distance from z keeps |zhat - z| away from the
// absolute-value kink within the finite-difference step.
TensorD offset_from(const TensorD& z, Rng& rng) {
  TensorD t = z;
  double* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = 0.1 + 0.8 * rng.uniform();
    p[i] += rng.uniform() < 0.5 ? -d : d;
  }
  return t;
}

struct Suite {
  std::vector<VerifyResult> results;
  Rng rng{20240811};

  void check(const std::string& name, const GradCheckFn& f,
             const std::vector<TensorD>& inputs) {
    GradCheckResult r = grad_check(f, inputs, 1e-5);
    results.push_back({name, r.max_rel_err, r.ok(kVerifyTol)});
  }

  // Probes the forward output once to fix a weighting tensor, then checks
  // the gradient of sum(weight * forward(inputs)). The weighting keeps the
  // upstream gradient non-uniform.
  template <typename Fwd>
  void check_weighted(const std::string& name, Fwd&& fwd,
                      const std::vector<TensorD>& inputs) {
    const TensorD probe = rand_t(fwd(inputs).shape(), rng);
    check(name,
          [fwd, probe](TapeD&, const std::vector<TensorD>& in) {
            return sum(mul_elementwise(fwd(in), probe));
          },
          inputs);
  }
};

void op_checks(Suite& s) {
  Rng& rng = s.rng;
  TensorD a = rand_t({2, 3, 4, 2}, rng);
  TensorD b = rand_t({2, 3, 4, 2}, rng);

  s.check_weighted("op/add",
                   [](const std::vector<TensorD>& in) {
                     return add(in[0], in[1]);
                   },
                   {a, b});
  s.check_weighted("op/scale",
                   [](const std::vector<TensorD>& in) {
                     return scale(in[0], in[1]);
                   },
                   {a, rand_t({1, 1, 1, 1}, rng)});
  s.check_weighted("op/scale_by",
                   [](const std::vector<TensorD>& in) {
                     return scale_by(in[0], 0.37);
                   },
                   {a});
  s.check_weighted("op/relu",
                   [](const std::vector<TensorD>& in) { return relu(in[0]); },
                   {offset_from(TensorD::zeros({2, 3, 4, 2}), rng)});
  s.check_weighted("op/mul_elementwise",
                   [](const std::vector<TensorD>& in) {
                     return mul_elementwise(in[0], in[1]);
                   },
                   {a, b});
  s.check_weighted("op/mul_broadcast",
                   [](const std::vector<TensorD>& in) {
                     return mul_elementwise(in[0], in[1]);
                   },
                   {a, rand_t({2, 1, 1, 2}, rng)});
  s.check_weighted("op/concat_channels",
                   [](const std::vector<TensorD>& in) {
                     return concat_channels(std::vector<TensorD>{in[0], in[1]});
                   },
                   {a, rand_t({2, 3, 4, 3}, rng)});
  s.check("op/sum",
          [](TapeD&, const std::vector<TensorD>& in) { return sum(in[0]); },
          {a});
}

void layer_checks(Suite& s) {
  Rng& rng = s.rng;
  TensorD x = rand_t({2, 6, 6, 3}, rng);
  TensorD k = rand_t({3, 3, 3, 4}, rng, -0.5, 0.5);
  TensorD bias = rand_t({1, 1, 1, 4}, rng);

  auto conv_check = [&](const std::string& name, Conv2dSpec spec) {
    s.check_weighted(name,
                     [spec](const std::vector<TensorD>& in) {
                       return conv2d(in[0], in[1], in[2], spec);
                     },
                     {x, k, bias});
  };
  conv_check("layer/conv2d_same", {});
  conv_check("layer/conv2d_valid", {1, 1, 1, 1, Padding::kNone});
  conv_check("layer/conv2d_stride2", {2, 2, 1, 1, Padding::kSame});
  conv_check("layer/conv2d_dilated", {1, 1, 2, 2, Padding::kSame});

  s.check_weighted("layer/conv2d_no_bias",
                   [](const std::vector<TensorD>& in) {
                     return conv2d(in[0], in[1], TensorD());
                   },
                   {x, k});
  s.check_weighted("layer/fully_connected",
                   [](const std::vector<TensorD>& in) {
                     return fully_connected(in[0], in[1], in[2]);
                   },
                   {rand_t({2, 1, 1, 5}, rng), rand_t({1, 1, 5, 3}, rng),
                    rand_t({1, 1, 1, 3}, rng)});
  s.check_weighted("layer/global_avg_pool",
                   [](const std::vector<TensorD>& in) {
                     return global_avg_pool(in[0]);
                   },
                   {x});
  s.check_weighted("layer/pixel_shuffle",
                   [](const std::vector<TensorD>& in) {
                     return pixel_shuffle(in[0], 2);
                   },
                   {rand_t({1, 3, 3, 4}, rng)});
  s.check_weighted("layer/pixel_unshuffle",
                   [](const std::vector<TensorD>& in) {
                     return pixel_unshuffle(in[0], 2);
                   },
                   {rand_t({1, 4, 4, 2}, rng)});

  auto basis = std::make_shared<const DctBasis>(dct_matrix(2));
  s.check_weighted("layer/fold_passband",
                   [basis](const std::vector<TensorD>& in) {
                     return fold_passband(in[0], *basis);
                   },
                   {rand_t({1, 1, 1, 4}, rng, 0.1, 2.0)});
}

void block_checks(Suite& s) {
  Rng& rng = s.rng;
  auto basis = std::make_shared<const DctBasis>(dct_matrix(2));

  {
    auto p = make_dense_block<double>(4, 3, {1, 2}, rng);
    s.check_weighted("block/dense",
                     [p](const std::vector<TensorD>& in) {
                       auto t = p;
                       t.layers[0].kernel = in[0];
                       t.layers[1].bias = in[1];
                       return dense_block(in[2], t);
                     },
                     {p.layers[0].kernel, p.layers[1].bias,
                      rand_t({1, 5, 5, 4}, rng)});
  }
  {
    auto p = make_mtrb<double>(4, 3, {1, 2}, basis, rng);
    s.check_weighted("block/mtrb",
                     [p](const std::vector<TensorD>& in) {
                       auto t = p;
                       t.passband = in[0];
                       t.fsl = in[1];
                       t.c_m1.kernel = in[2];
                       return mtrb_forward(in[3], t);
                     },
                     {p.passband, p.fsl, p.c_m1.kernel,
                      rand_t({1, 6, 6, 4}, rng)});
  }
  {
    auto p = make_gtmb<double>(3, 2, rng);
    s.check_weighted("block/gtmb",
                     [p](const std::vector<TensorD>& in) {
                       auto t = p;
                       t.fc.kernel = in[0];
                       t.cr_g1.kernel = in[1];
                       return gtmb_forward(in[2], t);
                     },
                     {p.fc.kernel, p.cr_g1.kernel, rand_t({1, 4, 4, 3}, rng)});
  }
  {
    auto p = make_ltmb<double>(4, 3, {1, 2}, rng);
    s.check_weighted("block/ltmb",
                     [p](const std::vector<TensorD>& in) {
                       auto t = p;
                       t.cr_l.kernel = in[0];
                       t.dense.layers[0].kernel = in[1];
                       return ltmb_forward(in[2], t);
                     },
                     {p.cr_l.kernel, p.dense.layers[0].kernel,
                      rand_t({1, 5, 5, 4}, rng)});
  }
  {
    auto p = make_decoder<double>(4, 3, rng);
    s.check_weighted("block/decoder",
                     [p](const std::vector<TensorD>& in) {
                       auto t = p;
                       t.conv.kernel = in[0];
                       t.conv.bias = in[1];
                       return upsample_decode(in[2], t);
                     },
                     {p.conv.kernel, p.conv.bias, rand_t({1, 3, 3, 4}, rng)});
  }
}

void loss_checks(Suite& s) {
  Rng& rng = s.rng;
  TensorD z = rand_t({1, 6, 6, 3}, rng, 0.0, 1.0);
  TensorD zh = offset_from(z, rng);

  s.check("loss/l1",
          [z](TapeD&, const std::vector<TensorD>& in) {
            return l1_loss(in[0], z);
          },
          {zh});
  s.check("loss/sobel",
          [z](TapeD&, const std::vector<TensorD>& in) {
            return sobel_loss(in[0], z);
          },
          {zh});
  s.check("loss/asl",
          [z](TapeD&, const std::vector<TensorD>& in) {
            return asl_loss(in[0], z);
          },
          {zh});
  s.check("loss/combined",
          [z](TapeD&, const std::vector<TensorD>& in) {
            return combined_loss(in[0], z, {LossVariant::kL1Asl, 0.25});
          },
          {zh});

  TensorD gt = rand_t({1, 4, 4, 3}, rng, 0.0, 1.0);
  s.check("loss/multiscale",
          [gt](TapeD&, const std::vector<TensorD>& in) {
            ScalePyramidT<double> outs{in[0], in[1], in[2]};
            return multiscale_loss(outs, gt, {LossVariant::kL1, 0.0});
          },
          {offset_from(gt, rng), offset_from(avg_pool(gt, 2), rng),
           offset_from(avg_pool(gt, 4), rng)});
}

}  // namespace

std::vector<VerifyResult> run_verification() {
  Suite s;
  op_checks(s);
  layer_checks(s);
  block_checks(s);
  loss_checks(s);
  return s.results;
}

bool all_passed(const std::vector<VerifyResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

}  // namespace mbcnn
