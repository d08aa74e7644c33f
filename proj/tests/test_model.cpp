#include "doctest.h"
#include "mbcnn/gradcheck.hpp"
#include "mbcnn/model.hpp"
#include "mbcnn/ops.hpp"

#include <set>
#include <stdexcept>
#include <vector>

using namespace mbcnn;

namespace {

template <typename T>
TensorT<T> random_image(Shape s, Rng& rng) {
  TensorT<T> t(s);
  T* p = t.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    p[i] = static_cast<T>(rng.uniform(0.0, 1.0));
  }
  return t;
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>*>> named_params(ModelT<T>& m) {
  std::vector<std::pair<std::string, TensorT<T>*>> out;
  visit_params(m, "", [&out](const std::string& n, TensorT<T>& t) {
    out.emplace_back(n, &t);
  });
  return out;
}

}  // namespace

TEST_CASE("presets") {
  ArchConfig a = arch_preset("mbcnn");
  CHECK(a.n_g == 128);
  CHECK(a.n_d == 64);
  CHECK(a.k == 5);
  CHECK(a.p == 8);
  ArchConfig b = arch_preset("mbcnn-light");
  CHECK(b.n_g == 64);
  CHECK(b.n_d == 32);
  CHECK(b.k == 5);
  ArchConfig c = arch_preset("tiny");
  CHECK(c.n_g == 16);
  CHECK(c.n_d == 8);
  CHECK(c.k == 3);
  CHECK(c.dilations == std::vector<int>{1, 2, 1});
  CHECK_THROWS_AS(arch_preset("huge"), std::invalid_argument);

  ArchConfig bad = arch_preset("tiny");
  bad.dilations = {1, 2};
  CHECK_THROWS_AS(validate_config(bad), std::invalid_argument);
  bad = arch_preset("tiny");
  bad.c = 1;
  CHECK_THROWS_AS(validate_config(bad), std::invalid_argument);
}

TEST_CASE("same seed builds identical models, larger preset has more params") {
  Model a = build_model<float>(arch_preset("tiny"), 11);
  Model b = build_model<float>(arch_preset("tiny"), 11);
  Model c = build_model<float>(arch_preset("tiny"), 12);
  auto pa = named_params(a);
  auto pb = named_params(b);
  CHECK(pa.size() == pb.size());
  bool all_equal = true, any_diff_seed = false;
  auto pc = named_params(c);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!bitwise_equal(*pa[i].second, *pb[i].second)) all_equal = false;
    if (!bitwise_equal(*pa[i].second, *pc[i].second)) any_diff_seed = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
  CHECK(param_count(a) == param_count(c));

  Model full = build_model<float>(arch_preset("mbcnn"), 1);
  Model light = build_model<float>(arch_preset("mbcnn-light"), 1);
  CHECK(param_count(full) > param_count(light));
  CHECK(param_count(light) > param_count(a));
}

TEST_CASE("block census and unique non-aliased parameter names") {
  Model m = build_model<float>(arch_preset("tiny"), 3);
  auto params = named_params(m);
  std::set<std::string> names;
  std::set<const float*> buffers;
  int mtrbs = 0, gtmbs = 0, ltmbs = 0, decoders = 0;
  for (auto& [n, t] : params) {
    CHECK(names.insert(n).second);  // unique
    CHECK(buffers.insert(t->data()).second);  // no aliasing
    if (n.ends_with("/passband")) ++mtrbs;
    if (n.ends_with("/cr_g1/kernel")) ++gtmbs;
    if (n.ends_with("/cr_l/kernel")) ++ltmbs;
    if (n.ends_with("/decoder/conv/kernel")) ++decoders;
  }
  CHECK(mtrbs == 5);
  CHECK(gtmbs == 5);
  CHECK(ltmbs == 3);
  CHECK(decoders == 3);
  CHECK(names.count("branch1/entry/kernel") == 1);
  CHECK(names.count("branch1/mtrb2/fsl") == 1);
  CHECK(names.count("branch3/ltmb/cr_l/bias") == 1);
}

TEST_CASE("forward pyramid shapes over valid sizes") {
  Model m = build_model<float>(arch_preset("tiny"), 5);
  Rng rng(100);
  for (auto [h, w] : std::vector<std::pair<int, int>>{
           {64, 64}, {16, 16}, {24, 40}, {48, 16}, {32, 56}}) {
    Tensor x = random_image<float>({1, h, w, 3}, rng);
    auto out = model_forward(m, x);
    CHECK(out.z1.shape() == Shape{1, h, w, 3});
    CHECK(out.z2.shape() == Shape{1, h / 2, w / 2, 3});
    CHECK(out.z3.shape() == Shape{1, h / 4, w / 4, 3});
  }
  CHECK_THROWS_AS(model_forward(m, random_image<float>({1, 20, 32, 3}, rng)),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_forward(m, random_image<float>({1, 8, 8, 3}, rng)),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_forward(m, random_image<float>({1, 16, 16, 1}, rng)),
                  std::invalid_argument);
}

TEST_CASE("forward is deterministic") {
  Model m = build_model<float>(arch_preset("tiny"), 6);
  Rng rng(101);
  Tensor x = random_image<float>({2, 16, 24, 3}, rng);
  auto a = model_forward(m, x);
  auto b = model_forward(m, x);
  CHECK(bitwise_equal(a.z1, b.z1));
  CHECK(bitwise_equal(a.z2, b.z2));
  CHECK(bitwise_equal(a.z3, b.z3));
}

TEST_CASE("no-lp ablation is a no-op on a fresh model and freezes passbands") {
  Model m = build_model<float>(arch_preset("tiny"), 7);
  Model abl = ablate(m, "no-lp");
  Rng rng(102);
  Tensor x = random_image<float>({1, 16, 16, 3}, rng);
  CHECK(bitwise_equal(model_forward(m, x).z1, model_forward(abl, x).z1));
  CHECK(abl.frozen.size() == 5);
  for (const auto& n : abl.frozen) CHECK(n.ends_with("/passband"));
  CHECK(m.frozen.empty());

  Model again = ablate(abl, "no-lp");
  CHECK(again.frozen == abl.frozen);
  CHECK(bitwise_equal(model_forward(again, x).z1, model_forward(abl, x).z1));
  CHECK_THROWS_AS(ablate(m, "no-gtmb"), std::invalid_argument);
}

TEST_CASE("no-mtrb ablation equals deleting the MTRBs") {
  Model m = build_model<float>(arch_preset("tiny"), 8);
  Model abl = ablate(m, "no-mtrb");
  CHECK(abl.frozen.size() == 5);
  Rng rng(103);
  Tensor x = random_image<float>({1, 16, 24, 3}, rng);
  auto got = model_forward(abl, x);

  // identity-spliced oracle: the same pipeline with no MTRB calls
  Tensor f1 = apply_layer(m.b1.entry, pixel_unshuffle(x, 2));
  Tensor f2 = apply_layer(m.b2.entry, f1);
  Tensor f3 = apply_layer(m.b3.entry, f2);
  Tensor z3 = upsample_decode(
      ltmb_forward(gtmb_forward(f3, m.b3.gtmb1), m.b3.ltmb), m.b3.decoder);
  Tensor fused2 = apply_layer(m.b2.fuse, concat_channels<float>({f2, z3}));
  Tensor t2 = gtmb_forward(gtmb_forward(fused2, m.b2.gtmb1), m.b2.gtmb2);
  Tensor z2 = upsample_decode(ltmb_forward(t2, m.b2.ltmb), m.b2.decoder);
  Tensor fused1 = apply_layer(m.b1.fuse, concat_channels<float>({f1, z2}));
  Tensor t1 = gtmb_forward(gtmb_forward(fused1, m.b1.gtmb1), m.b1.gtmb2);
  Tensor z1 = upsample_decode(ltmb_forward(t1, m.b1.ltmb), m.b1.decoder);

  CHECK(max_abs_diff(got.z3, z3) <= 1e-6f);
  CHECK(max_abs_diff(got.z2, z2) <= 1e-6f);
  CHECK(max_abs_diff(got.z1, z1) <= 1e-6f);
}

TEST_CASE("self_ensemble averages the four rotated runs") {
  Model m = build_model<float>(arch_preset("tiny"), 9);
  Rng rng(104);
  Tensor x = random_image<float>({1, 16, 16, 3}, rng);
  Tensor ens = self_ensemble(m, x);
  CHECK(ens.shape() == x.shape());

  Tensor want = model_forward(m, x).z1;
  Tensor r1 = rot90(model_forward(m, rot90(x, 1)).z1, 3);
  Tensor r2 = rot90(model_forward(m, rot90(x, 2)).z1, 2);
  Tensor r3 = rot90(model_forward(m, rot90(x, 3)).z1, 1);
  for (std::size_t i = 0; i < want.size(); ++i) {
    const float mean = (want.data()[i] + r1.data()[i] + r2.data()[i] +
                        r3.data()[i]) / 4.0f;
    CHECK(ens.data()[i] == doctest::Approx(mean).epsilon(1e-6));
  }

  CHECK_THROWS_AS(self_ensemble(m, random_image<float>({1, 16, 24, 3}, rng)),
                  std::invalid_argument);
}

TEST_CASE("constant-output model makes the ensemble collapse to one run") {
  Model m = build_model<float>(arch_preset("tiny"), 10);
  visit_params(m, "", [](const std::string& n, Tensor& t) {
    if (n.ends_with("/decoder/conv/kernel")) t = Tensor::zeros(t.shape());
    if (n.ends_with("/decoder/conv/bias")) t = Tensor::full(t.shape(), 0.3f);
  });
  Rng rng(105);
  Tensor x = random_image<float>({1, 16, 16, 3}, rng);
  Tensor single = model_forward(m, x).z1;
  Tensor ens = self_ensemble(m, x);
  CHECK(max_abs_diff(single, ens) == 0.0f);
  for (std::size_t i = 0; i < ens.size(); ++i) CHECK(ens.data()[i] == 0.3f);
}

TEST_CASE("tracked model reproduces inference and routes gradients") {
  Model m = build_model<float>(arch_preset("tiny"), 13);
  Rng rng(106);
  Tensor x = random_image<float>({1, 16, 16, 3}, rng);
  Tensor plain = model_forward(m, x).z1;

  Tape tape;
  Model tracked = track_params(m, tape);
  auto out = model_forward(tracked, tape.leaf(x));
  CHECK(bitwise_equal(out.z1, plain));

  auto grads = tape.backward(sum(out.z1));
  // the loss sits on the finest output; even branch 3 must receive signal
  double mag = 0.0;
  const Tensor& g = grads.at(tracked.b3.mtrb1.passband.node());
  for (std::size_t i = 0; i < g.size(); ++i) mag += std::abs(g.data()[i]);
  CHECK(mag > 0.0);
  const Tensor& gf = grads.at(tracked.b1.mtrb2.fsl.node());
  CHECK(gf.size() == 1);
  CHECK(gf.data()[0] != 0.0f);
}

TEST_CASE("cast_model promotes parameters exactly") {
  Model m = build_model<float>(arch_preset("tiny"), 14);
  ModelD d = cast_model<double>(m);
  auto pf = named_params(m);
  auto pd = named_params(d);
  REQUIRE(pf.size() == pd.size());
  for (std::size_t i = 0; i < pf.size(); ++i) {
    CHECK(pf[i].first == pd[i].first);
    REQUIRE(pf[i].second->size() == pd[i].second->size());
    for (std::size_t j = 0; j < pf[i].second->size(); ++j) {
      CHECK(static_cast<double>(pf[i].second->data()[j]) ==
            pd[i].second->data()[j]);
    }
  }
  Rng rng(107);
  Tensor x = random_image<float>({1, 16, 16, 3}, rng);
  Tensor zf = model_forward(m, x).z1;
  TensorD zd = model_forward(d, x.cast<double>()).z1;
  CHECK(max_abs_diff(zd.cast<float>(), zf) < 1e-3f);
}

TEST_CASE("full model gradient on a miniature config") {
  ArchConfig cfg;
  cfg.p = 2;
  cfg.n_g = 4;
  cfg.n_d = 2;
  cfg.k = 1;
  cfg.dilations = {1};
  cfg.preset = "custom";
  ModelD m = build_model<double>(cfg, 15);
  Rng rng(108);
  TensorD x = random_image<double>({1, 16, 16, 3}, rng);
  TensorD w(Shape{1, 16, 16, 3});
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.mutable_data()[i] = rng.uniform(-1.0, 1.0);
  }
  auto res = grad_check(
      [&m, &w](TapeD& tape, const std::vector<TensorD>& in) {
        ModelD tracked = track_params(m, tape);
        tracked.b1.mtrb2.passband = in[0];
        tracked.b1.mtrb2.fsl = in[1];
        tracked.b2.fuse.kernel = in[2];
        tracked.b3.decoder.conv.bias = in[3];
        auto out = model_forward(tracked, in[4]);
        return sum(mul_elementwise(out.z1, w));
      },
      {m.b1.mtrb2.passband, m.b1.mtrb2.fsl, m.b2.fuse.kernel,
       m.b3.decoder.conv.bias, x},
      1e-5);
  INFO(res.str());
  CHECK(res.ok(1e-5));
}
