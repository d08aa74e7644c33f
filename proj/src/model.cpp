#include "mbcnn/model.hpp"

#include <stdexcept>

#include "mbcnn/ops.hpp"

namespace mbcnn {

ArchConfig arch_preset(const std::string& name) {
  ArchConfig cfg;
  cfg.preset = name;
  if (name == "mbcnn") {
    cfg.n_g = 128;
    cfg.n_d = 64;
    cfg.k = 5;
    cfg.dilations = {1, 2, 3, 2, 1};
  } else if (name == "mbcnn-light") {
    cfg.n_g = 64;
    cfg.n_d = 32;
    cfg.k = 5;
    cfg.dilations = {1, 2, 3, 2, 1};
  } else if (name == "tiny") {
    cfg.n_g = 16;
    cfg.n_d = 8;
    cfg.k = 3;
    cfg.dilations = {1, 2, 1};
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return cfg;
}

void validate_config(const ArchConfig& cfg) {
  if (cfg.c != 3) throw std::invalid_argument("config: c must be 3");
  if (cfg.p < 2 || cfg.p > 16) throw std::invalid_argument("config: p must be in [2,16]");
  if (cfg.n_g < 1 || cfg.n_d < 1 || cfg.k < 1) {
    throw std::invalid_argument("config: widths must be positive");
  }
  if (static_cast<int>(cfg.dilations.size()) != cfg.k) {
    throw std::invalid_argument("config: need exactly K dilation rates");
  }
  for (int d : cfg.dilations) {
    if (d < 1) throw std::invalid_argument("config: dilations must be >= 1");
  }
}

template <typename T>
ModelT<T> build_model(const ArchConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  ModelT<T> m;
  m.cfg = cfg;
  m.basis = std::make_shared<const DctBasis>(dct_matrix(cfg.p));
  Rng rng(seed);

  // Draw in pipeline order: entry sections first, then coarse-to-fine tails.
  m.b1.entry = make_conv<T>(3, 3, 4 * cfg.c, cfg.n_g, Conv2dSpec{}, true, rng);
  m.b1.mtrb1 = make_mtrb<T>(cfg.n_g, cfg.n_d, cfg.dilations, m.basis, rng);
  Conv2dSpec stride2;
  stride2.stride_y = stride2.stride_x = 2;
  m.b2.entry = make_conv<T>(3, 3, cfg.n_g, cfg.n_g, stride2, true, rng);
  m.b2.mtrb1 = make_mtrb<T>(cfg.n_g, cfg.n_d, cfg.dilations, m.basis, rng);
  m.b3.entry = make_conv<T>(3, 3, cfg.n_g, cfg.n_g, stride2, true, rng);
  m.b3.mtrb1 = make_mtrb<T>(cfg.n_g, cfg.n_d, cfg.dilations, m.basis, rng);

  m.b3.has_fusion = false;
  m.b3.gtmb1 = make_gtmb<T>(cfg.n_g, cfg.n_g, rng);
  m.b3.ltmb = make_ltmb<T>(cfg.n_g, cfg.n_d, cfg.dilations, rng);
  m.b3.decoder = make_decoder<T>(cfg.n_g, cfg.c, rng);

  m.b2.has_fusion = true;
  m.b2.fuse = make_conv<T>(1, 1, cfg.n_g + cfg.c, cfg.n_g, Conv2dSpec{}, true, rng);
  m.b2.gtmb1 = make_gtmb<T>(cfg.n_g, cfg.n_g, rng);
  m.b2.mtrb2 = make_mtrb<T>(cfg.n_g, cfg.n_d, cfg.dilations, m.basis, rng);
  m.b2.gtmb2 = make_gtmb<T>(cfg.n_g, cfg.n_g, rng);
  m.b2.ltmb = make_ltmb<T>(cfg.n_g, cfg.n_d, cfg.dilations, rng);
  m.b2.decoder = make_decoder<T>(cfg.n_g, cfg.c, rng);

  m.b1.has_fusion = true;
  m.b1.fuse = make_conv<T>(1, 1, cfg.n_g + cfg.c, cfg.n_g, Conv2dSpec{}, true, rng);
  m.b1.gtmb1 = make_gtmb<T>(cfg.n_g, cfg.n_g, rng);
  m.b1.mtrb2 = make_mtrb<T>(cfg.n_g, cfg.n_d, cfg.dilations, m.basis, rng);
  m.b1.gtmb2 = make_gtmb<T>(cfg.n_g, cfg.n_g, rng);
  m.b1.ltmb = make_ltmb<T>(cfg.n_g, cfg.n_d, cfg.dilations, rng);
  m.b1.decoder = make_decoder<T>(cfg.n_g, cfg.c, rng);
  return m;
}

namespace {

// post-fusion tail shared by branches 1 and 2
template <typename T>
TensorT<T> branch_tail(const BranchT<T>& b, const TensorT<T>& mtrb_out,
                       const TensorT<T>& coarse_image) {
  TensorT<T> fused =
      apply_layer(b.fuse, concat_channels<T>({mtrb_out, coarse_image}));
  TensorT<T> t = gtmb_forward(fused, b.gtmb1);
  t = mtrb_forward(t, b.mtrb2);
  t = gtmb_forward(t, b.gtmb2);
  t = ltmb_forward(t, b.ltmb);
  return upsample_decode(t, b.decoder);
}

}  // namespace

template <typename T>
ScalePyramidT<T> model_forward(const ModelT<T>& m, const TensorT<T>& image) {
  const Shape s = image.shape();
  if (s.c != m.cfg.c) {
    throw std::invalid_argument("forward: expected " + std::to_string(m.cfg.c) +
                                " channels");
  }
  if (s.h % 8 != 0 || s.w % 8 != 0 || s.h < 16 || s.w < 16) {
    throw std::invalid_argument(
        "forward: spatial dims must be multiples of 8, at least 16");
  }

  TensorT<T> x0 = pixel_unshuffle(image, 2);
  TensorT<T> m1 = mtrb_forward(apply_layer(m.b1.entry, x0), m.b1.mtrb1);
  TensorT<T> m2 = mtrb_forward(apply_layer(m.b2.entry, m1), m.b2.mtrb1);
  TensorT<T> m3 = mtrb_forward(apply_layer(m.b3.entry, m2), m.b3.mtrb1);

  TensorT<T> t3 = ltmb_forward(gtmb_forward(m3, m.b3.gtmb1), m.b3.ltmb);
  ScalePyramidT<T> out;
  out.z3 = upsample_decode(t3, m.b3.decoder);
  out.z2 = branch_tail(m.b2, m2, out.z3);
  out.z1 = branch_tail(m.b1, m1, out.z2);
  return out;
}

template <typename T>
ModelT<T> ablate(const ModelT<T>& m, const std::string& mode) {
  if (mode != "no-lp" && mode != "no-mtrb") {
    throw std::invalid_argument("ablate: mode must be no-lp or no-mtrb");
  }
  ModelT<T> out = m;
  visit_params(out, "", [&](const std::string& name, TensorT<T>& t) {
    if (mode == "no-lp" && name.ends_with("/passband")) {
      t = TensorT<T>::full(t.shape(), T(1));
      out.frozen.insert(name);
    } else if (mode == "no-mtrb" && name.ends_with("/fsl")) {
      t = TensorT<T>::zeros(t.shape());
      out.frozen.insert(name);
    }
  });
  return out;
}

template <typename T>
TensorT<T> self_ensemble(const ModelT<T>& m, const TensorT<T>& image) {
  const Shape s = image.shape();
  if (s.h != s.w) {
    throw std::invalid_argument("self_ensemble: input must be square");
  }
  TensorT<T> acc = model_forward(m, image).z1.detached();
  for (int k = 1; k < 4; ++k) {
    TensorT<T> zk = rot90(model_forward(m, rot90(image, k)).z1, 4 - k);
    accumulate(acc, zk);
  }
  TensorT<T> out(acc.shape());
  T* po = out.mutable_data();
  const T* pa = acc.data();
  for (std::size_t i = 0; i < out.size(); ++i) po[i] = pa[i] / T(4);
  return out;
}

template <typename T>
ModelT<T> cast_model(const Model& m) {
  ModelT<T> out = build_model<T>(m.cfg, 0);
  out.frozen = m.frozen;
  std::vector<const Tensor*> src;
  Model mutable_src = m;
  visit_params(mutable_src, "",
               [&src](const std::string&, Tensor& t) { src.push_back(&t); });
  std::size_t i = 0;
  visit_params(out, "", [&](const std::string&, TensorT<T>& t) {
    t = src.at(i++)->template cast<T>();
  });
  return out;
}

#define MBCNN_INSTANTIATE_MODEL(T)                                         \
  template ModelT<T> build_model<T>(const ArchConfig&, std::uint64_t);     \
  template ScalePyramidT<T> model_forward(const ModelT<T>&,                \
                                          const TensorT<T>&);              \
  template ModelT<T> ablate(const ModelT<T>&, const std::string&);         \
  template TensorT<T> self_ensemble(const ModelT<T>&, const TensorT<T>&);

MBCNN_INSTANTIATE_MODEL(float)
MBCNN_INSTANTIATE_MODEL(double)

template ModelT<float> cast_model<float>(const Model&);
template ModelT<double> cast_model<double>(const Model&);

}  // namespace mbcnn
