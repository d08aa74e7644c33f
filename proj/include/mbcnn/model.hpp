#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mbcnn/blocks.hpp"

namespace mbcnn {

struct ArchConfig {
  int c = 3;    // image channels
  int p = 8;    // block-IDCT size
  int n_g = 128;
  int n_d = 64;
  int k = 5;
  std::vector<int> dilations = {1, 2, 3, 2, 1};
  std::string preset = "mbcnn";
};

// "mbcnn", "mbcnn-light", "tiny"
ArchConfig arch_preset(const std::string& name);
void validate_config(const ArchConfig& cfg);

// Three-branch pipeline. Branch 1 runs at half input resolution (after the
// x2 unshuffle), branches 2 and 3 at quarter and eighth. Branches 1 and 2
// fuse the next-coarser branch's decoded image back in.
template <typename T>
struct BranchT {
  ConvLayerT<T> entry;     // 3x3 (branch 1) or strided 3x3
  MtrbParamsT<T> mtrb1;
  bool has_fusion = false; // branches 1 and 2 only
  ConvLayerT<T> fuse;      // 1x1, n_G+c -> n_G
  GtmbParamsT<T> gtmb1;
  MtrbParamsT<T> mtrb2;    // fusion branches only
  GtmbParamsT<T> gtmb2;    // fusion branches only
  LtmbParamsT<T> ltmb;
  DecoderParamsT<T> decoder;
};

template <typename T>
struct ModelT {
  ArchConfig cfg;
  std::shared_ptr<const DctBasis> basis;
  BranchT<T> b1, b2, b3;
  std::set<std::string> frozen;  // parameter names excluded from updates
};

using Model = ModelT<float>;
using ModelD = ModelT<double>;

template <typename T>
ModelT<T> build_model(const ArchConfig& cfg, std::uint64_t seed);

template <typename T>
struct ScalePyramidT {
  TensorT<T> z1, z2, z3;  // full, half, quarter resolution images
};

using ScalePyramid = ScalePyramidT<float>;
using ScalePyramidD = ScalePyramidT<double>;

// image (b,h,w,c) with h,w divisible by 8 and >= 16.
template <typename T>
ScalePyramidT<T> model_forward(const ModelT<T>& m, const TensorT<T>& image);

// "no-lp": passbands forced to 1 and frozen. "no-mtrb": fsl scales forced to
// 0 and frozen. Returns a modified copy.
template <typename T>
ModelT<T> ablate(const ModelT<T>& m, const std::string& mode);

// Mean of the four axis-rotated runs (finest output only); square input.
template <typename T>
TensorT<T> self_ensemble(const ModelT<T>& m, const TensorT<T>& image);

template <typename T, typename F>
void visit_params(BranchT<T>& b, const std::string& name, F&& f) {
  visit_params(b.entry, name + "/entry", f);
  visit_params(b.mtrb1, name + "/mtrb1", f);
  if (b.has_fusion) {
    visit_params(b.fuse, name + "/fuse", f);
    visit_params(b.gtmb1, name + "/gtmb1", f);
    visit_params(b.mtrb2, name + "/mtrb2", f);
    visit_params(b.gtmb2, name + "/gtmb2", f);
  } else {
    visit_params(b.gtmb1, name + "/gtmb1", f);
  }
  visit_params(b.ltmb, name + "/ltmb", f);
  visit_params(b.decoder, name + "/decoder", f);
}

template <typename T, typename F>
void visit_params(ModelT<T>& m, const std::string& name, F&& f) {
  const std::string pre = name.empty() ? "" : name + "/";
  visit_params(m.b1, pre + "branch1", f);
  visit_params(m.b2, pre + "branch2", f);
  visit_params(m.b3, pre + "branch3", f);
}

// track_params from blocks.hpp also applies to whole models.

template <typename T>
ModelT<T> cast_model(const Model& m);

}  // namespace mbcnn
