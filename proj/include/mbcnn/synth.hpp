#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mbcnn/rng.hpp"
#include "mbcnn/tensor.hpp"

namespace mbcnn {

// Per-channel color degradation x -> clamp(a * x^g + b).
struct ToneCurve {
  std::array<double, 3> gain{1, 1, 1};
  std::array<double, 3> gamma{1, 1, 1};
  std::array<double, 3> offset{0, 0, 0};
};

// One cosine fringe component. Rendered on a grid downscaled by 2^scale and
// bilinearly upsampled, so `freq` is cycles per pixel of the render grid.
struct Grating {
  int scale = 0;
  double orientation = 0.0;  // radians in [0, pi)
  double freq = 0.1;         // [0.02, 0.45]
  double phase = 0.0;        // [0, 2pi)
  double curvature = 0.0;    // [0, 0.002], quadratic phase warp
  std::array<double, 3> amp{0, 0, 0};  // [0.02, 0.15] per channel
};

struct DegradationParams {
  ToneCurve tone;
  std::vector<Grating> gratings;
};

// No-op degradation: identity tone curve, no gratings.
DegradationParams identity_params();

// Random parameters, every field inside its documented range. Up to 3
// scales with 1..2 components each.
DegradationParams sample_params(Rng& rng);

Tensor tone_map(const Tensor& img, const ToneCurve& tone);

// Sum of the grating fields at the given image size, channels = 3.
// shape (1, h, w, 3).
Tensor moire_field(int h, int w, const std::vector<Grating>& gratings);

struct MoirePair {
  Tensor clean;
  Tensor moire;
  std::uint64_t seed = 0;
  DegradationParams params;
};

// moire = clamp01(tone_map(clean) + moire_field), parameters drawn from the
// seed. Bitwise reproducible.
MoirePair synth_pair(const Tensor& clean, std::uint64_t seed);
MoirePair synth_pair_with(const Tensor& clean, const DegradationParams& params,
                          std::uint64_t seed);

// Procedural clean image: smooth gradient plus random rectangles and a
// checkerboard patch. Values in [0,1].
Tensor procedural_clean(int h, int w, Rng& rng);

// n procedurally generated pairs of size h x w, seeds derived from `seed`.
std::vector<MoirePair> make_dataset(int n, int h, int w, std::uint64_t seed);

}  // namespace mbcnn
