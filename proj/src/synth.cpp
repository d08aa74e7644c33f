#include "mbcnn/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace mbcnn {
namespace {

constexpr double kPi = 3.14159265358979323846;

// bilinear resample of a single plane to h x w, half-pixel centers
std::vector<double> upsample_plane(const std::vector<double>& src, int hs,
                                   int ws, int h, int w) {
  std::vector<double> out(std::size_t(h) * w);
  for (int y = 0; y < h; ++y) {
    double sy = (y + 0.5) * hs / double(h) - 0.5;
    if (sy < 0) sy = 0;
    if (sy > hs - 1) sy = hs - 1;
    const int y0 = static_cast<int>(sy);
    const int y1 = y0 + 1 < hs ? y0 + 1 : y0;
    const double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      double sx = (x + 0.5) * ws / double(w) - 0.5;
      if (sx < 0) sx = 0;
      if (sx > ws - 1) sx = ws - 1;
      const int x0 = static_cast<int>(sx);
      const int x1 = x0 + 1 < ws ? x0 + 1 : x0;
      const double fx = sx - x0;
      const double top = src[std::size_t(y0) * ws + x0] * (1 - fx) +
                         src[std::size_t(y0) * ws + x1] * fx;
      const double bot = src[std::size_t(y1) * ws + x0] * (1 - fx) +
                         src[std::size_t(y1) * ws + x1] * fx;
      out[std::size_t(y) * w + x] = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

std::vector<double> render_grating(const Grating& g, int h, int w) {
  const int m = 1 << g.scale;
  const int hs = (h + m - 1) / m;
  const int ws = (w + m - 1) / m;
  std::vector<double> plane(std::size_t(hs) * ws);
  const double cy = (hs - 1) / 2.0;
  const double cx = (ws - 1) / 2.0;
  const double co = std::cos(g.orientation);
  const double si = std::sin(g.orientation);
  for (int y = 0; y < hs; ++y) {
    const double yc = y - cy;
    for (int x = 0; x < ws; ++x) {
      const double xc = x - cx;
      const double arg = 2.0 * kPi * g.freq * (xc * co + yc * si) +
                         g.curvature * (xc * xc + yc * yc) + g.phase;
      plane[std::size_t(y) * ws + x] = std::cos(arg);
    }
  }
  if (m == 1) return plane;
  return upsample_plane(plane, hs, ws, h, w);
}

}  // namespace

DegradationParams identity_params() { return {}; }

DegradationParams sample_params(Rng& rng) {
  DegradationParams p;
  for (int ch = 0; ch < 3; ++ch) {
    p.tone.gain[ch] = rng.uniform(0.8, 1.2);
    p.tone.gamma[ch] = rng.uniform(0.7, 1.4);
    p.tone.offset[ch] = rng.uniform(-0.05, 0.05);
  }
  const int scales = 1 + int(rng.uniform_int(3));  // 1..3
  for (int s = 0; s < scales; ++s) {
    const int comps = 1 + int(rng.uniform_int(2));  // 1..2
    for (int f = 0; f < comps; ++f) {
      Grating g;
      g.scale = s;
      g.orientation = rng.uniform(0.0, kPi);
      g.freq = rng.uniform(0.02, 0.45);
      g.phase = rng.uniform(0.0, 2.0 * kPi);
      g.curvature = rng.uniform(0.0, 0.002);
      for (int ch = 0; ch < 3; ++ch) g.amp[ch] = rng.uniform(0.02, 0.15);
      p.gratings.push_back(g);
    }
  }
  return p;
}

Tensor tone_map(const Tensor& img, const ToneCurve& tone) {
  if (img.shape().c != 3) {
    throw std::invalid_argument("tone_map: expected 3 channels");
  }
  Tensor out(img.shape());
  float* po = out.mutable_data();
  const float* pi = img.data();
  const Shape s = img.shape();
  for (int ch = 0; ch < 3; ++ch) {
    const double a = tone.gain[ch];
    const double g = tone.gamma[ch];
    const double b = tone.offset[ch];
    const bool identity = a == 1.0 && g == 1.0 && b == 0.0;
    for (int n = 0; n < s.n; ++n) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          const std::size_t at = img.offset(n, y, x, ch);
          if (identity) {
            po[at] = pi[at];
            continue;
          }
          double v = a * std::pow(double(pi[at]), g) + b;
          if (v < 0.0) v = 0.0;
          if (v > 1.0) v = 1.0;
          po[at] = static_cast<float>(v);
        }
      }
    }
  }
  return out;
}

Tensor moire_field(int h, int w, const std::vector<Grating>& gratings) {
  if (h < 1 || w < 1) throw std::invalid_argument("moire_field: empty size");
  std::vector<double> acc(std::size_t(h) * w * 3, 0.0);
  for (const Grating& g : gratings) {
    if (g.scale < 0 || g.scale > 4) {
      throw std::invalid_argument("moire_field: scale out of range");
    }
    const std::vector<double> plane = render_grating(g, h, w);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      for (int ch = 0; ch < 3; ++ch) acc[i * 3 + ch] += g.amp[ch] * plane[i];
    }
  }
  Tensor out(Shape{1, h, w, 3});
  float* po = out.mutable_data();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    po[i] = static_cast<float>(acc[i]);
  }
  return out;
}

MoirePair synth_pair_with(const Tensor& clean, const DegradationParams& params,
                          std::uint64_t seed) {
  if (clean.shape().c != 3 || clean.shape().n != 1) {
    throw std::invalid_argument("synth_pair: clean must be (1,h,w,3)");
  }
  Tensor moire = tone_map(clean, params.tone);
  if (!params.gratings.empty()) {
    Tensor field = moire_field(clean.shape().h, clean.shape().w,
                               params.gratings);
    accumulate(moire, field);
    moire = clamp01(moire);
  }
  return {clean, moire, seed, params};
}

MoirePair synth_pair(const Tensor& clean, std::uint64_t seed) {
  Rng rng(seed);
  return synth_pair_with(clean, sample_params(rng), seed);
}

Tensor procedural_clean(int h, int w, Rng& rng) {
  Tensor img(Shape{1, h, w, 3});
  float* p = img.mutable_data();

  // smooth two-corner gradient
  std::array<double, 3> c0, c1;
  for (int ch = 0; ch < 3; ++ch) {
    c0[ch] = rng.uniform(0.0, 1.0);
    c1[ch] = rng.uniform(0.0, 1.0);
  }
  const double mix = rng.uniform(0.0, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = mix * (w > 1 ? x / double(w - 1) : 0.0) +
                       (1.0 - mix) * (h > 1 ? y / double(h - 1) : 0.0);
      for (int ch = 0; ch < 3; ++ch) {
        p[img.offset(0, y, x, ch)] =
            static_cast<float>(c0[ch] + (c1[ch] - c0[ch]) * t);
      }
    }
  }

  // text-like rectangles
  const int rects = 1 + int(rng.uniform_int(3));
  for (int r = 0; r < rects; ++r) {
    const int rh = 1 + int(rng.uniform_int(std::max(1, h / 6)));
    const int rw = 1 + int(rng.uniform_int(std::max(1, w / 6)));
    const int y0 = int(rng.uniform_int(std::max(1, h - rh)));
    const int x0 = int(rng.uniform_int(std::max(1, w - rw)));
    std::array<float, 3> col;
    for (int ch = 0; ch < 3; ++ch) {
      col[ch] = static_cast<float>(rng.uniform(0.0, 1.0));
    }
    for (int y = y0; y < y0 + rh && y < h; ++y) {
      for (int x = x0; x < x0 + rw && x < w; ++x) {
        for (int ch = 0; ch < 3; ++ch) p[img.offset(0, y, x, ch)] = col[ch];
      }
    }
  }

  // checkerboard patch: the high-frequency content moire interacts with
  const int cell = 3 + int(rng.uniform_int(4));
  const int ph = h / 6 + int(rng.uniform_int(std::max(1, h / 6)));
  const int pw = w / 6 + int(rng.uniform_int(std::max(1, w / 6)));
  const int py = int(rng.uniform_int(std::max(1, h - ph + 1)));
  const int px = int(rng.uniform_int(std::max(1, w - pw + 1)));
  std::array<float, 3> ca, cb;
  for (int ch = 0; ch < 3; ++ch) {
    ca[ch] = static_cast<float>(rng.uniform(0.0, 1.0));
    cb[ch] = static_cast<float>(rng.uniform(0.0, 1.0));
  }
  for (int y = py; y < py + ph && y < h; ++y) {
    for (int x = px; x < px + pw && x < w; ++x) {
      const bool odd = ((y / cell) + (x / cell)) % 2 != 0;
      for (int ch = 0; ch < 3; ++ch) {
        p[img.offset(0, y, x, ch)] = odd ? ca[ch] : cb[ch];
      }
    }
  }
  return clamp01(img);
}

std::vector<MoirePair> make_dataset(int n, int h, int w, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");
  std::vector<MoirePair> out;
  out.reserve(n);
  Rng root(seed);
  for (int i = 0; i < n; ++i) {
    Rng img_rng = root.child(2 * std::uint64_t(i));
    Tensor clean = procedural_clean(h, w, img_rng);
    const std::uint64_t pair_seed = root.child(2 * std::uint64_t(i) + 1).next();
    out.push_back(synth_pair(clean, pair_seed));
  }
  return out;
}

}  // namespace mbcnn
