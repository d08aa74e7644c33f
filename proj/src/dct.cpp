#include "mbcnn/dct.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mbcnn/tape.hpp"

namespace mbcnn {

DctBasis dct_matrix(int p) {
  if (p < 2 || p > 16) {
    throw std::invalid_argument("dct_matrix: p must be in [2, 16]");
  }
  DctBasis b;
  b.p = p;
  b.factor.resize(static_cast<std::size_t>(p) * p);
  const double pi = std::acos(-1.0);
  for (int k = 0; k < p; ++k) {
    const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / p);
    for (int n = 0; n < p; ++n) {
      b.factor[static_cast<std::size_t>(k) * p + n] =
          alpha * std::cos(pi * (2 * n + 1) * k / (2.0 * p));
    }
  }
  const int pp = p * p;
  b.m.resize(static_cast<std::size_t>(pp) * pp);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      const int s = r * p + c;
      for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) {
          const int f = u * p + v;
          b.m[static_cast<std::size_t>(s) * pp + f] =
              b.factor[static_cast<std::size_t>(u) * p + r] *
              b.factor[static_cast<std::size_t>(v) * p + c];
        }
      }
    }
  }
  return b;
}

template <typename T>
TensorT<T> idct_as_kernel(const DctBasis& basis) {
  const int pp = basis.p * basis.p;
  TensorT<T> k(Shape{1, 1, pp, pp});
  T* pk = k.mutable_data();
  for (int f = 0; f < pp; ++f) {
    for (int s = 0; s < pp; ++s) {
      pk[static_cast<std::size_t>(f) * pp + s] = static_cast<T>(basis.at(s, f));
    }
  }
  return k;
}

template <typename T>
TensorT<T> fold_passband(const TensorT<T>& theta, const DctBasis& basis) {
  const int pp = basis.p * basis.p;
  if (!(theta.shape() == Shape{1, 1, 1, pp})) {
    throw std::invalid_argument("fold_passband: theta must be (1,1,1,p^2)");
  }
  const T* pt = theta.data();
  for (int f = 0; f < pp; ++f) {
    if (pt[f] < T(0)) {
      throw std::invalid_argument(
          "fold_passband: negative passband weight; project in the optimizer");
    }
  }

  TensorT<T> k(Shape{1, 1, pp, pp});
  T* pk = k.mutable_data();
  for (int f = 0; f < pp; ++f) {
    const T th = pt[f];
    for (int s = 0; s < pp; ++s) {
      pk[static_cast<std::size_t>(f) * pp + s] =
          th * static_cast<T>(basis.at(s, f));
    }
  }

  if (!theta.tracked()) return k;
  const int nt = theta.node();
  const DctBasis bcopy = basis;
  return theta.tape()->emit(
      std::move(k), [nt, bcopy, pp](const TensorT<T>& up, GradSinkT<T>& sink) {
        TensorT<T> gt(Shape{1, 1, 1, pp});
        T* pg = gt.mutable_data();
        const T* pu = up.data();
        for (int f = 0; f < pp; ++f) {
          T acc = T(0);
          for (int s = 0; s < pp; ++s) {
            acc += pu[static_cast<std::size_t>(f) * pp + s] *
                   static_cast<T>(bcopy.at(s, f));
          }
          pg[f] = acc;
        }
        sink.add(nt, std::move(gt));
      });
}

template <typename T>
TensorT<T> make_passband(int p, T init) {
  return TensorT<T>::full(Shape{1, 1, 1, p * p}, init);
}

void write_passband_pgm(const std::string& path, const Tensor& theta, int p) {
  const int pp = p * p;
  if (theta.size() != static_cast<std::size_t>(pp)) {
    throw std::invalid_argument("write_passband_pgm: theta size != p^2");
  }
  const float* pt = theta.data();
  float mn = pt[0], mx = pt[0];
  for (int i = 1; i < pp; ++i) {
    mn = std::min(mn, pt[i]);
    mx = std::max(mx, pt[i]);
  }
  const float range = mx - mn;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << p << " " << p << "\n255\n";
  for (int i = 0; i < pp; ++i) {
    const float norm = range > 0 ? (pt[i] - mn) / range : 0.0f;
    out.put(static_cast<char>(
        static_cast<unsigned char>(std::lround(norm * 255.0f))));
  }
}

void write_passband_csv(const std::string& path, const Tensor& theta, int p) {
  const int pp = p * p;
  if (theta.size() != static_cast<std::size_t>(pp)) {
    throw std::invalid_argument("write_passband_csv: theta size != p^2");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(9);
  const float* pt = theta.data();
  for (int u = 0; u < p; ++u) {
    for (int v = 0; v < p; ++v) {
      if (v) out << ",";
      out << pt[u * p + v];
    }
    out << "\n";
  }
}

Tensor read_passband_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<float> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) vals.push_back(std::stof(cell));
  }
  Tensor t(Shape{1, 1, 1, static_cast<int>(vals.size())});
  std::copy(vals.begin(), vals.end(), t.mutable_data());
  return t;
}

#define MBCNN_INSTANTIATE_DCT(T)                                        \
  template TensorT<T> idct_as_kernel<T>(const DctBasis&);               \
  template TensorT<T> fold_passband(const TensorT<T>&, const DctBasis&); \
  template TensorT<T> make_passband<T>(int, T);

MBCNN_INSTANTIATE_DCT(float)
MBCNN_INSTANTIATE_DCT(double)

}  // namespace mbcnn
